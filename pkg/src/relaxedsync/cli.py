"""Command line: ``relaxedsync run | check | enumerate``.

Exit codes for ``check``: 0 accepted, 1 rejected, 2 search budget or size
cap exceeded, 3 unreadable trace or bad arguments. ``run`` exits 4 when
the structure reports a contract violation or runs out of capacity.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path
from typing import Sequence

from . import checker
from .checker import HistoryTooLarge, SearchBudgetExceeded
from .harness import (
    DEFAULT_BOUND,
    IMPLS,
    SCRIPTS,
    BoundExceeded,
    Program,
    TraceParseError,
    Workload,
    enumerate_schedules,
    has_duplicate_return,
    parse_program,
    parse_trace,
    random_schedule,
    replay,
    run_stress,
)
from .registers import HarnessError
from .specs import IntervalQueueSpec, SeqQueueSpec, SeqStackSpec

EXIT_ACCEPT, EXIT_REJECT, EXIT_BUDGET, EXIT_PARSE, EXIT_HARNESS = 0, 1, 2, 3, 4

# what each implementation is supposed to satisfy
DEFAULT_CONDITION = {
    "seqstack": "lin",
    "setseqstack": "setlin",
    "renstack": "setlin",
    "seqqueue": "lin",
    "setseqqueue": "setlin",
    "naivequeue": "lin",
    "intseqqueue": "intlin",
    "rwintseqqueue": "intlin",
}
NEGATIVE_CONTROLS = {"naivequeue"}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def read_config(path: str | Path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment. Keys use option names."""
    out = {}
    for no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{no}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _spec_for(kind: str, n: int, multiplicity: bool = False, allow_2e: bool = True):
    if kind == "stack":
        return SeqStackSpec()
    if kind == "queue":
        return SeqQueueSpec()
    if kind == "intqueue":
        return IntervalQueueSpec(max(n, 1), multiplicity=multiplicity, allow_2e=allow_2e)
    raise ValueError(f"unknown spec {kind!r}")


def _infer_spec(history: checker.History, condition: str) -> str:
    names = {o.name for o in history.operations}
    if names & {"enq", "deq"}:
        return "intqueue" if condition == "intlin" else "queue"
    if condition == "intlin":
        return "intqueue"
    return "stack"


def decide(history: checker.History, condition: str, spec_kind: str, *, multiplicity: bool = False,
           allow_2e: bool = True, budget: int | None = None):
    """Run one checker; returns a Verdict, or a LemmaReport for ``lemmas``."""
    if condition == "lemmas":
        return checker.check_lemma_properties(history, "queue" if spec_kind != "stack" else "stack", budget=budget)
    if condition == "intlin":
        if spec_kind != "intqueue":
            raise ValueError("intlin needs --spec intqueue")
        spec = _spec_for("intqueue", history.n, multiplicity, allow_2e)
        return checker.check_interval_linearizable(history, spec, budget=budget)
    if spec_kind == "intqueue":
        raise ValueError(f"{condition} needs --spec stack or queue")
    spec = _spec_for(spec_kind, history.n)
    if condition == "lin":
        return checker.check_linearizable(history, spec, budget=budget)
    if condition == "setlin":
        return checker.check_set_linearizable(history, spec, budget=budget)
    raise ValueError(f"unknown condition {condition!r}")


# --- commands ----------------------------------------------------------------


def cmd_run(args: argparse.Namespace) -> int:
    if args.script:
        script = SCRIPTS[args.script]
        if args.impl and args.impl != script.impl:
            print(f"script {args.script} runs on {script.impl}, not {args.impl}", file=sys.stderr)
            return EXIT_PARSE
        out = script.run()
        trace, records = out.trace(), out.records
    elif args.mode == "sim":
        impl = args.impl
        if args.program:
            program = parse_program(args.program)
        else:
            w = Workload(n=args.procs, ops=args.ops, insert_ratio=args.insert_ratio, seed=args.seed)
            program = Program(({p: tuple(c) for p, c in w.calls(IMPLS[impl].kind).items() if c},))
        n = max(args.procs, program.n)
        if args.schedule:
            out = replay(impl, program, [int(s) for s in args.schedule.split(",") if s.strip()], n)
        else:
            out = random_schedule(impl, program, random.Random(args.seed), n)
        trace, records = out.trace(), out.records
    else:
        w = Workload(
            n=args.procs,
            ops=args.ops,
            insert_ratio=args.insert_ratio,
            seed=args.seed,
            log_accesses=bool(args.access_log),
            bulk_scans=not args.access_log,
        )
        res = run_stress(args.impl, w)
        trace, records = res.trace(), res.records
    if args.out:
        Path(args.out).write_text(trace)
    else:
        sys.stdout.write(trace)
    if args.access_log:
        Path(args.access_log).write_text("".join(r.line() + "\n" for r in records))
    return EXIT_ACCEPT


def cmd_check(args: argparse.Namespace) -> int:
    try:
        text = sys.stdin.read() if args.trace == "-" else Path(args.trace).read_text()
        history, _ = parse_trace(text)
    except (OSError, TraceParseError) as exc:
        print(f"cannot read trace: {exc}", file=sys.stderr)
        return EXIT_PARSE
    spec_kind = args.spec or _infer_spec(history, args.condition)
    try:
        verdict = decide(history, args.condition, spec_kind, multiplicity=args.multiplicity,
                         allow_2e=not args.no_2e, budget=args.budget)
    except (SearchBudgetExceeded, HistoryTooLarge) as exc:
        print(f"undecided: {exc}")
        return EXIT_BUDGET
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    sys.stdout.write(verdict.render())
    if isinstance(verdict, checker.LemmaReport):
        return EXIT_ACCEPT if verdict.consistent else EXIT_REJECT
    return EXIT_ACCEPT if verdict.accepted else EXIT_REJECT


def cmd_enumerate(args: argparse.Namespace) -> int:
    program = parse_program(args.program)
    impl = args.impl
    condition = args.condition or DEFAULT_CONDITION[impl]
    kind = IMPLS[impl].kind
    spec_kind = "intqueue" if condition == "intlin" else kind
    multiplicity = impl == "rwintseqqueue"
    n = max(args.procs or 0, program.n)
    fail_fast = impl not in NEGATIVE_CONTROLS and not args.keep_going
    schedules = accepted = rejected = duplicates = 0
    first_bad = None
    try:
        for out in enumerate_schedules(impl, program, bound=args.bound, crashes=args.crashes,
                                       distinct=args.distinct, n=n):
            schedules += 1
            verdict = decide(out.history, condition, spec_kind, multiplicity=multiplicity, budget=args.budget)
            ok = verdict.consistent if isinstance(verdict, checker.LemmaReport) else verdict.accepted
            duplicates += has_duplicate_return(out.history)
            if ok:
                accepted += 1
                continue
            rejected += 1
            if first_bad is None:
                first_bad = out
            if fail_fast:
                break
    except BoundExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (SearchBudgetExceeded, HistoryTooLarge) as exc:
        print(f"undecided: {exc}")
        return EXIT_BUDGET
    print(f"impl: {impl}")
    print(f"program: {program}")
    print(f"condition: {condition}")
    print(f"schedules: {schedules}")
    print(f"accepted: {accepted}")
    print(f"rejected: {rejected}")
    print(f"duplicate returns: {duplicates}")
    if first_bad is not None:
        print(f"first rejected schedule: {','.join(map(str, first_bad.schedule))}")
        sys.stdout.write(first_bad.trace())
    return EXIT_REJECT if rejected else EXIT_ACCEPT


# --- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relaxedsync", description="Relaxed concurrent stacks and queues: run, check, enumerate.")
    parser.add_argument("--config", help="key=value file supplying option defaults")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="execute a workload and write its trace")
    run.add_argument("--impl", choices=sorted(IMPLS))
    run.add_argument("--mode", choices=["live", "sim"], default="live")
    run.add_argument("--procs", type=int, default=1)
    run.add_argument("--ops", type=int, default=10)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--insert-ratio", type=float, default=0.5)
    run.add_argument("--script", choices=sorted(SCRIPTS))
    run.add_argument("--program", help="sim mode: program text, e.g. 'push(1) ; pop | pop'")
    run.add_argument("--schedule", help="sim mode: comma-separated process ids")
    run.add_argument("--out", help="trace file (default: stdout)")
    run.add_argument("--access-log", help="also write the access log here")
    run.set_defaults(func=cmd_run)

    chk = sub.add_parser("check", help="decide a correctness condition for a trace")
    chk.add_argument("trace", help="trace file, or - for stdin")
    chk.add_argument("--condition", choices=["lin", "setlin", "intlin", "lemmas"], default="lin")
    chk.add_argument("--spec", choices=["stack", "queue", "intqueue"])
    chk.add_argument("--multiplicity", action="store_true", help="intqueue: allow several dequeues of one item")
    chk.add_argument("--no-2e", action="store_true", help="intqueue: forbid a weak-empty point on an empty queue")
    chk.add_argument("--budget", type=int, help="search node cap (default: $RELAXEDSYNC_BUDGET or 10^7)")
    chk.set_defaults(func=cmd_check)

    en = sub.add_parser("enumerate", help="check every schedule of a small program")
    en.add_argument("--impl", choices=sorted(IMPLS), required=True)
    en.add_argument("--program", required=True)
    en.add_argument("--condition", choices=["lin", "setlin", "intlin", "lemmas"])
    en.add_argument("--procs", type=int)
    en.add_argument("--bound", type=int, default=DEFAULT_BOUND)
    en.add_argument("--crashes", action="store_true", help="also check every crash-truncated prefix")
    en.add_argument("--distinct", action="store_true", help="check each distinct history once")
    en.add_argument("--keep-going", action="store_true", help="do not stop at the first rejection")
    en.add_argument("--budget", type=int)
    en.set_defaults(func=cmd_enumerate)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    values = read_config(known.config)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for sp in subparsers.choices.values():
        typed = {}
        for action in sp._actions:
            if action.dest in values:
                raw = values[action.dest]
                if isinstance(action, argparse._StoreTrueAction):
                    typed[action.dest] = raw.lower() in ("1", "true", "yes", "on")
                else:
                    typed[action.dest] = action.type(raw) if action.type else raw
                    action.required = False
        sp.set_defaults(**typed)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
    except (OSError, ValueError) as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        args = parser.parse_args(argv)
        if args.command == "run" and not args.impl and not args.script:
            parser.error("run needs --impl or --script")
        if args.command == "run" and args.script is None and args.mode == "live" and args.program:
            parser.error("--program is for --mode sim")
    except SystemExit as stop:  # argparse errors and --help
        return stop.code if isinstance(stop.code, int) else EXIT_PARSE
    try:
        return args.func(args)
    except HarnessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HARNESS
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
