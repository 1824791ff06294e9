"""Execution engines: deterministic scheduler, exhaustive enumerator, live stress driver.

A :class:`Program` lists, per phase, the operations each process runs.
Phases are separated by barriers, so a sequential setup phase does not
multiply the number of schedules. A schedule is the sequence of process
ids taking the next step; each step is one shared access, with the
invocation event recorded just before an operation's first access and the
response event just after its last.
"""

from __future__ import annotations

import itertools
import random
import re
import sys
import threading
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Iterator, Sequence

from .checker import Event, History
from .queues import IntSeqQueue, NaiveQueue, RwIntSeqQueue, SeqQueue, SetSeqQueue
from .registers import RMW_KINDS, AccessRecord, ContractViolation, HarnessError, Memory, Scan
from .stacks import RenSetSeqStack, SeqStack, SetSeqStack
from .values import EMPTY, TAKEN, WEAK_EMPTY, check_item, parse_value, render

IMPLS: dict[str, type] = {
    cls.name: cls
    for cls in (SeqStack, SetSeqStack, RenSetSeqStack, SeqQueue, SetSeqQueue, NaiveQueue, IntSeqQueue, RwIntSeqQueue)
}

OPS = {"stack": ("push", "pop"), "queue": ("enq", "deq")}

DEFAULT_BOUND = 64


class InvalidSchedule(HarnessError):
    pass


class BoundExceeded(HarnessError):
    pass


class TraceParseError(ValueError):
    pass


def make_impl(name: str, n: int, **options) -> object:
    try:
        cls = IMPLS[name]
    except KeyError:
        raise ValueError(f"unknown implementation {name!r}; known: {', '.join(sorted(IMPLS))}") from None
    return cls(n, **options)


# --- programs ----------------------------------------------------------------


@dataclass(frozen=True)
class Call:
    op: str
    arg: object = None

    def __str__(self) -> str:
        return self.op if self.arg is None else f"{self.op}({render(self.arg)})"


@dataclass(frozen=True)
class Program:
    """Phases of per-process call lists; phase k+1 starts when phase k is done."""

    phases: tuple[dict[int, tuple[Call, ...]], ...]

    @property
    def n(self) -> int:
        return max((p for ph in self.phases for p in ph), default=1)

    @property
    def size(self) -> int:
        return sum(len(calls) for ph in self.phases for calls in ph.values())

    def items(self) -> list[object]:
        return [c.arg for ph in self.phases for calls in ph.values() for c in calls if c.arg is not None]

    def validate(self) -> None:
        inserted = self.items()
        for x in inserted:
            check_item(x)
        dup = [x for x, k in Counter(inserted).items() if k > 1]
        if dup:
            raise ContractViolation(f"items inserted more than once: {dup}")

    def __str__(self) -> str:
        return format_program(self)


_CALL = re.compile(r"^\s*(?:p(\d+)\s*:)?\s*(.*)$")
_OP = re.compile(r"^(\w+)(?:\((\d+)\))?$")


def parse_program(text: str) -> Program:
    """Parse ``push(1) ; pop | pop``: phases split on ``;``, processes on ``|``, calls on ``,``.

    A process slot may name its id (``p3: pop``); otherwise slots are
    numbered 1, 2, ... within the phase.
    """
    phases = []
    for ph_text in text.split(";"):
        phase: dict[int, tuple[Call, ...]] = {}
        for slot, part in enumerate(ph_text.split("|"), start=1):
            m = _CALL.match(part)
            assert m is not None
            proc = int(m.group(1)) if m.group(1) else slot
            calls = []
            for tok in m.group(2).split(","):
                tok = tok.strip().replace(" ", "")
                if not tok:
                    continue
                om = _OP.match(tok)
                if om is None:
                    raise ValueError(f"cannot parse call {tok!r}")
                calls.append(Call(om.group(1), int(om.group(2)) if om.group(2) else None))
            if calls:
                if proc in phase:
                    raise ValueError(f"process {proc} listed twice in one phase")
                phase[proc] = tuple(calls)
        if phase:
            phases.append(phase)
    prog = Program(tuple(phases))
    prog.validate()
    return prog


def format_program(program: Program) -> str:
    parts = []
    for ph in program.phases:
        parts.append(" | ".join(f"p{p}: " + ", ".join(map(str, calls)) for p, calls in sorted(ph.items())))
    return " ; ".join(parts)


# --- deterministic execution -------------------------------------------------


@dataclass
class Outcome:
    schedule: tuple[int, ...]
    history: History
    records: tuple[AccessRecord, ...]
    impl: str
    structure: object = field(default=None, repr=False, compare=False)  # the object the run executed on

    def trace(self) -> str:
        return format_trace(self.history, self.impl)

    def access_log(self) -> str:
        return "".join(r.line() + "\n" for r in self.records)


class Execution:
    """One run of a program under an externally chosen schedule."""

    def __init__(self, impl, program: Program, log: bool = True) -> None:
        self.impl = impl
        self.program = program
        n = getattr(impl, "n", program.n)
        if program.n > n:
            raise ContractViolation(f"program uses process {program.n} but the structure has n={n}")
        self.memory = Memory(log=log)
        self.events: list[Event] = []
        self.schedule: list[int] = []
        self.phase = 0
        self._queues: dict[int, list[Call]] = {}
        self._running: dict[int, list] = {}
        self._ops = 0
        self.cells: dict[str, object] = {}
        self._load_phase()

    def _load_phase(self) -> None:
        while self.phase < len(self.program.phases):
            self._queues = {p: list(c) for p, c in self.program.phases[self.phase].items() if c}
            if self._queues:
                return
            self.phase += 1
        self._queues = {}

    def enabled(self) -> list[int]:
        return sorted(self._queues.keys() | self._running.keys())

    @property
    def done(self) -> bool:
        return not self._queues and not self._running

    def _event(self, proc: int, kind: str, op: str, payload: object) -> None:
        self.events.append(Event(len(self.events), proc, kind, op, payload))

    def _finish(self, proc: int, call: Call, result: object) -> None:
        del self._running[proc]
        self._event(proc, "res", call.op, result)
        if not self._queues.get(proc, True):
            del self._queues[proc]
        if not self._queues and not self._running:
            self.phase += 1
            self._load_phase()

    def step(self, proc: int) -> None:
        if proc not in self._running:
            pending = self._queues.get(proc)
            if not pending:
                raise InvalidSchedule(f"process {proc} has no step to take (enabled: {self.enabled()})")
            call = pending.pop(0)
            op_id = self._ops
            self._ops += 1
            self._event(proc, "inv", call.op, call.arg)
            method = getattr(self.impl, call.op)
            machine = method(proc) if call.arg is None else method(proc, call.arg)
            try:
                req = next(machine)
            except StopIteration as stop:
                self._running[proc] = [machine, None, op_id, call, []]
                self._finish(proc, call, stop.value)
                self.schedule.append(proc)
                return
            self._running[proc] = [machine, req, op_id, call, []]
        entry = self._running[proc]
        machine, req, op_id, call = entry[:4]
        self.schedule.append(proc)
        result = self.memory.execute(proc, req, op_id)
        if type(req) is not Scan and req.kind != "read":
            self.cells[req.target.name] = req.target.load()
        entry[4].append(result)
        try:
            entry[1] = machine.send(result)
        except StopIteration as stop:
            self._finish(proc, call, stop.value)

    def configuration(self) -> tuple:
        """Everything that determines the rest of the run and its history.

        Step machines are deterministic, so a process's local state is fixed
        by the call it runs and the results it has received so far.
        """
        running = tuple((p, e[2], tuple(e[4])) for p, e in sorted(self._running.items()))
        queued = tuple((p, len(c)) for p, c in sorted(self._queues.items()))
        events = tuple((e.proc, e.kind, e.op, e.payload) for e in self.events)
        return (self.phase, queued, running, frozenset(self.cells.items()), events)

    def history(self) -> History:
        return History(list(self.events), getattr(self.impl, "n", self.program.n))

    def outcome(self) -> Outcome:
        return Outcome(tuple(self.schedule), self.history(), tuple(self.memory.records), self.impl.name, self.impl)


ImplFactory = Callable[[], object]


def _factory(impl: str | ImplFactory, n: int) -> ImplFactory:
    if isinstance(impl, str):
        return lambda: make_impl(impl, n)
    return impl


def replay(impl: str | ImplFactory, program: Program, schedule: Sequence[int], n: int | None = None) -> Outcome:
    """Run ``schedule`` on a fresh structure. A schedule may stop early (crash)."""
    ex = Execution(_factory(impl, n or program.n)(), program)
    for p in schedule:
        ex.step(p)
    return ex.outcome()


def run_to_completion(impl: str | ImplFactory, program: Program, order: Callable[[list[int]], int], n: int | None = None) -> Outcome:
    ex = Execution(_factory(impl, n or program.n)(), program)
    while not ex.done:
        ex.step(order(ex.enabled()))
    return ex.outcome()


def random_schedule(
    impl: str | ImplFactory, program: Program, rng: random.Random, n: int | None = None
) -> Outcome:
    return run_to_completion(impl, program, rng.choice, n)


def enumerate_schedules(
    impl: str | ImplFactory,
    program: Program,
    bound: int = DEFAULT_BOUND,
    crashes: bool = False,
    distinct: bool = False,
    n: int | None = None,
) -> Iterator[Outcome]:
    """Every maximal schedule of ``program``, depth first, smallest process id first.

    ``bound`` caps the length of a schedule. With ``crashes=True`` every
    proper prefix is yielded as well (processes that stop taking steps
    leave their operations pending). With ``distinct=True`` each history is
    yielded only once, and prefixes that reach an already explored
    configuration (same memory, same local progress, same events) are cut,
    since their continuations are identical. Execution state is rebuilt by
    replaying the prefix for every branch but the last, which reuses the
    parent's state.
    """
    make = _factory(impl, n or program.n)
    seen: set = set()
    visited: set = set()

    def emit(ex: Execution) -> Iterator[Outcome]:
        out = ex.outcome()
        if distinct:
            key = tuple(out.history.events)
            if key in seen:
                return
            seen.add(key)
        yield out

    def explore(ex: Execution) -> Iterator[Outcome]:
        if distinct:
            config = ex.configuration()
            if config in visited:
                return
            visited.add(config)
        enabled = ex.enabled()
        if not enabled:
            yield from emit(ex)
            return
        if crashes:
            yield from emit(ex)
        if len(ex.schedule) >= bound:
            raise BoundExceeded(f"schedule longer than bound {bound}: {format_program(program)}")
        prefix = list(ex.schedule)
        for k, p in enumerate(enabled):
            if k == len(enabled) - 1:
                child = ex
            else:
                child = Execution(make(), program)
                for q in prefix:
                    child.step(q)
            child.step(p)
            yield from explore(child)

    yield from explore(Execution(make(), program))


def interleavings(a: int, b: int) -> int:
    """Schedules of two independent operations of ``a`` and ``b`` steps."""
    return comb(a + b, a)


# --- trace files -------------------------------------------------------------


def format_trace(history: History, impl: str) -> str:
    lines = [f"trace v1 n={history.n} impl={impl}"]
    for e in history.events:
        lines.append(f"{e.seq} {e.proc} {e.kind} {e.op} {render(e.payload)}")
    return "\n".join(lines) + "\n"


_HEADER = re.compile(r"^trace v1 n=(\d+) impl=(\S+)$")


def parse_trace(text: str) -> tuple[History, str]:
    """Inverse of :func:`format_trace`. An empty file is an empty history."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        return History([], 0), "-"
    m = _HEADER.match(lines[0].strip())
    if m is None:
        raise TraceParseError(f"bad trace header: {lines[0]!r}")
    n, impl = int(m.group(1)), m.group(2)
    events = []
    for no, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 5 or parts[2] not in ("inv", "res"):
            raise TraceParseError(f"line {no}: expected 'seq proc inv|res op payload', got {ln!r}")
        try:
            events.append(Event(int(parts[0]), int(parts[1]), parts[2], parts[3], parse_value(parts[4])))
        except ValueError as exc:
            raise TraceParseError(f"line {no}: {exc}") from None
    try:
        return History(events, n), impl
    except ValueError as exc:
        raise TraceParseError(str(exc)) from None


# --- live stress ---------------------------------------------------------------


@dataclass
class Workload:
    """Random per-process operation mix, or explicit per-process scripts."""

    n: int = 2
    ops: int = 1000
    insert_ratio: float = 0.5
    seed: int = 0
    scripts: dict[int, list[Call]] | None = None
    log_accesses: bool = False
    bulk_scans: bool = True
    switch_interval: float = 1e-5

    def calls(self, kind: str) -> dict[int, list[Call]]:
        if self.scripts is not None:
            return {p: list(c) for p, c in self.scripts.items()}
        insert, remove = OPS[kind]
        out = {}
        per, extra = divmod(self.ops, self.n)
        for p in range(1, self.n + 1):
            rng = random.Random(self.seed * 1_000_003 + p)
            made = 0
            calls = []
            for _ in range(per + (1 if p <= extra else 0)):
                if rng.random() < self.insert_ratio:
                    calls.append(Call(insert, p + made * self.n))  # unique across processes
                    made += 1
                else:
                    calls.append(Call(remove))
            out[p] = calls
        return out


@dataclass
class StressResult:
    history: History
    records: list[AccessRecord]
    impl: str
    errors: list[BaseException] = field(default_factory=list)

    def trace(self) -> str:
        return format_trace(self.history, self.impl)


def _build(impl, n: int, bulk: bool):
    if not isinstance(impl, str):
        return impl
    cls = IMPLS.get(impl)
    if cls is None:
        raise ValueError(f"unknown implementation {impl!r}")
    try:
        return cls(n, bulk_scans=bulk)
    except TypeError:
        return cls(n)


def run_stress(impl, w: Workload) -> StressResult:
    """Run the workload on real threads, one per process.

    Accesses are serialized by the memory lock; invocation and response
    events are stamped from one shared counter, so the recorded history is
    a total order consistent with each thread's program order.
    """
    obj = _build(impl, w.n, w.bulk_scans)
    kind = getattr(obj, "kind", "stack")
    scripts = w.calls(kind if kind in OPS else "stack")
    if any(not 1 <= p <= getattr(obj, "n", w.n) for p in scripts):
        raise ContractViolation(f"workload processes {sorted(scripts)} exceed n={getattr(obj, 'n', w.n)}")
    memory = Memory(log=w.log_accesses, threadsafe=True)
    stamp = itertools.count()
    logs: dict[int, list[Event]] = defaultdict(list)
    errors: list[BaseException] = []
    gate = threading.Barrier(len(scripts))
    op_base = {}
    acc = 0
    for p in sorted(scripts):
        op_base[p] = acc
        acc += len(scripts[p])

    def worker(p: int) -> None:
        out = logs[p]
        try:
            gate.wait()
            for k, call in enumerate(scripts[p]):
                out.append(Event(next(stamp), p, "inv", call.op, call.arg))
                method = getattr(obj, call.op)
                machine = method(p) if call.arg is None else method(p, call.arg)
                result = memory.run(machine, p, op_base[p] + k)
                out.append(Event(next(stamp), p, "res", call.op, result))
        except BaseException as exc:  # surfaced to the caller below
            errors.append(exc)
            gate.abort()

    old = sys.getswitchinterval()
    sys.setswitchinterval(w.switch_interval)
    try:
        threads = [threading.Thread(target=worker, args=(p,), daemon=True) for p in sorted(scripts)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    finally:
        sys.setswitchinterval(old)
    real = [e for e in errors if not isinstance(e, threading.BrokenBarrierError)]
    if real:
        raise real[0]
    events = sorted((e for evs in logs.values() for e in evs), key=lambda e: e.seq)
    history = History(events, getattr(obj, "n", w.n))
    return StressResult(history, memory.records, getattr(obj, "name", type(obj).__name__))


# --- access-pattern audit ------------------------------------------------------


@dataclass
class OpAudit:
    op: int
    proc: int
    accesses: int = 0
    rmw: int = 0
    read_after_write: int = 0
    redundant_writes: int = 0
    wrote: bool = False


@dataclass
class AuditReport:
    ops: dict[int, OpAudit]

    @property
    def rmw_flags(self) -> int:
        return sum(1 for a in self.ops.values() if a.rmw)

    @property
    def raw_flags(self) -> int:
        return sum(1 for a in self.ops.values() if a.read_after_write)

    @property
    def redundant_writes(self) -> int:
        return sum(a.redundant_writes for a in self.ops.values())

    @property
    def clean(self) -> bool:
        return self.rmw_flags == 0 and self.raw_flags == 0

    def render(self, impl: str = "") -> str:
        head = f"audit {impl}".rstrip()
        return (
            f"{head}\n"
            f"operations: {len(self.ops)}\n"
            f"read-modify-write flags: {self.rmw_flags}\n"
            f"read-after-write flags: {self.raw_flags}\n"
            f"redundant writes: {self.redundant_writes}\n"
        )


def audit_access_patterns(records: Sequence[AccessRecord]) -> AuditReport:
    """Per operation: flag FAI/SWAP, and shared reads after the first effectful write.

    A write that leaves the cell unchanged (TAKEN over TAKEN) is counted as
    redundant and does not arm the read-after-write check.
    """
    ops: dict[int, OpAudit] = {}
    for r in records:
        key = r.op if r.op is not None else -1
        a = ops.get(key)
        if a is None:
            a = ops[key] = OpAudit(key, r.proc)
        a.accesses += 1
        if r.kind in RMW_KINDS:
            a.rmw += 1
            a.wrote = True
        elif r.kind == "write":
            if r.before == r.after:
                a.redundant_writes += 1
            else:
                a.wrote = True
        elif r.kind in ("read", "scan") and a.wrote:
            a.read_after_write += 1
    return AuditReport(ops)


@dataclass(frozen=True)
class ScanPass:
    tail: int  # value read from the tail object
    accesses: int
    taken: int  # TAKEN cells passed during the pass


def scan_passes(records: Sequence[AccessRecord], op: int, tail_cell: str = "Tail") -> list[ScanPass]:
    """Split one dequeue's accesses into passes, each starting at a read of the tail."""
    passes: list[list[AccessRecord]] = []
    for r in records:
        if r.op != op:
            continue
        if r.kind == "read" and r.cell == tail_cell:
            passes.append([])
        if passes:
            passes[-1].append(r)
    out = []
    for recs in passes:
        taken = sum(1 for r in recs if r.kind == "swap" and r.before is TAKEN)
        out.append(ScanPass(recs[0].before, len(recs), taken))  # type: ignore[arg-type]
    return out


# --- named scripted runs -------------------------------------------------------


@dataclass(frozen=True)
class Script:
    impl: str
    n: int
    program: str
    schedule: tuple[int, ...]
    about: str

    def run(self) -> Outcome:
        return replay(self.impl, parse_program(self.program), self.schedule, self.n)


SCRIPTS = {
    "fig8": Script(
        "naivequeue",
        3,
        "p1: enq(1) ; p1: deq | p2: enq(2) | p3: deq",
        (1, 1, 1, 2, 2, 3, 3, 1),
        "tail chasing: p1 reads the tail, p2 enqueues 2, p3 takes 1, p1 finds its cell emptied and returns empty",
    ),
    "weakempty": Script(
        "intseqqueue",
        3,
        "p1: deq | p2: enq(1) | p3: deq",
        (2, 1, 1, 2, 3, 3, 3, 1, 1, 1),
        "p1's first pass sees nothing, p3 takes the item p2 wrote, p1's second pass counts one more taken cell",
    ),
    "multiplicity": Script(
        "setseqstack",
        2,
        "p1: push(1) ; p1: pop | p2: pop",
        (1, 1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 1, 2),
        "both pops read item 1 before either clears it, so both return it",
    ),
    "multiplicity-queue": Script(
        "setseqqueue",
        2,
        "p1: enq(1) ; p1: deq | p2: deq",
        (1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 1, 2),
        "both dequeues read item 1 before either marks it taken, so both return it",
    ),
}


def removal_results(history: History) -> list[object]:
    return [o.result for o in history.operations if o.name in ("pop", "deq")]


def has_weak_empty(history: History) -> bool:
    return any(o.result is WEAK_EMPTY for o in history.operations)


def has_duplicate_return(history: History) -> bool:
    got = [r for r in removal_results(history) if r not in (None, EMPTY, WEAK_EMPTY)]
    return len(got) != len(set(got))
