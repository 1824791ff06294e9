"""Check every schedule of a set of small programs against each implementation's condition."""

import time
from dataclasses import dataclass, field

from _config import from_args
from relaxedsync.checker import check_interval_linearizable, check_linearizable, check_set_linearizable
from relaxedsync.harness import enumerate_schedules, has_duplicate_return, has_weak_empty, parse_program
from relaxedsync.specs import IntervalQueueSpec, SeqQueueSpec, SeqStackSpec, SetQueueSpec, SetStackSpec

STACK_PROGRAMS = [
    "push(1) ; pop | pop",
    "push(1) | push(2) ; pop | pop",
    "push(1), pop | push(2), pop",
    "push(1), push(2) ; pop | pop | pop",
    "pop | pop | push(1)",
    "push(1) | pop, push(2) | pop",
]


@dataclass
class SweepConfig:
    """Exhaustive schedule sweep over small programs."""

    impls: list[str] = field(default_factory=lambda: [
        "seqstack", "setseqstack", "renstack", "seqqueue", "setseqqueue", "intseqqueue", "rwintseqqueue", "naivequeue"])
    crashes: bool = True
    max_ops: int = 6


def condition(impl: str):
    kind = "stack" if "stack" in impl else "queue"
    if impl in ("seqstack", "seqqueue", "naivequeue"):
        return "lin", lambda h: check_linearizable(h, SeqStackSpec() if kind == "stack" else SeqQueueSpec())
    if impl in ("intseqqueue", "rwintseqqueue"):
        return "intlin", lambda h: check_interval_linearizable(
            h, IntervalQueueSpec(h.n, multiplicity=impl == "rwintseqqueue"))
    return "setlin", lambda h: check_set_linearizable(h, SetStackSpec() if kind == "stack" else SetQueueSpec())


def programs_for(impl: str, max_ops: int) -> list[str]:
    texts = STACK_PROGRAMS if "stack" in impl else [
        p.replace("push", "enq").replace("pop", "deq") for p in STACK_PROGRAMS]
    return [t for t in texts if parse_program(t).size <= max_ops]


def main(cfg: SweepConfig) -> None:
    print(f"{'impl':<14}{'cond':<8}{'histories':>10}{'rejected':>10}{'dups':>7}{'weak':>7}{'secs':>8}")
    for impl in cfg.impls:
        name, check = condition(impl)
        start = time.perf_counter()
        total = rejected = dups = weak = 0
        for text in programs_for(impl, cfg.max_ops):
            for out in enumerate_schedules(impl, parse_program(text), crashes=cfg.crashes, distinct=True):
                total += 1
                rejected += not check(out.history).accepted
                dups += has_duplicate_return(out.history)
                weak += has_weak_empty(out.history)
        print(f"{impl:<14}{name:<8}{total:>10}{rejected:>10}{dups:>7}{weak:>7}{time.perf_counter() - start:>8.1f}")


if __name__ == "__main__":
    main(from_args(SweepConfig))
