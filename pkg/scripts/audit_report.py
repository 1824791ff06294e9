"""Per-implementation access-pattern audit over random simulated schedules."""

import dataclasses
import random
from dataclasses import dataclass, field

from _config import from_args
from relaxedsync.harness import audit_access_patterns, parse_program, random_schedule


@dataclass
class AuditConfig:
    """Random-schedule audit of read/write discipline."""

    impls: list[str] = field(default_factory=lambda: [
        "seqstack", "setseqstack", "renstack", "seqqueue", "setseqqueue", "intseqqueue", "rwintseqqueue"])
    runs: int = 200
    seed: int = 0
    stack_program: str = "push(1), pop, push(3) | push(2), pop | pop, pop"
    queue_program: str = "enq(1), deq, enq(3) | enq(2), deq | deq, deq"


def main(cfg: AuditConfig) -> None:
    rng = random.Random(cfg.seed)
    for impl in cfg.impls:
        prog = parse_program(cfg.stack_program if "stack" in impl else cfg.queue_program)
        records = []
        for _ in range(cfg.runs):
            out = random_schedule(impl, prog, rng)
            # op ids restart at 0 per run; shift them so runs stay apart
            base = max((r.op for r in records if r.op is not None), default=-1) + 1
            records += [r if r.op is None else dataclasses.replace(r, op=r.op + base) for r in out.records]
        print(audit_access_patterns(records).render(impl))


if __name__ == "__main__":
    main(from_args(AuditConfig))
