from __future__ import annotations

import os
import random
from dataclasses import dataclass

import pytest
from hypothesis import HealthCheck, settings

from relaxedsync.checker import History
from relaxedsync.harness import enumerate_schedules, parse_program
from relaxedsync.values import EMPTY, OK

settings.register_profile("default", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def h(*steps, n=None) -> History:
    """History from ``(proc, kind, op[, payload])`` tuples; ``True`` payloads mean OK."""
    fixed = []
    for s in steps:
        if len(s) == 4 and s[3] is True:
            s = (*s[:3], OK)
        fixed.append(s)
    return History.build(fixed, n)


@dataclass
class SweepStats:
    histories: int = 0
    rejected: int = 0
    first_rejected: object = None


def sweep(impl, program: str, accept, n=None, crashes=True) -> SweepStats:
    stats = SweepStats()
    for out in enumerate_schedules(impl, parse_program(program), crashes=crashes, distinct=True, n=n):
        stats.histories += 1
        if not accept(out):
            stats.rejected += 1
            if stats.first_rejected is None:
                stats.first_rejected = out
    return stats


def random_history(rng: random.Random, kind: str, max_ops: int, n: int = 3, pending: float = 0.15) -> History:
    """A well-formed random history whose results are plausible but often wrong."""
    insert, remove = ("push", "pop") if kind == "stack" else ("enq", "deq")
    count = rng.randint(0, max_ops)
    procs = [rng.randint(1, n) for _ in range(count)]
    queues = {p: [] for p in range(1, n + 1)}
    next_item = 1
    for p in procs:
        if rng.random() < 0.5:
            queues[p].append((insert, next_item))
            next_item += 1
        else:
            queues[p].append((remove, None))
    items = list(range(1, next_item))
    steps = []
    open_ops: dict[int, tuple] = {}
    while any(queues.values()) or open_ops:
        choices = [p for p in queues if queues[p] and p not in open_ops] + list(open_ops)
        p = rng.choice(choices)
        if p in open_ops:
            op, arg = open_ops.pop(p)
            if op == insert:
                res = OK
            else:
                res = rng.choice(items + [EMPTY]) if items else EMPTY
            steps.append((p, "res", op, res))
        else:
            op, arg = queues[p].pop(0)
            steps.append((p, "inv", op, arg))
            open_ops[p] = (op, arg)
            if not queues[p] and rng.random() < pending:
                # leave this operation pending forever
                del open_ops[p]
    return History.build(steps, n)


@pytest.fixture
def rng():
    return random.Random(12345)


__all__ = ["h", "sweep", "random_history", "parse_program", "ACCEPTANCE_LINES"]
