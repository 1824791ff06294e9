"""Compositions over the relaxed structures: idempotent work stealing and k-FIFO."""

from __future__ import annotations

import random
from typing import Sequence

from .checker import Event, History
from .queues import SetSeqQueue
from .registers import ContractViolation, Register, StepMachine, fai
from .stacks import SetSeqStack

_POOL_NAMES = {"put": 0, "take": 1, "steal": 1}


class WorkStealingPool:
    """Task pool where only ``owner`` puts, and anyone takes or steals.

    Take and Steal are both the core's pop (or dequeue), so a task may be
    handed to several overlapping takers: each task is extracted at least
    once rather than exactly once.
    """

    kind = "pool"

    def __init__(self, owner: int, core: SetSeqStack | SetSeqQueue) -> None:
        self.owner = owner
        self.core = core
        self.n = core.n
        self.name = f"ws-{core.name}"
        self._insert, self._remove = ("push", "pop") if core.kind == "stack" else ("enq", "deq")

    def put(self, proc: int, task: int) -> StepMachine:
        if proc != self.owner:
            raise ContractViolation(f"put by p{proc}, but the pool is owned by p{self.owner}")
        return (yield from getattr(self.core, self._insert)(proc, task))

    def take(self, proc: int) -> StepMachine:
        return (yield from getattr(self.core, self._remove)(proc))

    def steal(self, proc: int) -> StepMachine:
        return (yield from getattr(self.core, self._remove)(proc))

    def core_history(self, history: History) -> History:
        """Rename put/take/steal to the core's operation names."""
        names = (self._insert, self._remove)
        return History(
            (Event(e.seq, e.proc, e.kind, names[_POOL_NAMES[e.op]], e.payload) for e in history.events),
            history.n,
        )


class KFifoQueue:
    """p lanes of :class:`SetSeqQueue` behind a load balancer.

    ``balancer="rr"`` picks lanes round-robin from a shared FAI counter (a
    read-modify-write object, which the access audit will flag);
    ``balancer="random"`` uses a seeded per-process generator and touches no
    shared memory. The lane of every operation is recorded so that per-lane
    histories can be extracted from a run.
    """

    kind = "queue"

    def __init__(self, n: int, lanes: int = 2, balancer: str = "rr", seed: int = 0, **queue_options) -> None:
        if balancer not in ("rr", "random"):
            raise ValueError(f"unknown balancer {balancer!r}")
        self.n = n
        self.p = lanes
        self.balancer = balancer
        self.name = f"kfifo{lanes}-{balancer}"
        self.lanes = [SetSeqQueue(n, prefix=f"L{k}.", **queue_options) for k in range(lanes)]
        self.counter = Register("Balancer", 0)
        self._rngs = {i: random.Random(seed * 1_000_003 + i) for i in range(1, n + 1)}
        self._op_index = [0] * (n + 1)
        self.lane_of: dict[tuple[int, int], int] = {}  # (proc, k-th op of proc) -> lane

    def _pick(self, proc: int) -> StepMachine:
        if self.balancer == "rr":
            v = yield fai(self.counter)
            lane = v % self.p
        else:
            lane = self._rngs[proc].randrange(self.p)
        self.lane_of[(proc, self._op_index[proc])] = lane
        self._op_index[proc] += 1
        return lane

    def enq(self, proc: int, x: int) -> StepMachine:
        lane = yield from self._pick(proc)
        return (yield from self.lanes[lane].enq(proc, x))

    def deq(self, proc: int) -> StepMachine:
        lane = yield from self._pick(proc)
        return (yield from self.lanes[lane].deq(proc))

    def lane_histories(self, history: History) -> list[History]:
        """Split a run's history into one history per lane."""
        seen = [0] * (self.n + 1)
        current: dict[int, int] = {}
        per_lane: list[list[Event]] = [[] for _ in range(self.p)]
        for e in history.events:
            if e.kind == "inv":
                lane = self.lane_of.get((e.proc, seen[e.proc]))
                seen[e.proc] += 1
                if lane is None:
                    continue  # crashed before choosing a lane
                current[e.proc] = lane
            elif e.proc not in current:
                continue
            else:
                lane = current.pop(e.proc)
            per_lane[lane].append(e)
        return [History(evs, self.n) for evs in per_lane]


def max_displacement(enqueued: Sequence[object], dequeued: Sequence[object]) -> int:
    """Largest distance between an item's enqueue rank and its dequeue rank."""
    rank = {x: i for i, x in enumerate(enqueued)}
    return max((abs(i - rank[x]) for i, x in enumerate(dequeued) if x in rank), default=0)
