"""Queue algorithms as step machines.

Same conventions as :mod:`relaxedsync.stacks`. ``NaiveQueue`` is a negative
control: it is deliberately not linearizable (the tail-chasing problem).
"""

from __future__ import annotations

from .registers import (
    DEFAULT_CAPACITY,
    Register,
    RegisterArray,
    RwCounter,
    Scan,
    StepMachine,
    fai,
    read,
    swap,
    write,
)
from .values import BOTTOM, EMPTY, OK, TAKEN, WEAK_EMPTY, check_item


class _FaiQueueBase:
    kind = "queue"

    def __init__(self, n: int, capacity: int = DEFAULT_CAPACITY) -> None:
        self.n = n
        self.tail = Register("Tail", 1)
        self.items = RegisterArray("Items", BOTTOM, capacity)

    def enq(self, proc: int, x: int) -> StepMachine:
        check_item(x)
        t = yield fai(self.tail)
        yield write(self.items[t], x)
        return OK

    def _swap_pass(self, proc: int) -> StepMachine:
        """One scan from the head; returns (item or None, cells seen taken)."""
        taken = 0
        t = (yield read(self.tail)) - 1
        for r in range(1, t + 1):
            x = yield read(self.items[r])
            if x is not BOTTOM:
                x = yield swap(self.items[r], TAKEN)
                if x is not TAKEN:
                    return x, taken
                taken += 1
        return None, taken


class SeqQueue(_FaiQueueBase):
    """Non-blocking linearizable queue from FAI and SWAP (a variant of Li's queue).

    Enqueue is wait-free. Dequeue rescans until two consecutive scans see the
    same number of taken cells, and only then reports empty.
    """

    name = "seqqueue"

    def deq(self, proc: int) -> StepMachine:
        prev = 0  # P04
        while True:
            x, taken = yield from self._swap_pass(proc)  # P06-P15
            if x is not None:
                return x
            if taken == prev:  # P16
                return EMPTY
            prev = taken


class NaiveQueue:
    """Single forward scan with SWAP(bottom); returns empty after one pass.

    Not linearizable: while a dequeue scans, other dequeues can empty the
    prefix it has left and enqueues can extend the queue past the tail it
    read, so it may report empty on a queue that was never empty.
    """

    name = "naivequeue"
    kind = "queue"

    def __init__(self, n: int, capacity: int = DEFAULT_CAPACITY) -> None:
        self.n = n
        self.tail = Register("Tail", 1)
        self.items = RegisterArray("Items", BOTTOM, capacity)

    def enq(self, proc: int, x: int) -> StepMachine:
        check_item(x)
        t = yield fai(self.tail)  # MM01
        yield write(self.items[t], x)  # MM02
        return OK

    def deq(self, proc: int) -> StepMachine:
        t = (yield read(self.tail)) - 1  # MM04
        for r in range(1, t + 1):
            x = yield swap(self.items[r], BOTTOM)  # MM06
            if x is not BOTTOM:
                return x
        return EMPTY


class IntSeqQueue(_FaiQueueBase):
    """Wait-free interval-linearizable queue with weak-empty, from FAI and SWAP.

    A dequeue makes at most two passes. Equal taken counts mean a double
    clean scan and license EMPTY; otherwise the items it could have taken
    went to concurrent dequeues and it answers WEAK_EMPTY.
    """

    name = "intseqqueue"

    def deq(self, proc: int) -> StepMachine:
        counts = []
        for _ in range(2):  # PP05
            x, taken = yield from self._swap_pass(proc)
            if x is not None:
                return x
            counts.append(taken)
        return EMPTY if counts[0] == counts[1] else WEAK_EMPTY  # PP17


class _RwQueueBase:
    kind = "queue"

    def __init__(self, n: int, capacity: int = DEFAULT_CAPACITY, bulk_scans: bool = False, prefix: str = "") -> None:
        self.n = n
        self.tail = RwCounter(f"{prefix}Tail", n, initial=1)
        self.items = RegisterArray(f"{prefix}Items", BOTTOM, capacity, width=n)
        self.bulk_scans = bulk_scans

    def enq(self, proc: int, x: int) -> StepMachine:
        check_item(x)
        t = yield from self.tail.read(proc)  # T01
        yield from self.tail.inc(proc)  # T02
        yield write(self.items[t, proc], x)  # T04
        return OK

    def _rw_pass(self, proc: int) -> StepMachine:
        """One row-major scan; read-then-write stands in for SWAP(TAKEN)."""
        taken = 0
        t = (yield from self.tail.read(proc)) - 1  # T09
        if self.bulk_scans:
            idx, x, taken = yield Scan(self.items, 0, t * self.n, False, "item")
            if idx is None:
                return None, taken
            yield write(self.items.at(idx), TAKEN)
            return x, taken
        for r in range(1, t + 1):
            for s in range(1, self.n + 1):
                x = yield read(self.items[r, s])  # T11
                if x is not BOTTOM:
                    # written even over TAKEN, as in the pseudocode
                    yield write(self.items[r, s], TAKEN)  # T13
                    if x is not TAKEN:
                        return x, taken
                    taken += 1
        return None, taken


class SetSeqQueue(_RwQueueBase):
    """Non-blocking set-linearizable queue with multiplicity from reads and writes."""

    name = "setseqqueue"

    def deq(self, proc: int) -> StepMachine:
        prev = 0  # T06
        while True:
            x, taken = yield from self._rw_pass(proc)
            if x is not None:
                return x
            if taken == prev:  # T18
                return EMPTY
            prev = taken


class RwIntSeqQueue(_RwQueueBase):
    """Wait-free interval-linearizable queue with weak-empty and multiplicity, reads and writes only."""

    name = "rwintseqqueue"

    def deq(self, proc: int) -> StepMachine:
        counts = []
        for _ in range(2):
            x, taken = yield from self._rw_pass(proc)
            if x is not None:
                return x
            counts.append(taken)
        return EMPTY if counts[0] == counts[1] else WEAK_EMPTY
