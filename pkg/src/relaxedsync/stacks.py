"""Stack algorithms as step machines.

Each operation is a generator taking the invoking process id first; it yields
one shared access at a time (see :mod:`relaxedsync.registers`). Line comments
refer to the pseudocode labels of the respective algorithm.
"""

from __future__ import annotations

from .registers import (
    DEFAULT_CAPACITY,
    GridRenaming,
    Growable,
    Register,
    RegisterArray,
    RwCounter,
    Scan,
    StepMachine,
    fai,
    name_space,
    read,
    swap,
    write,
)
from .values import BOTTOM, EMPTY, OK, check_item


class SeqStack:
    """Linearizable wait-free stack from FAI and SWAP (Afek, Gafni, Morrison).

    Used as the consensus-number-two reference point.
    """

    name = "seqstack"
    kind = "stack"

    def __init__(self, n: int, capacity: int = DEFAULT_CAPACITY) -> None:
        self.n = n
        self.top = Register("Top", 1)
        self.items = RegisterArray("Items", BOTTOM, capacity)

    def push(self, proc: int, x: int) -> StepMachine:
        check_item(x)
        t = yield fai(self.top)  # M01
        yield write(self.items[t], x)  # M02
        return OK

    def pop(self, proc: int) -> StepMachine:
        t = (yield read(self.top)) - 1  # M04
        for r in range(t, 0, -1):
            x = yield swap(self.items[r], BOTTOM)  # M06
            if x is not BOTTOM:
                return x
        return EMPTY


class SetSeqStack:
    """Wait-free set-linearizable stack with multiplicity from reads and writes.

    FAI on Top becomes a counter read followed by an increment, so pushes can
    collide on a row; each row therefore has one column per process. SWAP in
    pop becomes read-then-write, so two overlapping pops can both return the
    item they read before either cleared it. That duplicate is the intended
    relaxation.
    """

    name = "setseqstack"
    kind = "stack"

    def __init__(self, n: int, capacity: int = DEFAULT_CAPACITY, bulk_scans: bool = False) -> None:
        self.n = n
        self.top = RwCounter("Top", n, initial=1)
        self.items = RegisterArray("Items", BOTTOM, capacity, width=n)
        self.bulk_scans = bulk_scans

    def push(self, proc: int, x: int) -> StepMachine:
        check_item(x)
        t = yield from self.top.read(proc)  # L01
        yield from self.top.inc(proc)  # L02
        yield write(self.items[t, proc], x)  # L04
        return OK

    def pop(self, proc: int) -> StepMachine:
        t = (yield from self.top.read(proc)) - 1  # L06
        if self.bulk_scans:
            idx, x, _ = yield Scan(self.items, 0, t * self.n, True, "nonbottom")
            if idx is None:
                return EMPTY
            yield write(self.items.at(idx), BOTTOM)
            return x
        for r in range(t, 0, -1):
            for s in range(self.n, 0, -1):
                x = yield read(self.items[r, s])  # L09
                if x is not BOTTOM:
                    yield write(self.items[r, s], BOTTOM)  # L10
                    return x
        return EMPTY


class RenSetSeqStack:
    """Set-concurrent stack whose rows are indexed by adaptive renaming.

    Pushes landing in row b take a column from ``ren[b]`` and announce
    themselves in the counter ``nops[b]``; a pop scans only the first
    ``name_space(nops[b])`` columns of row b.

    With ``announce_first=False`` the push runs in the published line order
    (rename, Top.INC, NOPS.INC, write). That order lets a completed push sit
    in a column beyond the bound a later pop computes, while a slower
    co-renamer has not yet announced itself, so the pop can miss it and
    return empty. The default increments ``nops[b]`` before renaming, which
    makes every process that could have deflected a pusher visible in the
    counter before the pusher's item is written.
    """

    name = "renstack"
    kind = "stack"

    def __init__(self, n: int, capacity: int = DEFAULT_CAPACITY, announce_first: bool = True) -> None:
        self.n = n
        self.announce_first = announce_first
        self.width = name_space(n)
        self.top = RwCounter("Top", n, initial=1)
        self.nops = Growable("NOPS", lambda b: RwCounter(f"NOPS[{b}]", n), capacity)
        self.ren = Growable("Ren", lambda b: GridRenaming(f"Ren[{b}]", n), capacity)
        self.items = Growable("Items", lambda b: RegisterArray(f"Items[{b}]", BOTTOM, self.width), capacity)

    def push(self, proc: int, x: int) -> StepMachine:
        check_item(x)
        t = yield from self.top.read(proc)  # S01
        if self.announce_first:
            yield from self.nops[t].inc(proc)
        tiebreaker = yield from self.ren[t].rename(proc)  # S02
        yield from self.top.inc(proc)  # S03
        if not self.announce_first:
            yield from self.nops[t].inc(proc)  # S04
        yield write(self.items[t][tiebreaker], x)  # S05
        return OK

    def pop(self, proc: int) -> StepMachine:
        t = (yield from self.top.read(proc)) - 1  # S07
        for r in range(t, 0, -1):
            nops = yield from self.nops[r].read(proc)  # S08
            # rows are only ever name_space(n) wide
            bound = min(name_space(nops), self.width)
            row = self.items[r]
            for s in range(bound, 0, -1):
                x = yield read(row[s])  # S11
                if x is not BOTTOM:
                    yield write(row[s], BOTTOM)  # S12
                    return x
        return EMPTY
