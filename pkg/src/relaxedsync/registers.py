"""Shared-memory layer: registers, counters, renaming, and the access log.

Algorithms never touch a register directly. They are written as generators
that yield one :class:`Access` per shared base-object operation and receive
the result back, e.g. ``x = yield read(cell)``. Whoever drives the generator
(the solo runner here, the scheduler or the thread driver in
:mod:`relaxedsync.harness`) decides when each access happens, which is what
makes exhaustive interleaving possible with the same code that runs live.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Any, Callable, Generator, Iterator

import numpy as np

from .values import BOTTOM, TAKEN, is_item, render

DEFAULT_CAPACITY = 2**16
_SHIFT = 10
_SEGMENT = 1 << _SHIFT

# cell classes for the bulk scanner
_T_BOTTOM, _T_ITEM, _T_TAKEN, _T_OTHER = 0, 1, 2, 3

StepMachine = Generator["Access | Scan", Any, Any]


class HarnessError(RuntimeError):
    pass


class CapacityExceeded(HarnessError):
    pass


class ContractViolation(HarnessError):
    pass


def _tag(v: object) -> int:
    if v is BOTTOM:
        return _T_BOTTOM
    if v is TAKEN:
        return _T_TAKEN
    return _T_ITEM if is_item(v) else _T_OTHER


class Register:
    """A single atomic base object (R/W register, FAI or SWAP object)."""

    __slots__ = ("name", "value")

    def __init__(self, name: str, value: object = BOTTOM) -> None:
        self.name = name
        self.value = value

    def load(self) -> object:
        return self.value

    def store(self, v: object) -> None:
        self.value = v

    def __repr__(self) -> str:
        return f"Register({self.name}={render(self.value)})"


class Slot:
    """Handle on one register inside a :class:`RegisterArray`."""

    __slots__ = ("array", "index")

    def __init__(self, array: RegisterArray, index: int) -> None:
        self.array = array
        self.index = index

    @property
    def name(self) -> str:
        return self.array.label(self.index)

    def load(self) -> object:
        return self.array.load(self.index)

    def store(self, v: object) -> None:
        self.array.store(self.index, v)


class RegisterArray:
    """Unbounded array of registers, 1-based, optionally two-dimensional.

    With ``width`` set, cells are addressed ``arr[row, col]`` and stored
    row-major; ``capacity`` bounds the row index. Storage is materialized in
    fixed-size segments on first write; unwritten cells read as ``initial``.
    """

    def __init__(
        self,
        name: str,
        initial: object = BOTTOM,
        capacity: int = DEFAULT_CAPACITY,
        width: int | None = None,
    ) -> None:
        self.name = name
        self.initial = initial
        self.capacity = capacity
        self.width = width
        self._segs: dict[int, tuple[list, np.ndarray]] = {}
        self._counts = np.zeros((0, 4), dtype=np.int64)  # per segment, cells per tag

    def flat(self, key: int | tuple[int, int]) -> int:
        if self.width is None:
            row, col = key, 1
        else:
            row, col = key  # type: ignore[misc]
            if not 1 <= col <= self.width:
                raise IndexError(f"{self.name}: column {col} outside 1..{self.width}")
        if row < 1:
            raise IndexError(f"{self.name}: index {row} < 1")
        if row > self.capacity:
            raise CapacityExceeded(f"{self.name}: index {row} exceeds capacity {self.capacity}")
        return (row - 1) * (self.width or 1) + (col - 1)

    def __getitem__(self, key: int | tuple[int, int]) -> Slot:
        return Slot(self, self.flat(key))

    def at(self, index: int) -> Slot:
        return Slot(self, index)

    def label(self, index: int) -> str:
        if self.width is None:
            return f"{self.name}[{index + 1}]"
        r, c = divmod(index, self.width)
        return f"{self.name}[{r + 1}][{c + 1}]"

    def _segment(self, k: int) -> tuple[list, np.ndarray]:
        seg = self._segs.get(k)
        if seg is None:
            if k >= len(self._counts):
                grown = np.zeros((max(k + 1, 2 * len(self._counts), 8), 4), dtype=np.int64)
                grown[: len(self._counts)] = self._counts
                self._counts = grown
            tag = _tag(self.initial)
            fresh = ([self.initial] * _SEGMENT, np.full(_SEGMENT, tag, dtype=np.int8))
            seg = self._segs.setdefault(k, fresh)
            if seg is fresh:
                self._counts[k, tag] = _SEGMENT
        return seg

    def load(self, index: int) -> object:
        seg = self._segs.get(index >> _SHIFT)
        if seg is None:
            return self.initial
        return seg[0][index & (_SEGMENT - 1)]

    def store(self, index: int, v: object) -> None:
        k = index >> _SHIFT
        values, tags = self._segment(k)
        i = index & (_SEGMENT - 1)
        values[i] = v
        old, new = tags[i], _tag(v)
        if old != new:
            tags[i] = new
            self._counts[k, old] -= 1
            self._counts[k, new] += 1

    @property
    def materialized(self) -> int:
        return len(self._segs) * _SEGMENT

    def _find_in_segment(self, k: int, lo: int, hi: int, reverse: bool, until: str) -> tuple[int | None, object, int]:
        seg = self._segs.get(k)
        if seg is None:
            return None, None, 0
        base = k << _SHIFT
        a, b = max(lo, base) - base, min(hi, base + _SEGMENT) - base
        sub = seg[1][a:b]
        hits = np.flatnonzero(sub == _T_ITEM) if until == "item" else np.flatnonzero(sub != _T_BOTTOM)
        if not hits.size:
            return None, None, int(np.count_nonzero(sub == _T_TAKEN))
        j = int(hits[-1] if reverse else hits[0])
        passed = sub[j + 1:] if reverse else sub[:j]
        return base + a + j, seg[0][a + j], int(np.count_nonzero(passed == _T_TAKEN))

    def find(self, lo: int, hi: int, reverse: bool, until: str) -> tuple[int | None, object, int]:
        """First cell in flat range [lo, hi) matching ``until``, in scan order.

        ``until`` is ``"nonbottom"`` or ``"item"``. Returns the index (or None),
        the value found, and how many TAKEN cells were passed over on the way.
        Segments lying wholly inside the range are skipped using their tag
        counts, so the cost does not grow with the length of a drained prefix.
        """
        if self.initial is not BOTTOM:
            raise HarnessError("bulk scans need a BOTTOM-initialized array")
        if hi <= lo:
            return None, None, 0
        klo, khi = lo >> _SHIFT, (hi - 1) >> _SHIFT
        rows = np.zeros((khi - klo + 1, 4), dtype=np.int64)
        known = self._counts[klo: khi + 1]
        rows[: len(known)] = known
        if until == "item":
            hit = rows[:, _T_ITEM] > 0
        else:
            hit = (rows[:, _T_ITEM] + rows[:, _T_TAKEN] + rows[:, _T_OTHER]) > 0
        hit[0] = hit[-1] = True  # partial segments are always scanned cell by cell
        taken_per = rows[:, _T_TAKEN]
        positions = np.flatnonzero(hit)
        if reverse:
            positions = positions[::-1]
        taken = 0
        prev = len(rows) if reverse else -1
        for j in positions.tolist():
            skipped = taken_per[j + 1: prev] if reverse else taken_per[prev + 1: j]
            taken += int(skipped.sum())
            idx, value, passed = self._find_in_segment(klo + j, lo, hi, reverse, until)
            taken += passed
            if idx is not None:
                return idx, value, taken
            prev = j
        return None, None, taken


class Growable:
    """Unbounded 1-based array of objects (counters, renaming instances, rows)."""

    def __init__(self, name: str, factory: Callable[[int], Any], capacity: int = DEFAULT_CAPACITY) -> None:
        self.name = name
        self.factory = factory
        self.capacity = capacity
        self._items: dict[int, Any] = {}

    def __getitem__(self, i: int) -> Any:
        if not 1 <= i <= self.capacity:
            if i > self.capacity:
                raise CapacityExceeded(f"{self.name}: index {i} exceeds capacity {self.capacity}")
            raise IndexError(f"{self.name}: index {i} < 1")
        obj = self._items.get(i)
        if obj is None:
            obj = self._items.setdefault(i, self.factory(i))
        return obj

    def __iter__(self) -> Iterator[tuple[int, Any]]:
        return iter(sorted(self._items.items()))


# --- access requests -------------------------------------------------------

RMW_KINDS = frozenset({"fai", "swap"})


@dataclass(frozen=True, slots=True)
class Access:
    kind: str  # read | write | fai | swap
    target: Register | Slot
    value: object = None


@dataclass(frozen=True, slots=True)
class Scan:
    """A run of consecutive reads executed without interleaving.

    Only emitted by structures built with ``bulk_scans=True`` (large live
    stress runs). Equivalent to the process taking all those read steps
    back-to-back, plus the no-op rewrites of TAKEN cells it passes.
    """

    array: RegisterArray
    lo: int
    hi: int
    reverse: bool
    until: str


def read(target: Register | Slot) -> Access:
    return Access("read", target)


def write(target: Register | Slot, value: object) -> Access:
    return Access("write", target, value)


def fai(target: Register) -> Access:
    return Access("fai", target)


def swap(target: Register | Slot, value: object) -> Access:
    return Access("swap", target, value)


@dataclass(frozen=True, slots=True)
class AccessRecord:
    seq: int
    proc: int
    kind: str
    cell: str
    before: object
    after: object
    op: int | None = None

    def line(self) -> str:
        return f"{self.seq} {self.proc} {self.kind} {self.cell} {render(self.before)} {render(self.after)}"


class Memory:
    """Executes access requests atomically and keeps the access log.

    ``threadsafe=True`` serializes accesses with a lock for live runs; the
    lock stands in for the hardware atomicity of each base object.
    """

    def __init__(self, log: bool = True, threadsafe: bool = False) -> None:
        self.log = log
        self.records: list[AccessRecord] = []
        self._seq = 0
        self._lock = threading.Lock() if threadsafe else None

    def execute(self, proc: int, req: Access | Scan, op: int | None = None) -> object:
        if self._lock is None:
            return self._apply(proc, req, op)
        with self._lock:
            return self._apply(proc, req, op)

    def _apply(self, proc: int, req: Access | Scan, op: int | None) -> object:
        if type(req) is Scan:
            idx, value, taken = req.array.find(req.lo, req.hi, req.reverse, req.until)
            if self.log:
                cell = f"{req.array.name}{{{req.lo}:{req.hi}}}"
                self._record(proc, "scan", cell, value, value, op)
            return idx, value, taken
        kind, target = req.kind, req.target
        before = target.load()
        if kind == "read":
            after = before
            result = before
        elif kind == "write":
            after = req.value
            target.store(after)
            result = None
        elif kind == "fai":
            after = before + 1
            target.store(after)
            result = before
        elif kind == "swap":
            after = req.value
            target.store(after)
            result = before
        else:
            raise HarnessError(f"unknown access kind {kind!r}")
        if self.log:
            self._record(proc, kind, target.name, before, after, op)
        return result

    def _record(self, proc: int, kind: str, cell: str, before: object, after: object, op: int | None) -> None:
        self.records.append(AccessRecord(self._seq, proc, kind, cell, before, after, op))
        self._seq += 1

    def run(self, machine: StepMachine, proc: int = 1, op: int | None = None) -> object:
        """Drive one operation to completion with no interleaving."""
        try:
            req = next(machine)
            while True:
                req = machine.send(self.execute(proc, req, op))
        except StopIteration as stop:
            return stop.value

    def dump(self) -> str:
        return "".join(r.line() + "\n" for r in self.records)


def parse_access_log(text: str) -> list[AccessRecord]:
    from .values import parse_value

    out = []
    for line in text.splitlines():
        if not line.strip():
            continue
        seq, proc, kind, cell, before, after = line.split()
        out.append(AccessRecord(int(seq), int(proc), kind, cell, parse_value(before), parse_value(after)))
    return out


# --- objects built from registers ------------------------------------------


class RwCounter:
    """Wait-free linearizable counter over one single-writer register per process.

    INC writes the process's cached entry plus one (one shared write, no
    read); READ collects the n entries one by one and returns their sum.
    """

    def __init__(self, name: str, n: int, initial: int = 0) -> None:
        self.name = name
        self.n = n
        self.initial = initial
        self.entries = [Register(f"{name}.M[{i}]", 0) for i in range(n + 1)]
        self._cached = [0] * (n + 1)

    def _owner(self, proc: int) -> None:
        if not 1 <= proc <= self.n:
            raise ContractViolation(f"{self.name}: process {proc} outside 1..{self.n}")

    def inc(self, proc: int) -> StepMachine:
        self._owner(proc)
        self._cached[proc] += 1
        yield write(self.entries[proc], self._cached[proc])

    def read(self, proc: int) -> StepMachine:
        total = self.initial
        for i in range(1, self.n + 1):
            total += yield read(self.entries[i])
        return total

    def value(self) -> int:
        """Quiescent value, for assertions; not a shared-memory operation."""
        return self.initial + sum(r.value for r in self.entries[1:])


def name_space(p: int) -> int:
    """Largest name the grid hands out when ``p`` processes participate."""
    return p * (p + 1) // 2


class GridRenaming:
    """Adaptive renaming on a triangular grid of splitters (Moir and Anderson).

    A process entering splitter (r, c) writes its id to X, moves right if the
    door Y is already closed, otherwise closes it and stops iff X still holds
    its id, else moves down. With p participants every process stops on a
    diagonal below p, so names fall in 1..p(p+1)/2. Each splitter costs at
    most four accesses and a process visits at most p of them.
    """

    def __init__(self, name: str, n: int) -> None:
        self.name = name
        self.n = n
        self.assigned: dict[int, int | None] = {}
        self._grid: dict[tuple[int, int], tuple[Register, Register]] = {}

    def splitter(self, r: int, c: int) -> tuple[Register, Register]:
        s = self._grid.get((r, c))
        if s is None:
            fresh = (Register(f"{self.name}.X[{r},{c}]", None), Register(f"{self.name}.Y[{r},{c}]", False))
            s = self._grid.setdefault((r, c), fresh)
        return s

    @staticmethod
    def name_of(r: int, c: int) -> int:
        d = r + c
        return d * (d + 1) // 2 + r + 1

    def rename(self, proc: int) -> StepMachine:
        if proc in self.assigned:
            raise ContractViolation(f"{self.name}: process {proc} renamed twice")
        self.assigned[proc] = None
        r = c = 0
        while True:
            if r + c >= self.n:
                raise ContractViolation(f"{self.name}: more than {self.n} participants")
            x, y = self.splitter(r, c)
            yield write(x, proc)
            if (yield read(y)):
                c += 1
                continue
            yield write(y, True)
            if (yield read(x)) == proc:
                break
            r += 1
        name = self.name_of(r, c)
        self.assigned[proc] = name
        return name
