"""Executable specifications: sequential, set-concurrent and interval-concurrent.

All specs are pure. Sequential specs map ``(state, op, arg)`` to
``(state', result)``. Set specs validate a whole concurrency class at once;
the interval spec validates one transition of the weak-empty queue. Invalid
steps return ``None``. Which operations share a class, and which transition
fires, is left to the search in :mod:`relaxedsync.checker`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .values import EMPTY, OK, WEAK_EMPTY, is_item


class SpecError(ValueError):
    pass


class Member(NamedTuple):
    """One operation inside a concurrency class; ``result=None`` means unconstrained."""

    proc: int
    op: str
    arg: object = None
    result: object = None


ConcurrencyClass = Sequence[Member]


def _fits(result: object, expected: object) -> bool:
    return result is None or result == expected


class SeqStackSpec:
    """Sequential stack. State is a tuple whose first element is the top."""

    name = "stack"
    insert, remove = "push", "pop"
    initial: tuple = ()

    def apply(self, state: tuple, op: str, arg: object = None) -> tuple[tuple, object]:
        if op == self.insert:
            return (arg,) + state, OK
        if op == self.remove:
            return (state[1:], state[0]) if state else (state, EMPTY)
        raise SpecError(f"{self.name} spec has no operation {op!r}")

    seq_step = apply

    def set_step(self, state: tuple, cls: ConcurrencyClass) -> tuple | None:
        """Multiplicity step: one insert, one empty removal, or t removals of the head."""
        if not cls or len({m.proc for m in cls}) != len(cls):
            return None
        ops = {m.op for m in cls}
        if ops == {self.insert}:
            if len(cls) != 1:
                return None
            return self.apply(state, self.insert, cls[0].arg)[0]
        if ops != {self.remove}:
            return None
        if not state:
            if len(cls) == 1 and _fits(cls[0].result, EMPTY):
                return state
            return None
        head = state[0]
        if all(_fits(m.result, head) for m in cls):
            return state[1:]
        return None

    def result_of(self, state: tuple, cls: ConcurrencyClass) -> object:
        """Response shared by every member of a valid class."""
        if cls[0].op == self.insert:
            return OK
        return state[0] if state else EMPTY


class SeqQueueSpec(SeqStackSpec):
    """Sequential queue. State is a tuple whose first element is the head."""

    name = "queue"
    insert, remove = "enq", "deq"

    def apply(self, state: tuple, op: str, arg: object = None) -> tuple[tuple, object]:
        if op == self.insert:
            return state + (arg,), OK
        if op == self.remove:
            return (state[1:], state[0]) if state else (state, EMPTY)
        raise SpecError(f"{self.name} spec has no operation {op!r}")

    seq_step = apply


# The set-concurrent specs share the sequential state space; their extra
# power is entirely in set_step.
SetStackSpec = SeqStackSpec
SetQueueSpec = SeqQueueSpec


class CounterSpec:
    name = "counter"
    initial = 0

    def __init__(self, initial: int = 0) -> None:
        self.initial = initial

    def apply(self, state: int, op: str, arg: object = None) -> tuple[int, object]:
        if op == "inc":
            return state + 1, OK
        if op == "read":
            return state, state
        raise SpecError(f"counter spec has no operation {op!r}")

    seq_step = apply


@dataclass(frozen=True)
class IntervalState:
    queue: tuple = ()
    pending: tuple = ()  # pending[i - 1] is P[i]: a tuple of items, or None when unregistered

    def p(self, proc: int) -> tuple | None:
        return self.pending[proc - 1]

    def __str__(self) -> str:
        ps = " ".join("-" if p is None else "(" + ",".join(map(str, p)) + ")" for p in self.pending)
        return f"q=({','.join(map(str, self.queue))}) P=[{ps}]"


@dataclass(frozen=True)
class IntervalTransition:
    """A transition of the weak-empty queue.

    The anchor is one enqueue, or one dequeue returning ``value`` (several
    dequeues of the same item when the spec allows multiplicity).
    ``registered`` are processes whose weak-empty dequeues begin here;
    ``responded`` are processes whose weak-empty dequeues return here.
    """

    kind: str  # "enq" | "deq"
    procs: tuple[int, ...]
    value: object
    registered: frozenset[int] = frozenset()
    responded: frozenset[int] = frozenset()

    def __str__(self) -> str:
        who = ",".join(f"p{p}" for p in self.procs)
        val = self.value.value if hasattr(self.value, "value") else self.value
        head = f"enq({val})@{who}" if self.kind == "enq" else f"deq->{val}@{who}"
        reg = ",".join(f"p{p}" for p in sorted(self.registered))
        res = ",".join(f"p{p}" for p in sorted(self.responded))
        return f"{head} register[{reg}] respond-weakempty[{res}]"


class IntervalQueueSpec:
    """Interval-concurrent queue with weak-empty, optionally with multiplicity.

    The state pairs the queue with P: for each process, either None or the
    items that still have to be dequeued before that process's pending
    dequeue may return weak-empty. Set ``allow_2e=False`` to forbid the
    single-point weak-empty answer on an empty queue (a plain empty answer
    stays allowed there).
    """

    name = "intqueue"

    def __init__(self, n: int, multiplicity: bool = False, allow_2e: bool = True) -> None:
        self.n = n
        self.multiplicity = multiplicity
        self.allow_2e = allow_2e
        self.initial = IntervalState((), (None,) * n)

    def _procs_ok(self, t: IntervalTransition) -> bool:
        everyone = (*t.procs, *t.registered, *t.responded)
        if not all(1 <= p <= self.n for p in everyone):
            return False
        if len(set(t.procs)) != len(t.procs) or not t.procs:
            return False
        if len(t.registered) > self.n - 1 or len(t.responded) > self.n - 1:
            return False
        # (a): invokers of the anchor are not also being registered
        return not (set(t.procs) & t.registered)

    def interval_step(self, state: IntervalState, t: IntervalTransition) -> IntervalState | None:
        if not self._procs_ok(t):
            return None
        q, P = state.queue, state.pending
        reg, resp = t.registered, t.responded
        # (b)
        if any(P[i - 1] is not None for i in reg):
            return None

        if t.kind == "enq":
            if len(t.procs) != 1 or not is_item(t.value):
                return None
            # (c) in the enqueue case
            for j in resp:
                if not (P[j - 1] == () or (P[j - 1] is None and q == () and j in reg)):
                    return None
            S = []
            for s in range(1, self.n + 1):
                if s in resp:
                    S.append(None)
                elif s in reg:
                    S.append(q)
                else:
                    S.append(P[s - 1])
            return IntervalState(q + (t.value,), tuple(S))

        if t.kind != "deq":
            return None

        if t.value in (EMPTY, WEAK_EMPTY):
            # (e): alone on an empty queue
            if q or reg or resp or len(t.procs) != 1:
                return None
            if t.value is WEAK_EMPTY and not self.allow_2e:
                return None
            return state

        x = t.value
        if not is_item(x) or not q or q[0] != x:
            return None
        if len(t.procs) > 1 and not self.multiplicity:
            return None
        rest = q[1:]
        # (c) in the dequeue case
        for j in resp:
            if not (P[j - 1] == (x,) or (P[j - 1] is None and rest == () and j in reg)):
                return None
        S = []
        for s in range(1, self.n + 1):
            ps = P[s - 1]
            if s in resp:
                S.append(None)
            elif s in reg:
                S.append(rest)
            elif ps is None:
                S.append(None)
            elif ps and ps[0] == x:
                S.append(ps[1:])
            else:
                # the first symbol of P[s] must be x
                return None
        return IntervalState(rest, tuple(S))

    def run(self, transitions: Iterable[IntervalTransition]) -> IntervalState | None:
        state = self.initial
        for t in transitions:
            state = self.interval_step(state, t)
            if state is None:
                return None
        return state


SPECS = {
    "stack": SeqStackSpec,
    "queue": SeqQueueSpec,
    "counter": CounterSpec,
}
