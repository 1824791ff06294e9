"""Histories and brute-force deciders for the three correctness conditions.

All three deciders are depth-first searches with memoization on
``(progress, spec state)``. They are exponential by nature, so each one
refuses histories above a size cap and raises :class:`SearchBudgetExceeded`
after a configurable number of search nodes instead of guessing.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

from .specs import IntervalQueueSpec, IntervalState, IntervalTransition, Member
from .values import EMPTY, WEAK_EMPTY, is_item, render

DEFAULT_BUDGET = 10**7
LIN_MAX_OPS = 14
INTERVAL_MAX_OPS = 10


class HistoryError(ValueError):
    """The event sequence is not a well-formed history."""


class HistoryTooLarge(ValueError):
    pass


class SearchBudgetExceeded(RuntimeError):
    def __init__(self, nodes: int) -> None:
        super().__init__(f"search budget of {nodes} nodes exhausted")
        self.nodes = nodes


class WitnessError(AssertionError):
    pass


def resolve_budget(budget: int | None) -> int:
    if budget is not None:
        return budget
    env = os.environ.get("RELAXEDSYNC_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


@dataclass(frozen=True, slots=True)
class Event:
    seq: int
    proc: int
    kind: str  # "inv" | "res"
    op: str
    payload: object = None


@dataclass(frozen=True, slots=True)
class Operation:
    id: int
    proc: int
    name: str
    arg: object
    result: object  # None while pending
    inv: int
    res: int | None

    @property
    def pending(self) -> bool:
        return self.res is None

    def precedes(self, other: Operation) -> bool:
        return self.res is not None and self.res < other.inv

    def overlaps(self, other: Operation) -> bool:
        return not (self.precedes(other) or other.precedes(self))

    def call(self) -> str:
        return self.name if self.arg is None else f"{self.name}({render(self.arg)})"

    def label(self, result: object = None) -> str:
        shown = self.result if result is None else result
        tail = "pending" if shown is None else render(shown)
        return f"p{self.proc} {self.call()} -> {tail}"


class History:
    """A well-formed sequence of invocation and response events.

    Events must carry strictly increasing ``seq`` values, and each process
    must alternate invocation and response for the same operation name.
    """

    def __init__(self, events: Iterable[Event], n: int | None = None) -> None:
        self.events: list[Event] = list(events)
        last = -1
        open_ops: dict[int, tuple[int, Event]] = {}
        ops: list[Operation] = []
        max_proc = 0
        for e in self.events:
            if e.seq <= last:
                raise HistoryError(f"event seq {e.seq} not after {last}")
            last = e.seq
            if e.proc < 1:
                raise HistoryError(f"process id {e.proc} < 1")
            max_proc = max(max_proc, e.proc)
            if e.kind == "inv":
                if e.proc in open_ops:
                    raise HistoryError(f"p{e.proc} invokes {e.op} at {e.seq} with an operation pending")
                open_ops[e.proc] = (len(ops), e)
                ops.append(None)  # type: ignore[arg-type]
            elif e.kind == "res":
                if e.proc not in open_ops:
                    raise HistoryError(f"p{e.proc} responds at {e.seq} without a pending operation")
                slot, inv = open_ops.pop(e.proc)
                if inv.op != e.op:
                    raise HistoryError(f"p{e.proc} invoked {inv.op} but response is for {e.op}")
                ops[slot] = Operation(slot, e.proc, e.op, inv.payload, e.payload, inv.seq, e.seq)
            else:
                raise HistoryError(f"unknown event kind {e.kind!r}")
        for slot, inv in open_ops.values():
            ops[slot] = Operation(slot, inv.proc, inv.op, inv.payload, None, inv.seq, None)
        if n is not None and max_proc > n:
            raise HistoryError(f"process {max_proc} exceeds n={n}")
        self.n = n if n is not None else max_proc
        self.operations: list[Operation] = ops

    @classmethod
    def build(cls, steps: Iterable[tuple], n: int | None = None) -> History:
        """Build from ``(proc, kind, op[, payload])`` tuples numbered from 0."""
        return cls((Event(i, *s) for i, s in enumerate(steps)), n)

    def __len__(self) -> int:
        return len(self.operations)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, History) and self.events == other.events and self.n == other.n

    def __hash__(self) -> int:
        return hash(tuple(self.events))

    def is_sequential(self) -> bool:
        open_now = False
        for e in self.events:
            if e.kind == "inv":
                if open_now:
                    return False
                open_now = True
            else:
                open_now = False
        return True

    def completed(self) -> list[Operation]:
        return [o for o in self.operations if not o.pending]

    def map_results(self, fn) -> History:
        """Copy of the history with every response payload passed through ``fn``."""
        return History(
            (Event(e.seq, e.proc, e.kind, e.op, fn(e.payload) if e.kind == "res" else e.payload) for e in self.events),
            self.n,
        )


def _predecessor_masks(ops: Sequence[Operation]) -> list[int]:
    masks = []
    for b in ops:
        m = 0
        for a in ops:
            if a.precedes(b):
                m |= 1 << a.id
        masks.append(m)
    return masks


def _completed_mask(ops: Sequence[Operation]) -> int:
    m = 0
    for o in ops:
        if not o.pending:
            m |= 1 << o.id
    return m


def _cap(history: History, max_ops: int | None, what: str) -> None:
    if max_ops is not None and len(history) > max_ops:
        raise HistoryTooLarge(f"{what} checking is capped at {max_ops} operations, history has {len(history)}")


@dataclass
class Verdict:
    accepted: bool
    condition: str  # "lin" | "setlin" | "intlin"
    witness: tuple | None = None
    explored: int = 0

    def render(self) -> str:
        if not self.accepted:
            return f"rejected: no {_CONDITION_NAMES[self.condition]} exists ({self.explored} search nodes explored)\n"
        lines = [f"accepted: {_CONDITION_NAMES[self.condition]} found ({self.explored} search nodes explored)"]
        assert self.witness is not None
        for step in self.witness:
            lines.append(_render_step(self.condition, step))
        return "\n".join(lines) + "\n"


_CONDITION_NAMES = {
    "lin": "linearization",
    "setlin": "set-linearization",
    "intlin": "interval-linearization",
}


@dataclass(frozen=True)
class IntervalStep:
    transition: IntervalTransition
    anchor: tuple[Operation, ...]
    registered: tuple[Operation, ...]
    responded: tuple[Operation, ...]
    after: IntervalState


def _render_step(condition: str, step: object) -> str:
    if condition == "lin":
        op, result = step  # type: ignore[misc]
        return op.label(result)
    if condition == "setlin":
        ops, result = step  # type: ignore[misc]
        return "{" + ", ".join(o.label(result) for o in ops) + "}"
    assert isinstance(step, IntervalStep)
    return f"{step.transition}  => {step.after}"


# --- linearizability ---------------------------------------------------------


def check_linearizable(history: History, spec, budget: int | None = None, max_ops: int | None = LIN_MAX_OPS) -> Verdict:
    """Wing-Gong style search: extend a sequential order one operation at a time.

    The next operation must be invoked before the earliest response among the
    completed operations not yet placed. Pending operations may be placed
    (with whatever result the spec gives) or left out.
    """
    _cap(history, max_ops, "linearizability")
    limit = resolve_budget(budget)
    ops = sorted(history.operations, key=lambda o: (o.proc, o.name, o.id))
    goal = _completed_mask(history.operations)
    failed: set = set()
    order: list[tuple[Operation, object]] = []
    nodes = 0

    def dfs(done: int, state) -> bool:
        nonlocal nodes
        if done & goal == goal:
            return True
        if (done, state) in failed:
            return False
        nodes += 1
        if nodes > limit:
            raise SearchBudgetExceeded(limit)
        horizon = min(o.res for o in ops if o.res is not None and not done >> o.id & 1)
        for o in ops:
            if done >> o.id & 1 or o.inv > horizon:
                continue
            nxt, result = spec.apply(state, o.name, o.arg)
            if not o.pending and result != o.result:
                continue
            order.append((o, result))
            if dfs(done | 1 << o.id, nxt):
                return True
            order.pop()
        failed.add((done, state))
        return False

    ok = dfs(0, spec.initial)
    return Verdict(ok, "lin", tuple(order) if ok else None, nodes)


# --- set-linearizability -----------------------------------------------------


def check_set_linearizable(
    history: History,
    spec,
    budget: int | None = None,
    max_ops: int | None = LIN_MAX_OPS,
    max_class_size: int | None = None,
) -> Verdict:
    """Search over ordered partitions into concurrency classes.

    A class may only contain operations all of whose real-time predecessors
    are already placed, which makes every class an antichain of mutually
    overlapping operations. ``max_class_size=1`` restricts the search to
    singleton classes, i.e. to plain linearizations.
    """
    _cap(history, max_ops, "set-linearizability")
    limit = resolve_budget(budget)
    ops = history.operations
    preds = _predecessor_masks(ops)
    goal = _completed_mask(ops)
    biggest = max_class_size or max(history.n, 1)
    failed: set = set()
    order: list[tuple[tuple[Operation, ...], object]] = []
    nodes = 0

    def dfs(done: int, state) -> bool:
        nonlocal nodes
        if done & goal == goal:
            return True
        if (done, state) in failed:
            return False
        nodes += 1
        if nodes > limit:
            raise SearchBudgetExceeded(limit)
        eligible = sorted(
            (o for o in ops if not done >> o.id & 1 and preds[o.id] & ~done == 0),
            key=lambda o: (o.proc, o.name),
        )
        for size in range(1, min(biggest, len(eligible)) + 1):
            for cls in combinations(eligible, size):
                members = [Member(o.proc, o.name, o.arg, o.result) for o in cls]
                nxt = spec.set_step(state, members)
                if nxt is None:
                    continue
                mask = 0
                for o in cls:
                    mask |= 1 << o.id
                order.append((cls, spec.result_of(state, members)))
                if dfs(done | mask, nxt):
                    return True
                order.pop()
        failed.add((done, state))
        return False

    ok = dfs(0, spec.initial)
    return Verdict(ok, "setlin", tuple(order) if ok else None, nodes)


# --- interval-linearizability ------------------------------------------------


def _subsets(items: Sequence, limit: int) -> Iterable[tuple]:
    for size in range(0, min(limit, len(items)) + 1):
        yield from combinations(items, size)


def check_interval_linearizable(
    history: History,
    spec: IntervalQueueSpec,
    budget: int | None = None,
    max_ops: int | None = INTERVAL_MAX_OPS,
) -> Verdict:
    """Search over sequences of weak-empty queue transitions.

    Every operation is either an anchor (starts and ends at one transition)
    or a weak-empty dequeue that is registered at one transition and
    responds at the same or a later one. An operation may take part in a
    transition only once all of its real-time predecessors have ended.
    Pending operations are never registered: dropping them is always at
    least as permissive.
    """
    _cap(history, max_ops, "interval-linearizability")
    if history.n > spec.n:
        raise HistoryError(f"history has {history.n} processes, spec allows {spec.n}")
    limit = resolve_budget(budget)
    ops = history.operations
    for o in ops:
        if o.name not in ("enq", "deq"):
            raise HistoryError(f"queue history contains operation {o.name!r}")
    preds = _predecessor_masks(ops)
    goal = _completed_mask(ops)
    failed: set = set()
    steps: list[IntervalStep] = []
    nodes = 0
    cap_k = max(spec.n - 1, 0)

    def anchors(eligible: list[Operation], state: IntervalState):
        q = state.queue
        for o in eligible:
            if o.name == "enq":
                yield ("enq", o.arg, (o,))
        deqs = [o for o in eligible if o.name == "deq"]
        if q:
            fit = [o for o in deqs if o.result is None or o.result == q[0]]
            sizes = range(1, len(fit) + 1) if spec.multiplicity else range(1, min(1, len(fit)) + 1)
            for size in sizes:
                for group in combinations(fit, size):
                    yield ("deq", q[0], group)
        else:
            for o in deqs:
                if o.result is None or o.result is EMPTY:
                    yield ("deq", EMPTY, (o,))
                elif o.result is WEAK_EMPTY and spec.allow_2e:
                    yield ("deq", WEAK_EMPTY, (o,))

    def dfs(started: int, done: int, state: IntervalState) -> bool:
        nonlocal nodes
        if done & goal == goal:
            return True
        key = (started, done, state)
        if key in failed:
            return False
        nodes += 1
        if nodes > limit:
            raise SearchBudgetExceeded(limit)
        eligible = sorted(
            (o for o in ops if not started >> o.id & 1 and preds[o.id] & ~done == 0),
            key=lambda o: (o.proc, o.name),
        )
        waiting = [o for o in ops if started >> o.id & 1 and not done >> o.id & 1]
        for kind, value, group in anchors(eligible, state):
            gmask = 0
            for o in group:
                gmask |= 1 << o.id
            reg_pool = [o for o in eligible if o.name == "deq" and o.result is WEAK_EMPTY and not gmask >> o.id & 1]
            for reg in _subsets(reg_pool, cap_k):
                resp_pool = waiting + list(reg)
                for resp in _subsets(resp_pool, cap_k):
                    t = IntervalTransition(
                        kind,
                        tuple(o.proc for o in group),
                        value,
                        frozenset(o.proc for o in reg),
                        frozenset(o.proc for o in resp),
                    )
                    nxt = spec.interval_step(state, t)
                    if nxt is None:
                        continue
                    rmask = sum(1 << o.id for o in reg)
                    jmask = sum(1 << o.id for o in resp)
                    steps.append(IntervalStep(t, group, tuple(reg), tuple(resp), nxt))
                    if dfs(started | gmask | rmask, done | gmask | jmask, nxt):
                        return True
                    steps.pop()
        failed.add(key)
        return False

    ok = dfs(0, 0, spec.initial)
    return Verdict(ok, "intlin", tuple(steps) if ok else None, nodes)


# --- witness validation ------------------------------------------------------


def _check_order(history: History, first: dict[int, int], last: dict[int, int]) -> None:
    for o in history.operations:
        if not o.pending and o.id not in last:
            raise WitnessError(f"completed operation {o.label()} missing from witness")
    for a in history.operations:
        for b in history.operations:
            if a.precedes(b) and b.id in first and not last[a.id] < first[b.id]:
                raise WitnessError(f"{a.label()} precedes {b.label()} in the history but not in the witness")


def validate_witness(history: History, verdict: Verdict, spec) -> None:
    """Replay an accepting verdict's witness through ``spec`` and check real-time order.

    Raises :class:`WitnessError` on any discrepancy.
    """
    if not verdict.accepted or verdict.witness is None:
        raise WitnessError("verdict carries no witness")
    first: dict[int, int] = {}
    last: dict[int, int] = {}

    def place(o: Operation, i: int, *, start: bool = True, end: bool = True) -> None:
        if start:
            if o.id in first:
                raise WitnessError(f"{o.label()} starts twice")
            first[o.id] = i
        if end:
            if o.id in last:
                raise WitnessError(f"{o.label()} ends twice")
            last[o.id] = i

    known = {o.id: o for o in history.operations}
    if verdict.condition == "lin":
        state = spec.initial
        for i, (o, result) in enumerate(verdict.witness):
            if known.get(o.id) != o:
                raise WitnessError(f"{o.label()} is not in the history")
            state, got = spec.apply(state, o.name, o.arg)
            if got != result or (not o.pending and got != o.result):
                raise WitnessError(f"{o.label()} replays to {render(got)}")
            place(o, i)
    elif verdict.condition == "setlin":
        state = spec.initial
        for i, (cls, result) in enumerate(verdict.witness):
            members = [Member(o.proc, o.name, o.arg, o.result) for o in cls]
            nxt = spec.set_step(state, members)
            if nxt is None:
                raise WitnessError("class {" + ", ".join(o.label() for o in cls) + "} rejected by the specification")
            if spec.result_of(state, members) != result:
                raise WitnessError("class result mismatch")
            for o in cls:
                if known.get(o.id) != o:
                    raise WitnessError(f"{o.label()} is not in the history")
                place(o, i)
            state = nxt
    elif verdict.condition == "intlin":
        state = spec.initial
        for i, step in enumerate(verdict.witness):
            t = step.transition
            nxt = spec.interval_step(state, t)
            if nxt is None or nxt != step.after:
                raise WitnessError(f"transition {t} rejected by the specification")
            if tuple(o.proc for o in step.anchor) != t.procs:
                raise WitnessError(f"anchor processes disagree with {t}")
            if {o.proc for o in step.registered} != t.registered or {o.proc for o in step.responded} != t.responded:
                raise WitnessError(f"registered/responded processes disagree with {t}")
            for o in step.anchor:
                if o.name != t.kind or (t.kind == "enq" and o.arg != t.value):
                    raise WitnessError(f"{o.label()} cannot anchor {t}")
                if t.kind == "deq" and not o.pending and o.result != t.value:
                    raise WitnessError(f"{o.label()} cannot anchor {t}")
                place(o, i)
            for o in step.registered:
                if o.result is not WEAK_EMPTY:
                    raise WitnessError(f"{o.label()} registered but does not return weak-empty")
                place(o, i, end=False)
            for o in step.responded:
                if o.id not in first:
                    raise WitnessError(f"{o.label()} responds before registering")
                place(o, i, start=False)
            state = nxt
        for op_id in first:
            if op_id not in last:
                raise WitnessError(f"{known[op_id].label()} registered but never responds")
    else:
        raise WitnessError(f"unknown condition {verdict.condition!r}")
    _check_order(history, first, last)


# --- direct property checks ----------------------------------------------------


@dataclass
class LemmaReport:
    flavor: str
    duplicate_pairs: list[tuple[Operation, Operation, bool]] = field(default_factory=list)
    sequential: bool = False
    no_concurrent_removals: bool = False
    distinct_returns: bool = False
    linearizable: bool | None = None  # None when not applicable or not checked

    @property
    def violations(self) -> list[tuple[Operation, Operation]]:
        return [(a, b) for a, b, overlap in self.duplicate_pairs if not overlap]

    @property
    def consistent(self) -> bool:
        return not self.violations and self.linearizable is not False

    def render(self) -> str:
        lines = [
            f"flavor: {self.flavor}",
            f"duplicate pairs: {len(self.duplicate_pairs)} ({len(self.violations)} without overlap)",
        ]
        for a, b in self.violations:
            lines.append(f"  violation: {a.label()} and {b.label()} do not overlap")
        lines.append(f"sequential: {str(self.sequential).lower()}")
        lines.append(f"no concurrent removals: {str(self.no_concurrent_removals).lower()}")
        lines.append(f"distinct returns: {str(self.distinct_returns).lower()}")
        lin = "not checked" if self.linearizable is None else str(self.linearizable).lower()
        lines.append(f"linearizable: {lin}")
        lines.append(f"consistent: {str(self.consistent).lower()}")
        return "\n".join(lines) + "\n"


def check_lemma_properties(
    history: History,
    flavor: str,
    lin_max_ops: int = LIN_MAX_OPS,
    budget: int | None = None,
) -> LemmaReport:
    """Duplicate returns must overlap; restricted histories must be linearizable.

    The second part runs the plain linearizability checker, and only for
    histories within ``lin_max_ops`` operations.
    """
    from .specs import SeqQueueSpec, SeqStackSpec

    spec = SeqStackSpec() if flavor == "stack" else SeqQueueSpec()
    removals = [o for o in history.operations if o.name == spec.remove]
    report = LemmaReport(flavor)

    by_item: dict[object, list[Operation]] = {}
    for o in removals:
        if is_item(o.result):
            by_item.setdefault(o.result, []).append(o)
    for group in by_item.values():
        for a, b in combinations(group, 2):
            report.duplicate_pairs.append((a, b, a.overlaps(b)))
    report.distinct_returns = not report.duplicate_pairs

    report.sequential = history.is_sequential()
    # removals overlap iff one starts before the latest response seen so far
    report.no_concurrent_removals = True
    horizon = -1
    for o in sorted(removals, key=lambda o: o.inv):
        if o.inv < horizon:
            report.no_concurrent_removals = False
            break
        horizon = float("inf") if o.res is None else max(horizon, o.res)

    restricted = report.sequential or report.no_concurrent_removals or report.distinct_returns
    if restricted and len(history) <= lin_max_ops:
        try:
            report.linearizable = check_linearizable(history, spec, budget=budget, max_ops=lin_max_ops).accepted
        except SearchBudgetExceeded:
            report.linearizable = None
    return report
