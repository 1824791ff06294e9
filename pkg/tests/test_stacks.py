import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import sweep
from relaxedsync.checker import check_lemma_properties, check_linearizable, check_set_linearizable
from relaxedsync.harness import (
    SCRIPTS,
    Workload,
    enumerate_schedules,
    parse_program,
    random_schedule,
    run_stress,
)
from relaxedsync.registers import CapacityExceeded, Memory, name_space
from relaxedsync.specs import SeqStackSpec, SetStackSpec
from relaxedsync.stacks import RenSetSeqStack, SeqStack, SetSeqStack
from relaxedsync.values import BOTTOM, EMPTY, OK, is_item, render

STACKS = [SeqStack, SetSeqStack, RenSetSeqStack]


def solo(stack, *calls, proc=1):
    mem = Memory()
    out = []
    for c in calls:
        out.append(mem.run(stack.push(proc, c) if c is not None else stack.pop(proc), proc))
    return out


@pytest.mark.parametrize("cls", STACKS)
def test_lifo_when_sequential(cls):
    assert solo(cls(2), 1, 2, None, None, None) == [OK, OK, 2, 1, EMPTY]


@pytest.mark.parametrize("cls", STACKS)
def test_pop_on_fresh_stack_is_empty(cls):
    assert solo(cls(3), None) == [EMPTY]


@pytest.mark.parametrize("cls", STACKS)
@given(ops=st.lists(st.one_of(st.none(), st.just("push")), max_size=30), proc=st.integers(1, 3))
def test_sequential_runs_match_the_sequential_stack(cls, ops, proc):
    s, spec, state, item = cls(3), SeqStackSpec(), SeqStackSpec.initial, 0
    mem = Memory(log=False)
    for op in ops:
        if op:
            item += 1
            got = mem.run(s.push(proc, item), proc)
            state, want = spec.apply(state, "push", item)
        else:
            got = mem.run(s.pop(proc), proc)
            state, want = spec.apply(state, "pop")
        assert got == want


def test_setseqstack_solo_push_layout():
    s = SetSeqStack(3)
    mem = Memory()
    mem.run(s.push(2, 9), 2)
    assert s.items[1, 2].load() == 9
    assert mem.run(s.top.read(1), 1) == 2


def test_setseqstack_concurrent_pushes_can_share_a_row():
    rows = set()
    for out in enumerate_schedules("setseqstack", parse_program("push(1) | push(2)")):
        writes = [r for r in out.records if r.kind == "write" and r.cell.startswith("Items")]
        rows.add(tuple(sorted(w.cell for w in writes)))
    assert ("Items[1][1]", "Items[1][2]") in rows  # same row, distinct columns
    assert ("Items[1][1]", "Items[2][2]") in rows


def test_setseqstack_no_item_lost_with_n_concurrent_pushes():
    prog = parse_program("push(1) | push(2) | push(3)")
    for out in enumerate_schedules(lambda: SetSeqStack(3), prog, distinct=True):
        cells = [r.cell for r in out.records if r.kind == "write" and r.cell.startswith("Items")]
        assert len(cells) == len(set(cells)) == 3


@pytest.mark.parametrize("cls", STACKS)
def test_capacity_is_reported(cls):
    s = cls(1, capacity=2)
    with pytest.raises(CapacityExceeded):
        solo(s, 1, 2, 3)


def test_multiplicity_schedule_returns_the_item_twice():
    out = SCRIPTS["multiplicity"].run()
    pops = [o.result for o in out.history.operations if o.name == "pop"]
    assert pops == [1, 1]
    assert check_set_linearizable(out.history, SetStackSpec()).accepted
    assert not check_linearizable(out.history, SeqStackSpec()).accepted


def test_seqstack_pop_pop_single_item_never_duplicates():
    for out in enumerate_schedules("seqstack", parse_program("push(1) ; pop | pop")):
        assert sorted(map(render, (o.result for o in out.history.operations[1:]))) == ["1", "empty"]


@pytest.mark.parametrize("program", ["push(1), push(2) ; pop | pop", "push(1) | push(2) ; pop | pop"])
def test_seqstack_histories_linearizable(program):
    stats = sweep("seqstack", program, lambda o: check_linearizable(o.history, SeqStackSpec()).accepted)
    assert stats.rejected == 0


@pytest.mark.parametrize("impl", ["setseqstack", "renstack"])
@pytest.mark.parametrize("program", ["push(1) ; pop | pop", "push(1), pop | push(2), pop", "push(1) | push(2) | pop"])
def test_relaxed_stack_histories_set_linearizable(impl, program):
    stats = sweep(impl, program, lambda o: check_set_linearizable(o.history, SetStackSpec()).accepted)
    assert stats.histories > 5 and stats.rejected == 0


class TestRenamingStack:
    def test_solo_push_lands_in_row_one_column_one(self):
        s = RenSetSeqStack(3)
        solo(s, 5)
        assert s.items[1][1].load() == 5

    def test_pop_scans_at_most_f_of_nops_columns(self):
        # k pushes forced into row 1, then a pop: columns read must be <= k(k+1)/2
        for k in (1, 2, 3):
            prog = parse_program(" | ".join(f"push({i})" for i in range(1, k + 1)) + " ; pop")
            rng = random.Random(k)
            for _ in range(30):
                out = random_schedule(lambda: RenSetSeqStack(3), prog, rng)
                last_op = max(r.op for r in out.records)
                row1 = [r for r in out.records if r.op == last_op and r.cell.startswith("Items[1][")]
                nops = sum(1 for r in out.records if r.cell.startswith("NOPS[1]") and r.kind == "write")
                assert len(row1) <= name_space(nops) + 1  # reads plus the clearing write

    def test_published_line_order_loses_a_completed_push(self):
        """Incrementing NOPS after renaming lets a pop miss a finished push."""
        prog = parse_program("push(1) | push(2) | pop")
        bad = None
        for out in enumerate_schedules(lambda: RenSetSeqStack(3, announce_first=False), prog,
                                       distinct=True, crashes=True):
            if not check_set_linearizable(out.history, SetStackSpec()).accepted:
                bad = out
                break
        assert bad is not None
        ops = bad.history.operations
        pop = next(o for o in ops if o.name == "pop")
        assert pop.result is EMPTY
        assert any(o.name == "push" and o.precedes(pop) for o in ops)

    def test_default_order_has_no_such_history(self):
        stats = sweep(lambda: RenSetSeqStack(3), "push(1) | push(2) | pop",
                      lambda o: check_set_linearizable(o.history, SetStackSpec()).accepted)
        assert stats.rejected == 0


@pytest.mark.parametrize("impl", ["setseqstack", "renstack"])
def test_stress_lemma_properties(impl):
    for seed in range(3):
        res = run_stress(impl, Workload(n=4, ops=4000, seed=seed))
        report = check_lemma_properties(res.history, "stack")
        assert report.violations == []
        pushed = {o.arg for o in res.history.operations if o.name == "push"}
        popped = {o.result for o in res.history.operations if o.name == "pop" and is_item(o.result)}
        assert popped <= pushed


@pytest.mark.parametrize("impl", ["setseqstack", "renstack", "seqstack"])
def test_stress_pops_return_only_pushed_items(impl):
    res = run_stress(impl, Workload(n=3, ops=600, seed=4, bulk_scans=False))
    ops = res.history.operations
    pushed = {o.arg for o in ops if o.name == "push"}
    popped = {o.result for o in ops if o.name == "pop" and is_item(o.result)}
    assert popped <= pushed


def test_pool_property_by_draining_in_sim():
    rng = random.Random(3)
    prog = parse_program("push(1), pop, push(2) | push(3), pop | pop, push(4)")
    for _ in range(200):
        s = SetSeqStack(3)
        out = random_schedule(lambda: s, prog, rng)
        popped = [o.result for o in out.history.operations if o.name == "pop" and is_item(o.result)]
        mem = Memory(log=False)
        rest = []
        while (x := mem.run(s.pop(1), 1)) is not EMPTY:
            rest.append(x)
        assert set(popped) | set(rest) == {1, 2, 3, 4}
        assert not set(popped) & set(rest)
        assert all(c is BOTTOM for c in (s.items[r, k].load() for r in range(1, 6) for k in range(1, 4)))
