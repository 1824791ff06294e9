import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from relaxedsync.checker import History, check_lemma_properties, check_linearizable
from relaxedsync.harness import (
    SCRIPTS,
    BoundExceeded,
    Call,
    Execution,
    InvalidSchedule,
    TraceParseError,
    Workload,
    audit_access_patterns,
    enumerate_schedules,
    format_program,
    format_trace,
    has_duplicate_return,
    interleavings,
    make_impl,
    parse_program,
    parse_trace,
    random_schedule,
    replay,
    run_stress,
    scan_passes,
)
from relaxedsync.registers import ContractViolation
from relaxedsync.specs import SeqQueueSpec, SeqStackSpec
from relaxedsync.values import EMPTY, OK, WEAK_EMPTY


class TestPrograms:
    def test_parse_phases_and_slots(self):
        prog = parse_program("push(1) ; pop, push(2) | pop")
        assert prog.phases == ({1: (Call("push", 1),)}, {1: (Call("pop"), Call("push", 2)), 2: (Call("pop"),)})
        assert prog.n == 2 and prog.size == 4 and prog.items() == [1, 2]

    def test_named_slots(self):
        prog = parse_program("p3: deq | p1: enq(4)")
        assert set(prog.phases[0]) == {1, 3} and prog.n == 3

    def test_format_roundtrip(self):
        prog = parse_program("push(1) ; pop | pop")
        assert format_program(prog) == "p1: push(1) ; p1: pop | p2: pop"
        assert parse_program(format_program(prog)) == prog

    @pytest.mark.parametrize("text", ["push(1) | push(1)", "push(0)", "pu sh(x)", "p1: pop | p1: pop"])
    def test_bad_programs(self, text):
        with pytest.raises((ValueError, ContractViolation)):
            parse_program(text)


class TestScheduling:
    @pytest.mark.parametrize("impl,program,steps", [
        ("seqstack", "push(1) | push(2)", (2, 2)),
        ("seqqueue", "enq(1) | enq(2)", (2, 2)),
        ("setseqstack", "push(1) | push(2)", (4, 4)),
        ("setseqqueue", "enq(1) | enq(2)", (4, 4)),
    ])
    def test_schedule_count_of_independent_operations(self, impl, program, steps):
        # a read/write insert is a two-entry counter read, an increment and an item write
        outs = list(enumerate_schedules(impl, parse_program(program)))
        assert len(outs) == interleavings(*steps)
        assert len({o.schedule for o in outs}) == len(outs)

    def test_unknown_process_step_is_invalid(self):
        ex = Execution(make_impl("seqstack", 2), parse_program("push(1)"))
        with pytest.raises(InvalidSchedule):
            ex.step(2)

    def test_schedule_past_the_end_is_invalid(self):
        with pytest.raises(InvalidSchedule):
            replay("seqstack", parse_program("push(1)"), [1, 1, 1])

    def test_program_larger_than_structure(self):
        with pytest.raises(ContractViolation):
            Execution(make_impl("seqstack", 1), parse_program("push(1) | push(2)"))

    def test_phases_are_barriers(self):
        for out in enumerate_schedules("seqstack", parse_program("push(1) | push(2) ; pop")):
            pop = out.history.operations[-1]
            assert all(o.precedes(pop) for o in out.history.operations[:-1])

    def test_bound(self):
        with pytest.raises(BoundExceeded):
            list(enumerate_schedules("seqqueue", parse_program("enq(1), enq(2), enq(3)"), bound=4))

    def test_crash_prefixes(self):
        outs = list(enumerate_schedules("seqstack", parse_program("push(1) | push(2)"), crashes=True))
        # every prefix of every interleaving of two 2-step operations
        assert len(outs) == sum(interleavings(i, j) for i in range(3) for j in range(3))
        assert any(any(o.pending for o in out.history.operations) for out in outs)
        assert outs[0].schedule == ()

    @pytest.mark.parametrize("impl,program", [
        ("seqstack", "push(1) ; pop | pop"),
        ("setseqstack", "push(1) | pop"),
        ("setseqqueue", "enq(1) ; deq | deq"),
        ("intseqqueue", "deq | enq(1) | deq"),
        ("naivequeue", "enq(1) ; deq | enq(2) | deq"),
    ])
    @pytest.mark.parametrize("crashes", [False, True])
    def test_distinct_mode_finds_every_history(self, impl, program, crashes):
        prog = parse_program(program)
        full = {tuple(o.history.events) for o in enumerate_schedules(impl, prog, crashes=crashes)}
        cut = [tuple(o.history.events) for o in enumerate_schedules(impl, prog, crashes=crashes, distinct=True)]
        assert len(cut) == len(set(cut)) and set(cut) == full


class TestDeterminism:
    @pytest.mark.parametrize("impl", ["setseqstack", "renstack", "setseqqueue", "intseqqueue", "rwintseqqueue"])
    def test_replay_reproduces_trace_and_access_log(self, impl):
        kind = make_impl(impl, 3).kind
        text = "push(1), pop | push(2), pop | pop, push(3)" if kind == "stack" else "enq(1), deq | enq(2), deq | deq, enq(3)"
        prog = parse_program(text)
        rng = random.Random(0)
        for _ in range(20):
            out = random_schedule(impl, prog, rng)
            again = replay(impl, prog, out.schedule)
            assert again.trace() == out.trace() and again.access_log() == out.access_log()

    def test_scripts_replay(self):
        for name, script in SCRIPTS.items():
            a, b = script.run(), script.run()
            assert a.trace() == b.trace(), name


class TestTraces:
    def test_roundtrip(self):
        out = SCRIPTS["weakempty"].run()
        text = out.trace()
        hist, impl = parse_trace(text)
        assert impl == "intseqqueue" and hist == out.history
        assert format_trace(hist, impl) == text

    def test_format(self):
        out = SCRIPTS["fig8"].run()
        lines = out.trace().splitlines()
        assert lines[0] == "trace v1 n=3 impl=naivequeue"
        assert lines[1] == "0 1 inv enq 1" and lines[2] == "1 1 res enq true"
        assert lines[3] == "2 1 inv deq -"

    def test_empty_file(self):
        hist, _ = parse_trace("")
        assert len(hist) == 0

    @pytest.mark.parametrize("text", [
        "nonsense\n",
        "trace v1 n=2 impl=x\n0 1 inv push\n",
        "trace v1 n=2 impl=x\n0 1 go push 1\n",
        "trace v1 n=2 impl=x\n0 1 res pop 1\n",
        "trace v1 n=1 impl=x\n0 2 inv pop -\n",
        "trace v1 n=2 impl=x\n0 1 inv push banana\n",
    ])
    def test_malformed(self, text):
        with pytest.raises(TraceParseError):
            parse_trace(text)

    @given(st.lists(st.tuples(st.integers(1, 3), st.sampled_from(["push", "pop"]),
                              st.one_of(st.integers(1, 99), st.sampled_from([EMPTY, WEAK_EMPTY, OK]))), max_size=12))
    def test_roundtrip_property(self, calls):
        steps = []
        for proc, op, res in calls:
            steps.append((proc, "inv", op, res if op == "push" and isinstance(res, int) else None))
            steps.append((proc, "res", op, res))
        hist = History.build(steps, 3)
        assert parse_trace(format_trace(hist, "x"))[0] == hist


class TestAudit:
    def _run(self, impl):
        prog = parse_program("push(1), pop | push(2), pop, pop")
        return random_schedule(impl, prog, random.Random(1))

    def test_fai_swap_stack_is_flagged(self):
        report = audit_access_patterns(self._run("seqstack").records)
        assert report.rmw_flags >= 2 and not report.clean

    def test_read_write_stack_is_clean(self):
        report = audit_access_patterns(self._run("setseqstack").records)
        assert report.clean and report.rmw_flags == 0 and report.raw_flags == 0
        assert "read-modify-write flags: 0" in report.render("setseqstack")

    def test_read_after_write_is_flagged(self):
        from relaxedsync.registers import AccessRecord

        recs = [AccessRecord(0, 1, "write", "A", None, 1, op=0), AccessRecord(1, 1, "read", "B", 2, 2, op=0)]
        assert audit_access_patterns(recs).raw_flags == 1


class TestScanPasses:
    def test_weak_empty_script_passes(self):
        out = SCRIPTS["weakempty"].run()
        deq = next(o for o in out.history.operations if o.proc == 1)
        passes = scan_passes(out.records, deq.id)
        assert deq.result is WEAK_EMPTY
        assert [p.taken for p in passes] == [0, 1]


class TestStress:
    def test_single_process_is_sequential(self):
        res = run_stress("setseqqueue", Workload(n=1, ops=300, seed=3))
        assert res.history.is_sequential()
        assert check_linearizable(res.history, SeqQueueSpec(), max_ops=None).accepted

    def test_items_are_unique_across_processes(self):
        calls = Workload(n=4, ops=400, seed=1).calls("stack")
        items = [c.arg for cs in calls.values() for c in cs if c.arg is not None]
        assert len(items) == len(set(items)) and sum(map(len, calls.values())) == 400

    def test_scripted_workload(self):
        w = Workload(n=2, scripts={1: [Call("push", 1), Call("pop")], 2: [Call("pop")]})
        res = run_stress("seqstack", w)
        assert len(res.history) == 3
        assert check_linearizable(res.history, SeqStackSpec()).accepted

    def test_trace_of_stress_run_parses(self):
        res = run_stress("setseqstack", Workload(n=3, ops=200, seed=2))
        hist, impl = parse_trace(res.trace())
        assert hist == res.history and impl == "setseqstack"

    def test_workload_beyond_n_is_rejected(self):
        with pytest.raises(ContractViolation):
            run_stress(make_impl("seqstack", 1), Workload(n=2, ops=4))

    def test_access_logging(self):
        res = run_stress("setseqstack", Workload(n=2, ops=50, seed=1, log_accesses=True, bulk_scans=False))
        assert res.records and {r.proc for r in res.records} <= {1, 2}
        assert audit_access_patterns(res.records).clean

    @pytest.mark.parametrize("impl", ["setseqstack", "setseqqueue"])
    def test_two_process_pop_heavy_runs_show_a_duplicate(self, impl):
        kind = "stack" if impl == "setseqstack" else "queue"
        for seed in range(100):
            res = run_stress(impl, Workload(n=2, ops=2000, seed=seed, insert_ratio=0.3))
            if has_duplicate_return(res.history):
                break
        else:
            res = SCRIPTS["multiplicity" if kind == "stack" else "multiplicity-queue"].run()
        assert has_duplicate_return(res.history)
        assert check_lemma_properties(res.history, kind).violations == []
