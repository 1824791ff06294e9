"""Relaxed concurrent stacks and queues over read/write registers, with checkers."""

from .checker import (
    Event,
    History,
    LemmaReport,
    Operation,
    SearchBudgetExceeded,
    Verdict,
    check_interval_linearizable,
    check_lemma_properties,
    check_linearizable,
    check_set_linearizable,
    validate_witness,
)
from .harness import (
    IMPLS,
    SCRIPTS,
    Call,
    Program,
    Workload,
    audit_access_patterns,
    enumerate_schedules,
    format_trace,
    make_impl,
    parse_program,
    parse_trace,
    replay,
    run_stress,
)
from .queues import IntSeqQueue, NaiveQueue, RwIntSeqQueue, SeqQueue, SetSeqQueue
from .registers import GridRenaming, Memory, RegisterArray, RwCounter
from .specs import (
    CounterSpec,
    IntervalQueueSpec,
    IntervalTransition,
    SeqQueueSpec,
    SeqStackSpec,
    SetQueueSpec,
    SetStackSpec,
)
from .stacks import RenSetSeqStack, SeqStack, SetSeqStack
from .values import BOTTOM, EMPTY, OK, TAKEN, WEAK_EMPTY

__all__ = [name for name in dir() if not name.startswith("_")]
