"""Replay the tail-chasing schedule and show how each condition judges it."""

from dataclasses import dataclass

from _config import from_args
from relaxedsync.checker import check_interval_linearizable, check_linearizable
from relaxedsync.harness import SCRIPTS
from relaxedsync.specs import IntervalQueueSpec, SeqQueueSpec
from relaxedsync.values import EMPTY, WEAK_EMPTY


@dataclass
class DemoConfig:
    """Tail-chasing demonstration on the naive queue."""

    script: str = "fig8"
    show_weakempty: bool = True


def main(cfg: DemoConfig) -> None:
    script = SCRIPTS[cfg.script]
    out = script.run()
    print(f"# {script.about}")
    print(out.trace(), end="")
    print(check_linearizable(out.history, SeqQueueSpec()).render(), end="")
    relabelled = out.history.map_results(lambda r: WEAK_EMPTY if r is EMPTY else r)
    print("\n# the same history with the empty answer relabelled weak-empty")
    print(check_interval_linearizable(relabelled, IntervalQueueSpec(script.n)).render(), end="")
    if cfg.show_weakempty:
        we = SCRIPTS["weakempty"]
        print(f"\n# {we.about}")
        print(we.run().trace(), end="")
        print(check_interval_linearizable(we.run().history, IntervalQueueSpec(we.n)).render(), end="")


if __name__ == "__main__":
    main(from_args(DemoConfig))
