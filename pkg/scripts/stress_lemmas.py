"""Threaded stress runs; checks that every duplicate return comes from overlapping removals."""

import time
from dataclasses import dataclass, field

from _config import from_args
from relaxedsync.checker import check_lemma_properties
from relaxedsync.harness import SCRIPTS, Workload, run_stress


@dataclass
class StressConfig:
    """Randomized stress over several seeds."""

    impls: list[str] = field(default_factory=lambda: ["setseqstack", "setseqqueue"])
    procs: int = 8
    ops: int = 100_000
    seeds: int = 20
    insert_ratio: float = 0.5


def main(cfg: StressConfig) -> int:
    bad = 0
    for impl in cfg.impls:
        kind = "stack" if "stack" in impl else "queue"
        pairs = violations = 0
        start = time.perf_counter()
        for seed in range(cfg.seeds):
            res = run_stress(impl, Workload(n=cfg.procs, ops=cfg.ops, seed=seed, insert_ratio=cfg.insert_ratio))
            report = check_lemma_properties(res.history, kind)
            pairs += len(report.duplicate_pairs)
            violations += len(report.violations)
        took = time.perf_counter() - start
        print(f"{impl}: {cfg.seeds} runs x {cfg.ops} ops, n={cfg.procs}: "
              f"{pairs} duplicate pairs, {violations} without overlap ({took:.1f}s)")
        if pairs == 0 and kind in ("stack", "queue"):
            name = "multiplicity" if kind == "stack" else "multiplicity-queue"
            scripted = check_lemma_properties(SCRIPTS[name].run().history, kind)
            print(f"  none observed live; scripted schedule '{name}' gives {len(scripted.duplicate_pairs)} pair(s)")
        bad += violations
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main(from_args(StressConfig)))
