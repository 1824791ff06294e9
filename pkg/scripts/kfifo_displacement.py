"""Order displacement of the k-lane FIFO under sequential and threaded use."""

from dataclasses import dataclass, field

import numpy as np

from _config import from_args
from relaxedsync.adapters import KFifoQueue, max_displacement
from relaxedsync.harness import Workload, run_stress
from relaxedsync.registers import Memory
from relaxedsync.values import is_item


@dataclass
class KFifoConfig:
    """Displacement of k-lane FIFO dequeue order."""

    lanes: list[int] = field(default_factory=lambda: [1, 2, 4, 8])
    balancers: list[str] = field(default_factory=lambda: ["rr", "random"])
    items: int = 400
    procs: int = 4
    live_ops: int = 4000
    seed: int = 0


def sequential(lanes: int, balancer: str, items: int, seed: int) -> int:
    q, mem = KFifoQueue(1, lanes=lanes, balancer=balancer, seed=seed), Memory(log=False)
    for x in range(1, items + 1):
        mem.run(q.enq(1, x), 1)
    out = [mem.run(q.deq(1), 1) for _ in range(items * 2)]
    return max_displacement(range(1, items + 1), [x for x in out if is_item(x)])


def live(lanes: int, balancer: str, cfg: KFifoConfig) -> float:
    q = KFifoQueue(cfg.procs, lanes=lanes, balancer=balancer, seed=cfg.seed)
    res = run_stress(q, Workload(n=cfg.procs, ops=cfg.live_ops, seed=cfg.seed))
    enq = sorted((o for o in res.history.operations if o.name == "enq"), key=lambda o: o.inv)
    deq = sorted((o for o in res.history.operations if o.name == "deq" and is_item(o.result)), key=lambda o: o.res)
    rank = {o.arg: i for i, o in enumerate(enq)}
    got = np.array([rank[o.result] for o in deq])
    # how far each dequeue falls behind the smallest rank still outstanding
    return float(np.mean(got - np.minimum.accumulate(got[::-1])[::-1])) if len(got) else 0.0


def main(cfg: KFifoConfig) -> None:
    print(f"{'lanes':>5} {'balancer':<8} {'seq max disp':>13} {'live mean lag':>14}")
    for lanes in cfg.lanes:
        for bal in cfg.balancers:
            print(f"{lanes:>5} {bal:<8} {sequential(lanes, bal, cfg.items, cfg.seed):>13} "
                  f"{live(lanes, bal, cfg):>14.2f}")


if __name__ == "__main__":
    main(from_args(KFifoConfig))
