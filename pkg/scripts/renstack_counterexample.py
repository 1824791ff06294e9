"""Search for a bad schedule when the renaming stack announces after claiming a slot."""

from dataclasses import dataclass

from _config import from_args
from relaxedsync.checker import check_set_linearizable
from relaxedsync.harness import enumerate_schedules, parse_program
from relaxedsync.specs import SetStackSpec
from relaxedsync.stacks import RenSetSeqStack


@dataclass
class RenConfig:
    """Compare the two announcement orders of the renaming stack."""

    program: str = "push(1) | push(2) | pop"


def search(announce_first: bool, program: str):
    prog = parse_program(program)
    checked = 0
    for out in enumerate_schedules(lambda: RenSetSeqStack(prog.n, announce_first=announce_first), prog,
                                   crashes=True, distinct=True):
        checked += 1
        if not check_set_linearizable(out.history, SetStackSpec()).accepted:
            return checked, out
    return checked, None


def main(cfg: RenConfig) -> None:
    for first in (True, False):
        checked, bad = search(first, cfg.program)
        label = "announce before renaming" if first else "announce after renaming"
        if bad is None:
            print(f"{label}: {checked} histories, all set-linearizable")
        else:
            print(f"{label}: counterexample after {checked} histories, schedule {','.join(map(str, bad.schedule))}")
            print(bad.trace(), end="")


if __name__ == "__main__":
    main(from_args(RenConfig))
