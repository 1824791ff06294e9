"""Turn a dataclass of experiment settings into command-line flags."""

import argparse
import dataclasses
import typing


def from_args(cls, argv=None):
    hints = typing.get_type_hints(cls)
    parser = argparse.ArgumentParser(description=cls.__doc__)
    for f in dataclasses.fields(cls):
        kind = hints[f.name]
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        flag = "--" + f.name.replace("_", "-")
        if kind is bool:
            parser.add_argument(flag, action=argparse.BooleanOptionalAction, default=default)
        elif typing.get_origin(kind) in (list, tuple):
            (inner, *_) = typing.get_args(kind)
            parser.add_argument(flag, nargs="+", type=inner, default=default)
        else:
            parser.add_argument(flag, type=kind, default=default)
    return cls(**vars(parser.parse_args(argv)))
