"""Cell sentinels and operation responses.

Items are plain positive ints. Everything else that can sit in a cell or come
back from an operation is an enum member, so no integer is ever reserved.
"""

from __future__ import annotations

from enum import Enum


class Mark(Enum):
    BOTTOM = "bottom"  # never written
    TAKEN = "taken"

    def __repr__(self) -> str:
        return self.value


class Response(Enum):
    OK = "true"
    EMPTY = "empty"
    WEAK_EMPTY = "weakempty"

    def __repr__(self) -> str:
        return self.value


BOTTOM = Mark.BOTTOM
TAKEN = Mark.TAKEN
OK = Response.OK
EMPTY = Response.EMPTY
WEAK_EMPTY = Response.WEAK_EMPTY


def is_item(v: object) -> bool:
    # bool is an int subclass; True must never pass as item 1
    return type(v) is int and v >= 1


def check_item(v: object) -> int:
    if not is_item(v):
        raise ValueError(f"items must be positive ints, got {v!r}")
    return v  # type: ignore[return-value]


def render(v: object) -> str:
    """Text form used by trace and access-log files."""
    if v is None:
        return "-"
    if isinstance(v, (Mark, Response)):
        return v.value
    if v is True:
        return "true"
    if v is False:
        return "false"
    return str(v)


_BY_TEXT = {m.value: m for m in (*Mark, *Response)}


def parse_value(text: str) -> object:
    if text == "-":
        return None
    if text in _BY_TEXT:
        return _BY_TEXT[text]
    if text == "false":
        return False
    return int(text)
