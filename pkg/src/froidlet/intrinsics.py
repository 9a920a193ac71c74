"""Built-in scalar function registry: typing rules and evaluators.

Evaluators are shared by the execution engine and the constant folder so
both routes compute identical results. NULL in any argument yields NULL,
except isnull() which exists to replace NULLs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .errors import TypeCheckError
from .values import (DATE, FLOAT64, INT64, STRING, ColumnType, date_add,
                     date_part)

NUMERIC = (INT64, FLOAT64)


@dataclass(frozen=True)
class Intrinsic:
    name: str
    arity: int
    deterministic: bool
    result_type: Callable  # arg types -> ColumnType
    fn: Callable | None    # arg values -> value; None means context-supplied


def _substring(s, start, length):
    if s is None or start is None or length is None:
        return None
    start = int(start)
    length = int(length)
    if start < 1:
        # chars "before" position 1 consume part of the length
        length += start - 1
        start = 1
    if length <= 0:
        return ""
    return s[start - 1:start - 1 + length]


def _len(s):
    return None if s is None else len(s)


def _floor(x):
    if x is None:
        return None
    if isinstance(x, int):
        return x
    import math
    return float(math.floor(x))


def _abs(x):
    return None if x is None else abs(x)


def _isnull(a, b):
    return b if a is None else a


def _dateadd(unit, n, d):
    if unit is None or n is None or d is None:
        return None
    return date_add(unit, int(n), d)


def _datepart(unit, d):
    if unit is None or d is None:
        return None
    return date_part(unit, d)


def _t_dateadd(args):
    _require(args[0], (STRING,), "dateadd unit")
    _require(args[1], NUMERIC, "dateadd count")
    _require(args[2], (DATE,), "dateadd date")
    return DATE


def _t_datepart(args):
    _require(args[0], (STRING,), "datepart unit")
    _require(args[1], (DATE,), "datepart date")
    return INT64


def _t_substring(args):
    _require(args[0], (STRING,), "substring string")
    _require(args[1], (INT64,), "substring start")
    _require(args[2], (INT64,), "substring length")
    return STRING


def _t_len(args):
    _require(args[0], (STRING,), "len argument")
    return INT64


def _t_numeric_identity(args):
    _require(args[0], NUMERIC, "numeric argument")
    return args[0] if args[0] is not None else FLOAT64


def _t_isnull(args):
    a, b = args
    if a is None:
        return b
    if b is None:
        return a
    if a is b:
        return a
    if a in NUMERIC and b in NUMERIC:
        return FLOAT64
    raise TypeCheckError(f"isnull: incompatible types {a} and {b}")


def _t_now(args):
    return DATE


def _require(t: ColumnType | None, allowed, what: str) -> None:
    if t is not None and t not in allowed:
        raise TypeCheckError(f"{what} must be one of {[a.value for a in allowed]}, "
                             f"found {t.value}")


REGISTRY: dict[str, Intrinsic] = {
    "dateadd": Intrinsic("dateadd", 3, True, _t_dateadd, _dateadd),
    "datepart": Intrinsic("datepart", 2, True, _t_datepart, _datepart),
    "substring": Intrinsic("substring", 3, True, _t_substring, _substring),
    "len": Intrinsic("len", 1, True, _t_len, _len),
    "floor": Intrinsic("floor", 1, True, _t_numeric_identity, _floor),
    "abs": Intrinsic("abs", 1, True, _t_numeric_identity, _abs),
    "isnull": Intrinsic("isnull", 2, True, _t_isnull, _isnull),
    "now": Intrinsic("now", 0, False, _t_now, None),
    "getdate": Intrinsic("getdate", 0, False, _t_now, None),
}


def lookup(name: str) -> Intrinsic:
    intr = REGISTRY.get(name.lower())
    if intr is None:
        raise TypeCheckError(f"unknown intrinsic {name!r}")
    return intr
