"""Scalar values, column types, casting, and date arithmetic.

Values are plain Python objects: None (NULL), bool, int, float, str.
DATE cells are ints counting days since 1970-01-01, which keeps
dateadd/datepart exact and comparisons cheap; the static column type
distinguishes them from INT64.
"""

from __future__ import annotations

import datetime
import enum

from .errors import CastFailure, DivideByZero

Value = object  # None | bool | int | float | str (dates as day counts)

_EPOCH = datetime.date(1970, 1, 1).toordinal()


class ColumnType(enum.Enum):
    BOOL = "BOOL"
    INT64 = "INT64"
    FLOAT64 = "FLOAT64"
    STRING = "STRING"
    DATE = "DATE"

    def __repr__(self):
        return self.value


BOOL = ColumnType.BOOL
INT64 = ColumnType.INT64
FLOAT64 = ColumnType.FLOAT64
STRING = ColumnType.STRING
DATE = ColumnType.DATE

NUMERIC = (INT64, FLOAT64)


def date_from_iso(s: str) -> int:
    try:
        return datetime.date.fromisoformat(s).toordinal() - _EPOCH
    except ValueError as exc:
        raise CastFailure(f"{s!r} is not a YYYY-MM-DD date") from exc


def date_to_iso(d: int) -> str:
    return datetime.date.fromordinal(d + _EPOCH).isoformat()


def _as_pydate(d: int) -> datetime.date:
    return datetime.date.fromordinal(d + _EPOCH)


_UNIT_ALIASES = {
    "yy": "year", "yyyy": "year", "year": "year",
    "mm": "month", "m": "month", "month": "month",
    "dd": "day", "d": "day", "day": "day",
}


def date_add(unit: str, n: int, d: int) -> int:
    """dateadd semantics: month/year arithmetic clamps to the target month's last day."""
    u = _UNIT_ALIASES.get(unit.lower())
    if u is None:
        raise CastFailure(f"unknown date unit {unit!r}")
    if u == "day":
        return d + n
    py = _as_pydate(d)
    months = py.year * 12 + (py.month - 1) + (n * 12 if u == "year" else n)
    year, month = divmod(months, 12)
    month += 1
    day = min(py.day, _days_in_month(year, month))
    return datetime.date(year, month, day).toordinal() - _EPOCH


def _days_in_month(year: int, month: int) -> int:
    if month == 12:
        nxt = datetime.date(year + 1, 1, 1)
    else:
        nxt = datetime.date(year, month + 1, 1)
    return (nxt - datetime.date(year, month, 1)).days


def date_part(unit: str, d: int) -> int:
    u = _UNIT_ALIASES.get(unit.lower())
    if u is None:
        raise CastFailure(f"unknown date unit {unit!r}")
    py = _as_pydate(d)
    return {"year": py.year, "month": py.month, "day": py.day}[u]


def float_to_str(f: float) -> str:
    """Shortest decimal string that round-trips back to the same float."""
    return repr(f)


def cast_value(v: Value, to: ColumnType) -> Value:
    """Cast a runtime value; NULL casts to NULL, failures raise CastFailure."""
    if v is None:
        return None
    if to is INT64:
        if isinstance(v, bool):
            return int(v)
        if isinstance(v, int):
            return v
        if isinstance(v, float):
            return int(v)  # truncate toward zero
        if isinstance(v, str):
            try:
                return int(v.strip())
            except ValueError:
                raise CastFailure(f"{v!r} -> INT64")
    elif to is FLOAT64:
        if isinstance(v, bool):
            return float(v)
        if isinstance(v, (int, float)):
            return float(v)
        if isinstance(v, str):
            try:
                return float(v.strip())
            except ValueError:
                raise CastFailure(f"{v!r} -> FLOAT64")
    elif to is STRING:
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return float_to_str(v)
        if isinstance(v, (int, str)):
            return str(v)
    elif to is BOOL:
        if isinstance(v, bool):
            return v
        if isinstance(v, (int, float)):
            return v != 0
        if isinstance(v, str):
            low = v.strip().lower()
            if low in ("true", "1"):
                return True
            if low in ("false", "0"):
                return False
            raise CastFailure(f"{v!r} -> BOOL")
    elif to is DATE:
        if isinstance(v, str):
            return date_from_iso(v.strip())
        if isinstance(v, bool):
            raise CastFailure("BOOL -> DATE")
        if isinstance(v, int):
            return v
    raise CastFailure(f"{type(v).__name__} value -> {to.value}")


def cast_value_typed(v: Value, frm: ColumnType, to: ColumnType) -> Value:
    """Cast with the source type known statically (DATE ints need it)."""
    if v is None:
        return None
    if frm is to:
        return v
    if frm is DATE:
        if to is STRING:
            return date_to_iso(v)
        raise CastFailure(f"DATE -> {to.value}")
    if to is DATE and frm in NUMERIC:
        raise CastFailure(f"{frm.value} -> DATE")
    return cast_value(v, to)


def castable(frm: ColumnType, to: ColumnType) -> bool:
    if frm is to:
        return True
    blocked = {(BOOL, DATE), (DATE, BOOL), (DATE, INT64), (DATE, FLOAT64),
               (INT64, DATE), (FLOAT64, DATE)}
    return (frm, to) not in blocked


# --- three-valued scalar operations, shared by the evaluator and the
# --- constant folder so both routes agree bit-for-bit.

def sql_and(a, b):
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True


def sql_or(a, b):
    if a is True or b is True:
        return True
    if a is None or b is None:
        return None
    return False


def sql_not(a):
    return None if a is None else not a


_CMP = {
    "=": lambda a, b: a == b,
    "<>": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def sql_compare(op: str, a, b):
    if a is None or b is None:
        return None
    return _CMP[op](a, b)


def sql_add(a, b):
    if a is None or b is None:
        return None
    return a + b  # also string concatenation


def sql_sub(a, b):
    if a is None or b is None:
        return None
    return a - b


def sql_mul(a, b):
    if a is None or b is None:
        return None
    return a * b


def sql_div(a, b):
    if a is None or b is None:
        return None
    if b == 0:
        raise DivideByZero(f"{a!r} / {b!r}")
    if isinstance(a, int) and isinstance(b, int):
        q = abs(a) // abs(b)  # truncate toward zero
        return -q if (a < 0) != (b < 0) else q
    return a / b


def sql_like(s, pattern):
    if s is None or pattern is None:
        return None
    import re
    out = []
    for ch in pattern:
        if ch == "%":
            out.append(".*")
        elif ch == "_":
            out.append(".")
        else:
            out.append(re.escape(ch))
    return re.fullmatch("".join(out), s, re.DOTALL) is not None


def sql_in(v, items):
    if v is None:
        return None
    saw_null = False
    for item in items:
        if item is None:
            saw_null = True
        elif item == v:
            return True
    return None if saw_null else False
