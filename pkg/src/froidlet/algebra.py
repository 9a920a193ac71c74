"""Relational operator trees and bound scalar expressions.

Every column produced anywhere in a plan carries a globally unique integer
id, so expressions reference columns by id rather than by (scope, position).
A reference is "correlated" relative to a subtree simply when the subtree
does not produce its id; rewrites can therefore move expressions between
scopes without renumbering anything.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

from .catalog import Catalog, Schema
from .errors import TypeCheckError, UnknownColumn
from .values import (BOOL, DATE, FLOAT64, INT64, STRING, ColumnType, Value,
                     date_to_iso, float_to_str)


class OutCol(NamedTuple):
    cid: int
    name: str
    ctype: ColumnType


class IdGen:
    def __init__(self, start: int = 1):
        self._counter = itertools.count(start)

    def new(self) -> int:
        return next(self._counter)


# --------------------------------------------------------------------------
# bound scalar expressions


class Scalar:
    ctype: ColumnType | None


@dataclass(eq=False)
class Lit(Scalar):
    value: Value
    ctype: ColumnType | None  # None only for untyped NULL

    def __repr__(self):
        return f"Lit({self.value!r}:{self.ctype})"


@dataclass(eq=False)
class Col(Scalar):
    cid: int
    ctype: ColumnType
    name: str = ""


@dataclass(eq=False)
class Param(Scalar):
    """Formal parameter placeholder; only present in standalone UDF plans."""
    name: str
    ctype: ColumnType


@dataclass(eq=False)
class Bin(Scalar):
    op: str
    lhs: Scalar
    rhs: Scalar
    ctype: ColumnType


@dataclass(eq=False)
class NotE(Scalar):
    operand: Scalar
    ctype: ColumnType = BOOL


@dataclass(eq=False)
class IsNullE(Scalar):
    operand: Scalar
    ctype: ColumnType = BOOL


@dataclass(eq=False)
class CaseE(Scalar):
    branches: list[tuple[Scalar, Scalar]]
    otherwise: Scalar | None
    ctype: ColumnType | None


@dataclass(eq=False)
class CastE(Scalar):
    operand: Scalar
    ctype: ColumnType


@dataclass(eq=False)
class Intr(Scalar):
    name: str
    args: list[Scalar]
    ctype: ColumnType


@dataclass(eq=False)
class Udf(Scalar):
    """Residual (not-inlined) call, dispatched to the interpreter."""
    name: str
    args: list[Scalar]
    ctype: ColumnType


@dataclass(eq=False)
class Subq(Scalar):
    plan: "Plan"

    @property
    def ctype(self) -> ColumnType:
        return self.plan.out_cols()[0].ctype


@dataclass(eq=False)
class ExistsE(Scalar):
    plan: "Plan"
    ctype: ColumnType = BOOL


@dataclass(eq=False)
class InE(Scalar):
    operand: Scalar
    items: list[Lit]
    ctype: ColumnType = BOOL


@dataclass(eq=False)
class LikeE(Scalar):
    operand: Scalar
    pattern: str
    ctype: ColumnType = BOOL


def scalar_children(e: Scalar) -> list[Scalar]:
    if isinstance(e, Bin):
        return [e.lhs, e.rhs]
    if isinstance(e, (NotE, IsNullE, CastE, LikeE)):
        return [e.operand]
    if isinstance(e, CaseE):
        out = [x for pair in e.branches for x in pair]
        if e.otherwise is not None:
            out.append(e.otherwise)
        return out
    if isinstance(e, (Intr, Udf)):
        return list(e.args)
    if isinstance(e, InE):
        return [e.operand] + list(e.items)
    return []


def walk_scalar(e: Scalar):
    """Pre-order walk of one expression; does not enter subquery plans."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(scalar_children(node))


def scalar_subplans(e: Scalar) -> list["Plan"]:
    return [n.plan for n in walk_scalar(e) if isinstance(n, (Subq, ExistsE))]


def map_scalar(e: Scalar, fn) -> Scalar:
    """Rebuild bottom-up; fn maps each node (children already mapped)."""
    if isinstance(e, Bin):
        e = Bin(e.op, map_scalar(e.lhs, fn), map_scalar(e.rhs, fn), e.ctype)
    elif isinstance(e, NotE):
        e = NotE(map_scalar(e.operand, fn))
    elif isinstance(e, IsNullE):
        e = IsNullE(map_scalar(e.operand, fn))
    elif isinstance(e, CaseE):
        e = CaseE([(map_scalar(w, fn), map_scalar(t, fn)) for w, t in e.branches],
                  map_scalar(e.otherwise, fn) if e.otherwise is not None else None,
                  e.ctype)
    elif isinstance(e, CastE):
        e = CastE(map_scalar(e.operand, fn), e.ctype)
    elif isinstance(e, Intr):
        e = Intr(e.name, [map_scalar(a, fn) for a in e.args], e.ctype)
    elif isinstance(e, Udf):
        e = Udf(e.name, [map_scalar(a, fn) for a in e.args], e.ctype)
    elif isinstance(e, InE):
        e = InE(map_scalar(e.operand, fn), e.items)
    elif isinstance(e, LikeE):
        e = LikeE(map_scalar(e.operand, fn), e.pattern)
    return fn(e)


# --------------------------------------------------------------------------
# plan nodes


class Plan:
    label: str | None = None

    def children(self) -> list["Plan"]:
        return []

    def out_cols(self) -> list[OutCol]:
        raise NotImplementedError

    def exprs(self) -> list[Scalar]:
        """Scalar expressions held directly by this node."""
        return []


@dataclass(eq=False)
class ConstantScan(Plan):
    label: str | None = None

    def out_cols(self):
        return []


@dataclass(eq=False)
class Scan(Plan):
    table: str
    cols: list[OutCol]
    alias: str | None = None
    label: str | None = None

    def out_cols(self):
        return self.cols


@dataclass(eq=False)
class ComputeScalar(Plan):
    child: Plan
    computed: list[tuple[int, str, Scalar]]  # (cid, name, expr)
    label: str | None = None

    def children(self):
        return [self.child]

    def out_cols(self):
        return self.child.out_cols() + [OutCol(cid, name, expr.ctype)
                                        for cid, name, expr in self.computed]

    def exprs(self):
        return [e for _, _, e in self.computed]


@dataclass(eq=False)
class Filter(Plan):
    child: Plan
    pred: Scalar
    label: str | None = None

    def children(self):
        return [self.child]

    def out_cols(self):
        return self.child.out_cols()

    def exprs(self):
        return [self.pred]


@dataclass(eq=False)
class Project(Plan):
    """Pure column selection/renaming; expressions are lowered into
    ComputeScalar nodes below."""
    child: Plan
    items: list[tuple[str, int]]  # (output name, source cid)
    label: str | None = None

    def children(self):
        return [self.child]

    def out_cols(self):
        by_id = {c.cid: c for c in self.child.out_cols()}
        out = []
        for name, cid in self.items:
            src = by_id.get(cid)
            if src is None:
                raise UnknownColumn(f"project references unknown column #{cid}")
            out.append(OutCol(cid, name, src.ctype))
        return out


CROSS = "CROSS"
LEFT_OUTER = "LEFT_OUTER"
LEFT_SEMI = "LEFT_SEMI"
LEFT_ANTI = "LEFT_ANTI"
INNER = "INNER"


@dataclass(eq=False)
class Apply(Plan):
    """Evaluate `right` once per left row (unless pass_through says to skip),
    joining per join_type; probe appends a BOOL column flagging whether the
    right side produced at least one row."""
    left: Plan
    right: Plan
    join_type: str  # CROSS | LEFT_OUTER | LEFT_SEMI | LEFT_ANTI
    pass_through: Scalar | None = None
    probe: tuple[int, str] | None = None  # (cid, name)
    label: str | None = None

    def children(self):
        return [self.left, self.right]

    def out_cols(self):
        left = self.left.out_cols()
        if self.join_type in (CROSS, LEFT_OUTER):
            return left + self.right.out_cols()
        out = list(left)
        if self.probe is not None:
            out.append(OutCol(self.probe[0], self.probe[1], BOOL))
        return out

    def exprs(self):
        return [self.pass_through] if self.pass_through is not None else []


@dataclass(eq=False)
class Join(Plan):
    left: Plan
    right: Plan
    join_type: str  # INNER | LEFT_OUTER
    pred: Scalar
    label: str | None = None

    def children(self):
        return [self.left, self.right]

    def out_cols(self):
        return self.left.out_cols() + self.right.out_cols()

    def exprs(self):
        return [self.pred]


AGG_FNS = ("SUM", "COUNT", "COUNT_STAR", "AVG", "MIN", "MAX")


def agg_result_type(fn: str, arg_type: ColumnType | None) -> ColumnType:
    if fn in ("COUNT", "COUNT_STAR"):
        return INT64
    if fn == "AVG":
        return FLOAT64
    if arg_type is None:
        raise TypeCheckError(f"{fn} requires an argument")
    return arg_type


@dataclass(eq=False)
class Aggregate(Plan):
    child: Plan
    keys: list[int]  # grouping column cids
    aggs: list[tuple[int, str, str, int | None]]  # (cid, name, fn, arg cid)
    label: str | None = None

    def children(self):
        return [self.child]

    def out_cols(self):
        by_id = {c.cid: c for c in self.child.out_cols()}
        out = []
        for cid in self.keys:
            src = by_id.get(cid)
            if src is None:
                raise UnknownColumn(f"group key references unknown column #{cid}")
            out.append(src)
        for cid, name, fn, arg in self.aggs:
            arg_type = by_id[arg].ctype if arg is not None else None
            out.append(OutCol(cid, name, agg_result_type(fn, arg_type)))
        return out


@dataclass(eq=False)
class Sort(Plan):
    child: Plan
    keys: list[tuple[int, bool]]  # (cid, ascending)
    label: str | None = None

    def children(self):
        return [self.child]

    def out_cols(self):
        return self.child.out_cols()


@dataclass(eq=False)
class Limit(Plan):
    child: Plan
    n: int
    label: str | None = None

    def children(self):
        return [self.child]

    def out_cols(self):
        return self.child.out_cols()


@dataclass(eq=False)
class AttachOrdinal(Plan):
    """Appends a transient 64-bit row ordinal (decorrelation row-id)."""
    child: Plan
    cid: int
    name: str = "row_id"
    label: str | None = None

    def children(self):
        return [self.child]

    def out_cols(self):
        return self.child.out_cols() + [OutCol(self.cid, self.name, INT64)]


# --------------------------------------------------------------------------
# traversal helpers


def walk_plan(plan: Plan, include_subplans: bool = True):
    """Pre-order walk; optionally descends into subquery plans in exprs."""
    stack = [plan]
    while stack:
        node = stack.pop()
        yield node
        if include_subplans:
            for e in node.exprs():
                stack.extend(scalar_subplans(e))
        stack.extend(node.children())


def produced_col_ids(plan: Plan) -> set[int]:
    """Ids produced anywhere inside this subtree (not its subquery exprs)."""
    out: set[int] = set()
    for node in walk_plan(plan, include_subplans=False):
        if isinstance(node, Scan):
            out.update(c.cid for c in node.cols)
        elif isinstance(node, ComputeScalar):
            out.update(cid for cid, _, _ in node.computed)
        elif isinstance(node, Aggregate):
            out.update(cid for cid, _, _, _ in node.aggs)
        elif isinstance(node, Apply) and node.probe is not None:
            out.add(node.probe[0])
        elif isinstance(node, AttachOrdinal):
            out.add(node.cid)
    return out


def referenced_col_ids(e: Scalar) -> set[int]:
    """All column ids referenced by an expression, including inside its
    subquery plans (ids the subplans do not themselves produce)."""
    out: set[int] = set()
    for node in walk_scalar(e):
        if isinstance(node, Col):
            out.add(node.cid)
        elif isinstance(node, (Subq, ExistsE)):
            out |= free_col_ids(node.plan)
    return out


def free_col_ids(plan: Plan) -> set[int]:
    """Column ids referenced but not produced by this subtree."""
    refs: set[int] = set()
    for node in walk_plan(plan, include_subplans=False):
        for e in node.exprs():
            refs |= referenced_col_ids(e)
    return refs - produced_col_ids(plan)


def statically_single_row(plan: Plan) -> bool:
    """True when the plan provably emits exactly one row on every input."""
    if isinstance(plan, ConstantScan):
        return True
    if isinstance(plan, (ComputeScalar, Project, Filter, Sort, Limit, AttachOrdinal)):
        if isinstance(plan, Filter):
            return False  # may drop the row
        if isinstance(plan, Limit) and plan.n < 1:
            return False
        return statically_single_row(plan.child)
    if isinstance(plan, Aggregate):
        return not plan.keys  # scalar aggregate: one row even on empty input
    if isinstance(plan, Apply):
        if plan.join_type in (LEFT_OUTER, LEFT_SEMI):
            right_ok = plan.join_type == LEFT_SEMI or statically_single_row(plan.right)
            return right_ok and statically_single_row(plan.left)
        return False
    return False


@dataclass
class PlanStats:
    node_count: int = 0
    apply_count: int = 0
    subquery_count: int = 0
    scan_counts: dict = field(default_factory=dict)


def plan_stats(plan: Plan) -> PlanStats:
    stats = PlanStats()
    for node in walk_plan(plan):
        stats.node_count += 1
        if isinstance(node, Apply):
            stats.apply_count += 1
        elif isinstance(node, Scan):
            key = node.table.lower()
            stats.scan_counts[key] = stats.scan_counts.get(key, 0) + 1
        for e in node.exprs():
            for sub in walk_scalar(e):
                if isinstance(sub, (Subq, ExistsE)):
                    stats.subquery_count += 1
    return stats


# --------------------------------------------------------------------------
# type checking


def type_check(plan: Plan, catalog: Catalog) -> Schema:
    """Validate the tree and return its output schema."""
    _check_node(plan, catalog, [])
    cols = plan.out_cols()
    return Schema(tuple((c.name, c.ctype) for c in cols))


def _check_node(plan: Plan, catalog: Catalog, outer_scopes: list[set[int]]) -> None:
    if isinstance(plan, Scan):
        rel = catalog.lookup_table(plan.table)
        names = [c.name.lower() for c in plan.cols]
        if names != [n.lower() for n in rel.schema.names]:
            raise TypeCheckError(f"scan of {plan.table!r} does not match catalog schema")
        for col, declared in zip(plan.cols, rel.schema.types):
            if col.ctype is not declared:
                raise TypeCheckError(
                    f"scan column {col.name} is {col.ctype} but table has {declared}")
        return

    visible = _visible_below(plan)

    def check_expr(e: Scalar, scopes: list[set[int]]):
        for node in walk_scalar(e):
            if isinstance(node, Col):
                if not any(node.cid in s for s in scopes):
                    raise UnknownColumn(f"column #{node.cid} ({node.name}) is not in scope")
            elif isinstance(node, (Subq, ExistsE)):
                _check_node(node.plan, catalog, scopes)
                if isinstance(node, Subq) and len(node.plan.out_cols()) != 1:
                    raise TypeCheckError("scalar subquery must produce exactly one column")
            elif isinstance(node, Udf):
                catalog.lookup_udf(node.name)
            _check_types(node)

    if isinstance(plan, ComputeScalar):
        _check_node(plan.child, catalog, outer_scopes)
        scope = set(c.cid for c in plan.child.out_cols())
        for cid, _, expr in plan.computed:
            check_expr(expr, [scope] + outer_scopes)
            scope.add(cid)
    elif isinstance(plan, Filter):
        _check_node(plan.child, catalog, outer_scopes)
        check_expr(plan.pred, [visible] + outer_scopes)
        if plan.pred.ctype is not BOOL and plan.pred.ctype is not None:
            raise TypeCheckError(f"filter predicate must be BOOL, found {plan.pred.ctype}")
    elif isinstance(plan, Project):
        _check_node(plan.child, catalog, outer_scopes)
        plan.out_cols()
    elif isinstance(plan, Apply):
        _check_node(plan.left, catalog, outer_scopes)
        left_scope = set(c.cid for c in plan.left.out_cols())
        _check_node(plan.right, catalog, [left_scope] + outer_scopes)
        if plan.pass_through is not None:
            check_expr(plan.pass_through, [left_scope] + outer_scopes)
            if plan.pass_through.ctype is not BOOL:
                raise TypeCheckError("pass-through predicate must be BOOL")
        if plan.probe is not None and plan.join_type != LEFT_SEMI:
            raise TypeCheckError("probe column requires LEFT_SEMI apply")
    elif isinstance(plan, Join):
        _check_node(plan.left, catalog, outer_scopes)
        _check_node(plan.right, catalog, outer_scopes)
        scope = set(c.cid for c in plan.left.out_cols())
        scope |= set(c.cid for c in plan.right.out_cols())
        check_expr(plan.pred, [scope] + outer_scopes)
        if plan.pred.ctype is not BOOL:
            raise TypeCheckError("join predicate must be BOOL")
    elif isinstance(plan, Aggregate):
        _check_node(plan.child, catalog, outer_scopes)
        plan.out_cols()
    elif isinstance(plan, (Sort, Limit, AttachOrdinal)):
        _check_node(plan.child, catalog, outer_scopes)
        if isinstance(plan, Sort):
            child_ids = set(c.cid for c in plan.child.out_cols())
            for cid, _ in plan.keys:
                if cid not in child_ids:
                    raise UnknownColumn(f"sort key #{cid} is not in scope")
    elif isinstance(plan, ConstantScan):
        pass
    else:
        raise TypeCheckError(f"unknown plan node {plan!r}")


def _visible_below(plan: Plan) -> set[int]:
    out: set[int] = set()
    for child in plan.children():
        out.update(c.cid for c in child.out_cols())
    return out


_NUMERIC = (INT64, FLOAT64)


def _check_types(e: Scalar) -> None:
    if isinstance(e, Bin):
        lt, rt = e.lhs.ctype, e.rhs.ctype
        if lt is None or rt is None:
            return
        if e.op in ("AND", "OR"):
            if lt is not BOOL or rt is not BOOL:
                raise TypeCheckError(f"{e.op} requires BOOL operands, found {lt}/{rt}")
        elif e.op in ("=", "<>", "<", "<=", ">", ">="):
            ok = (lt in _NUMERIC and rt in _NUMERIC) or lt is rt
            if not ok:
                raise TypeCheckError(f"cannot compare {lt} with {rt}")
        elif e.op == "+" and lt is STRING and rt is STRING:
            pass
        elif e.op in ("+", "-", "*", "/"):
            if lt not in _NUMERIC or rt not in _NUMERIC:
                raise TypeCheckError(f"arithmetic {e.op!r} requires numeric operands, "
                                     f"found {lt}/{rt}")
    elif isinstance(e, (NotE,)):
        t = e.operand.ctype
        if t is not None and t is not BOOL:
            raise TypeCheckError(f"NOT requires BOOL, found {t}")
    elif isinstance(e, CaseE):
        for when, _ in e.branches:
            t = when.ctype
            if t is not None and t is not BOOL:
                raise TypeCheckError(f"CASE condition must be BOOL, found {t}")


def unify_types(types: list[ColumnType | None], what: str) -> ColumnType | None:
    """Common type for CASE branches: exact match, or numeric promotion."""
    known = [t for t in types if t is not None]
    if not known:
        return None
    result = known[0]
    for t in known[1:]:
        if t is result:
            continue
        if t in _NUMERIC and result in _NUMERIC:
            result = FLOAT64
        else:
            raise TypeCheckError(f"{what}: incompatible types {result} and {t}")
    return result


# --------------------------------------------------------------------------
# printing


def print_scalar(e: Scalar) -> str:
    """Compact, machine-parseable prefix form used by tree-mode plans."""
    if isinstance(e, Lit):
        v = e.value
        if v is None:
            return "null" if e.ctype is None else f"null:{e.ctype.value}"
        if e.ctype is DATE:
            return f"date'{date_to_iso(v)}'"
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return float_to_str(v)
        if isinstance(v, str):
            return "'" + v.replace("'", "''") + "'"
        return str(v)
    if isinstance(e, Col):
        return f"${e.cid}"
    if isinstance(e, Param):
        return f"(param {e.name})"
    if isinstance(e, Bin):
        op = e.op.lower() if e.op in ("AND", "OR") else e.op
        return f"({op} {print_scalar(e.lhs)} {print_scalar(e.rhs)})"
    if isinstance(e, NotE):
        return f"(not {print_scalar(e.operand)})"
    if isinstance(e, IsNullE):
        return f"(isnull {print_scalar(e.operand)})"
    if isinstance(e, CaseE):
        parts = [f"(when {print_scalar(w)} {print_scalar(t)})" for w, t in e.branches]
        if e.otherwise is not None:
            parts.append(f"(else {print_scalar(e.otherwise)})")
        return "(case " + " ".join(parts) + ")"
    if isinstance(e, CastE):
        return f"(cast {print_scalar(e.operand)} {e.ctype.value})"
    if isinstance(e, Intr):
        inner = " ".join(print_scalar(a) for a in e.args)
        return f"(intr {e.name}{' ' + inner if inner else ''})"
    if isinstance(e, Udf):
        inner = " ".join(print_scalar(a) for a in e.args)
        return f"(udf {e.name}{' ' + inner if inner else ''})"
    if isinstance(e, Subq):
        return f"(subq {_subplan_index(e)})"
    if isinstance(e, ExistsE):
        return f"(exists {_subplan_index(e)})"
    if isinstance(e, InE):
        items = " ".join(print_scalar(i) for i in e.items)
        return f"(in {print_scalar(e.operand)} {items})"
    if isinstance(e, LikeE):
        return f"(like {print_scalar(e.operand)} '{e.pattern}')"
    raise TypeError(f"cannot print {e!r}")


_subplan_slots: dict[int, int] = {}


def _subplan_index(e) -> int:
    return _subplan_slots.get(id(e), -1)


def print_plan(plan: Plan, mode: str = "tree") -> str:
    if mode == "tree":
        lines: list[str] = []
        _print_tree(plan, 0, lines)
        return "\n".join(lines)
    if mode == "sql":
        return print_plan_sql(plan)
    raise ValueError(f"unknown print mode {mode!r}")


def _node_header(plan: Plan) -> str:
    label = f" label={plan.label}" if plan.label else ""
    if isinstance(plan, ConstantScan):
        return "ConstantScan" + label
    if isinstance(plan, Scan):
        cols = " ".join(f"{c.name}#{c.cid}:{c.ctype.value}" for c in plan.cols)
        alias = f" alias={plan.alias}" if plan.alias else ""
        return f"Scan table={plan.table}{alias}{label} [{cols}]"
    if isinstance(plan, ComputeScalar):
        cols = ", ".join(f"{name}#{cid}={print_scalar(expr)}"
                         for cid, name, expr in plan.computed)
        return f"ComputeScalar{label} [{cols}]"
    if isinstance(plan, Filter):
        return f"Filter{label} pred={print_scalar(plan.pred)}"
    if isinstance(plan, Project):
        cols = ", ".join(f"{name}=${cid}" for name, cid in plan.items)
        return f"Project{label} [{cols}]"
    if isinstance(plan, Apply):
        extra = ""
        if plan.pass_through is not None:
            extra += f" pass_through={print_scalar(plan.pass_through)}"
        if plan.probe is not None:
            extra += f" probe={plan.probe[1]}#{plan.probe[0]}"
        return f"Apply {plan.join_type}{extra}{label}"
    if isinstance(plan, Join):
        return f"Join {plan.join_type}{label} pred={print_scalar(plan.pred)}"
    if isinstance(plan, Aggregate):
        keys = " ".join(f"${k}" for k in plan.keys)
        aggs = ", ".join(f"{name}#{cid}={fn}({'$' + str(arg) if arg is not None else '*'})"
                         for cid, name, fn, arg in plan.aggs)
        return f"Aggregate{label} keys=[{keys}] aggs=[{aggs}]"
    if isinstance(plan, Sort):
        keys = " ".join(f"${cid}{'' if asc else ' desc'}" for cid, asc in plan.keys)
        return f"Sort{label} keys=[{keys}]"
    if isinstance(plan, Limit):
        return f"Limit{label} n={plan.n}"
    if isinstance(plan, AttachOrdinal):
        return f"AttachOrdinal{label} {plan.name}#{plan.cid}"
    raise TypeError(f"cannot print {plan!r}")


def _print_tree(plan: Plan, depth: int, lines: list[str]) -> None:
    # subquery expressions are printed as numbered blocks after the children
    subplans: list[Plan] = []
    for e in plan.exprs():
        for node in walk_scalar(e):
            if isinstance(node, (Subq, ExistsE)):
                _subplan_slots[id(node)] = len(subplans)
                subplans.append(node.plan)
    pad = "  " * depth
    lines.append(pad + _node_header(plan))
    for child in plan.children():
        _print_tree(child, depth + 1, lines)
    for k, sub in enumerate(subplans):
        lines.append(f"{pad}  Subquery {k}")
        _print_tree(sub, depth + 2, lines)


# -- presentational SQL form (derived-table style) --


def print_plan_sql(plan: Plan) -> str:
    names = _column_names(plan)
    return _sql(plan, names)


def _column_names(plan: Plan) -> dict[int, str]:
    """cid -> printable name, qualified by derived-table label when known."""
    names: dict[int, str] = {}

    def visit(node: Plan, label: str | None):
        label = node.label or label
        for child in node.children():
            visit(child, label)
        for e in node.exprs():
            for sub in scalar_subplans(e):
                visit(sub, label)
        for c in node.out_cols():
            qualified = f"{label}.{c.name}" if label else c.name
            names.setdefault(c.cid, qualified)

    visit(plan, None)
    return names


def _sql_expr(e: Scalar, names: dict[int, str]) -> str:
    if isinstance(e, Lit):
        v = e.value
        if v is None:
            return "NULL"
        if e.ctype is DATE:
            return f"'{date_to_iso(v)}'"
        if isinstance(v, bool):
            return "1" if v else "0"
        if isinstance(v, str):
            return "'" + v.replace("'", "''") + "'"
        if isinstance(v, float):
            return float_to_str(v)
        return str(v)
    if isinstance(e, Col):
        return names.get(e.cid, e.name or f"col{e.cid}")
    if isinstance(e, Param):
        return f"@{e.name}"
    if isinstance(e, Bin):
        return f"{_sql_expr(e.lhs, names)} {e.op} {_sql_expr(e.rhs, names)}"
    if isinstance(e, NotE):
        return f"NOT ({_sql_expr(e.operand, names)})"
    if isinstance(e, IsNullE):
        return f"{_sql_expr(e.operand, names)} IS NULL"
    if isinstance(e, CaseE):
        parts = ["CASE"]
        for w, t in e.branches:
            parts.append(f"WHEN {_sql_expr(w, names)} THEN {_sql_expr(t, names)}")
        if e.otherwise is not None:
            parts.append(f"ELSE {_sql_expr(e.otherwise, names)}")
        parts.append("END")
        return " ".join(parts)
    if isinstance(e, CastE):
        return f"CAST({_sql_expr(e.operand, names)} AS {e.ctype.value})"
    if isinstance(e, Intr):
        return f"{e.name}({', '.join(_sql_expr(a, names) for a in e.args)})"
    if isinstance(e, Udf):
        return f"{e.name}({', '.join(_sql_expr(a, names) for a in e.args)})"
    if isinstance(e, Subq):
        return f"({_sql(e.plan, names)})"
    if isinstance(e, ExistsE):
        return f"EXISTS ({_sql(e.plan, names)})"
    if isinstance(e, InE):
        items = ", ".join(_sql_expr(i, names) for i in e.items)
        return f"{_sql_expr(e.operand, names)} IN ({items})"
    if isinstance(e, LikeE):
        return f"{_sql_expr(e.operand, names)} LIKE '{e.pattern}'"
    raise TypeError(f"cannot print {e!r}")


def _is_derived_table(plan: Plan) -> bool:
    while isinstance(plan, (ComputeScalar, Project, Filter)):
        plan = plan.child
    return isinstance(plan, ConstantScan)


def _derived_table_sql(plan: Plan, names: dict[int, str]) -> str:
    """A ConstantScan-rooted chain renders as one single-row SELECT."""
    items: list[str] = []
    node = plan
    selected: list[tuple[str, int]] | None = None
    computes: list[tuple[int, str, Scalar]] = []
    while isinstance(node, (ComputeScalar, Project)):
        if isinstance(node, Project) and selected is None:
            selected = node.items
        if isinstance(node, ComputeScalar):
            computes = node.computed + computes
        node = node.child
    defined = {cid: expr for cid, _, expr in computes}
    if selected is None:
        selected = [(name, cid) for cid, name, _ in computes]
    for name, cid in selected:
        expr = defined.get(cid)
        rendered = _sql_expr(expr, names) if expr is not None else names.get(cid, name)
        items.append(f"{rendered} AS {name}")
    return "SELECT " + ", ".join(items) if items else "SELECT NULL AS placeholder"


def _sql(plan: Plan, names: dict[int, str]) -> str:
    if isinstance(plan, Apply):
        left = _sql_from_part(plan.left, names)
        right = _sql_from_part(plan.right, names)
        kw = "OUTER APPLY" if plan.join_type == LEFT_OUTER else f"{plan.join_type} APPLY"
        out_names = [names.get(c.cid, c.name) for c in plan.out_cols()]
        return f"SELECT {', '.join(out_names)} FROM {left}\n{kw} {right}"
    if isinstance(plan, Project) and isinstance(plan.child, Apply):
        inner = plan.child
        left = _sql_from_part(inner.left, names)
        right = _sql_from_part(inner.right, names)
        kw = "OUTER APPLY" if inner.join_type == LEFT_OUTER else f"{inner.join_type} APPLY"
        items = ", ".join(f"{names.get(cid, name)} AS {name}" for name, cid in plan.items)
        return f"SELECT {items}\nFROM {left}\n{kw} {right}"
    if _is_derived_table(plan):
        return _derived_table_sql(plan, names)
    if isinstance(plan, Project):
        items = ", ".join(f"{names.get(cid, name)} AS {name}" for name, cid in plan.items)
        return f"SELECT {items} FROM ({_sql(plan.child, names)}) AS {plan.label or 'q'}"
    if isinstance(plan, ComputeScalar):
        inner = _sql_from_part(plan.child, names)
        cols = [names.get(c.cid, c.name) for c in plan.child.out_cols()]
        cols += [f"{_sql_expr(e, names)} AS {name}" for _, name, e in plan.computed]
        return f"SELECT {', '.join(cols)} FROM {inner}"
    if isinstance(plan, Filter):
        return f"{_sql(plan.child, names)} WHERE {_sql_expr(plan.pred, names)}"
    if isinstance(plan, Scan):
        cols = ", ".join(c.name for c in plan.cols)
        return f"SELECT {cols} FROM {plan.table}" + (f" AS {plan.alias}" if plan.alias else "")
    if isinstance(plan, Join):
        kw = "INNER JOIN" if plan.join_type == INNER else "LEFT OUTER JOIN"
        return (f"SELECT * FROM ({_sql(plan.left, names)}) AS jl {kw} "
                f"({_sql(plan.right, names)}) AS jr ON {_sql_expr(plan.pred, names)}")
    if isinstance(plan, Aggregate):
        keys = [names.get(k, f"col{k}") for k in plan.keys]
        aggs = [f"{fn}({names.get(arg, '*') if arg is not None else '*'}) AS {name}"
                for _, name, fn, arg in plan.aggs]
        group = f" GROUP BY {', '.join(keys)}" if keys else ""
        return (f"SELECT {', '.join(keys + aggs)} FROM ({_sql(plan.child, names)})"
                f" AS g{group}")
    if isinstance(plan, Sort):
        keys = ", ".join(f"{names.get(cid, cid)}{'' if asc else ' DESC'}"
                         for cid, asc in plan.keys)
        return f"{_sql(plan.child, names)} ORDER BY {keys}"
    if isinstance(plan, Limit):
        return f"{_sql(plan.child, names)} LIMIT {plan.n}"
    if isinstance(plan, ConstantScan):
        return "SELECT 1 AS one"
    if isinstance(plan, AttachOrdinal):
        return f"SELECT *, row_number() AS {plan.name} FROM ({_sql(plan.child, names)}) AS o"
    raise TypeError(f"cannot print {plan!r}")


def _sql_from_part(plan: Plan, names: dict[int, str]) -> str:
    if isinstance(plan, Scan):
        return plan.table + (f" AS {plan.alias}" if plan.alias else "")
    if isinstance(plan, Apply):
        left = _sql_from_part(plan.left, names)
        right = _sql_from_part(plan.right, names)
        kw = "OUTER APPLY" if plan.join_type == LEFT_OUTER else f"{plan.join_type} APPLY"
        return f"{left}\n{kw} {right}"
    label = plan.label or "dt"
    return f"(\n  {_sql(plan, names)}\n) AS {label}"
