"""AST for the query dialect and the procedural UDF dialect.

Source positions are carried for diagnostics but excluded from equality so
that parse(print(ast)) == ast holds structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from ..values import ColumnType, Value


class Expr:
    pass


@dataclass(frozen=True)
class Literal(Expr):
    value: Value  # None | bool | int | float | str


@dataclass(frozen=True)
class ColumnRef(Expr):
    name: str
    qualifier: str | None = None


@dataclass(frozen=True)
class VarRef(Expr):
    """@name reference; params and locals are distinguished at binding."""
    name: str


@dataclass(frozen=True)
class BinaryOp(Expr):
    op: str  # + - * / = <> < <= > >= AND OR
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Not(Expr):
    operand: Expr


@dataclass(frozen=True)
class IsNull(Expr):
    operand: Expr


@dataclass(frozen=True)
class Case(Expr):
    branches: tuple[tuple[Expr, Expr], ...]  # (when, then)
    otherwise: Expr | None


@dataclass(frozen=True)
class Cast(Expr):
    operand: Expr
    to: ColumnType


@dataclass(frozen=True)
class IntrinsicCall(Expr):
    name: str
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class UdfCall(Expr):
    name: str
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class AggCall(Expr):
    fn: str  # SUM COUNT COUNT_STAR AVG MIN MAX
    arg: Expr | None  # None only for COUNT_STAR


@dataclass(frozen=True)
class ScalarSubquery(Expr):
    query: "Query"


@dataclass(frozen=True)
class Exists(Expr):
    query: "Query"


@dataclass(frozen=True)
class InList(Expr):
    operand: Expr
    items: tuple[Expr, ...]  # literals


@dataclass(frozen=True)
class Like(Expr):
    operand: Expr
    pattern: str


@dataclass(frozen=True)
class Between(Expr):
    operand: Expr
    lo: Expr
    hi: Expr


@dataclass(frozen=True)
class FromClause:
    table: str
    alias: str | None = None
    on: Expr | None = None  # set for "JOIN t ON pred", None for comma items


@dataclass(frozen=True)
class Query:
    select: tuple[tuple[Expr, str | None], ...]  # (expr, alias)
    from_items: tuple[FromClause, ...] = ()
    where: Expr | None = None
    group_by: tuple[Expr, ...] = ()
    having: Expr | None = None
    order_by: tuple[tuple[Expr, bool], ...] = ()  # (expr, ascending)
    limit: int | None = None  # TOP n


class Stmt:
    pass


@dataclass(frozen=True)
class Declare(Stmt):
    var: str
    ctype: ColumnType
    init: Expr | None = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Set(Stmt):
    var: str
    expr: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SelectAssign(Stmt):
    """Single-variable assignment from a query; multi-variable sources are
    split into one of these per variable at parse time."""
    var: str
    expr: Expr
    from_items: tuple[FromClause, ...] = ()
    where: Expr | None = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class If(Stmt):
    pred: Expr
    then: tuple[Stmt, ...]
    orelse: tuple[Stmt, ...] = ()
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Return(Stmt):
    expr: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class UdfDef:
    name: str
    params: tuple[tuple[str, ColumnType], ...]
    return_type: ColumnType
    body: tuple[Stmt, ...]
    calls_nondeterministic: bool = field(default=False, compare=False)
    called_udfs: frozenset[str] = field(default=frozenset(), compare=False)

    @property
    def param_names(self) -> list[str]:
        return [n for n, _ in self.params]


def walk_exprs(node) -> "list[Expr]":
    """All expression subtrees of an expression, pre-order."""
    out = []
    stack = [node]
    while stack:
        e = stack.pop()
        if e is None:
            continue
        out.append(e)
        if isinstance(e, BinaryOp):
            stack += [e.rhs, e.lhs]
        elif isinstance(e, (Not, IsNull)):
            stack.append(e.operand)
        elif isinstance(e, Case):
            for w, t in e.branches:
                stack += [t, w]
            stack.append(e.otherwise)
        elif isinstance(e, Cast):
            stack.append(e.operand)
        elif isinstance(e, (IntrinsicCall, UdfCall)):
            stack += list(e.args)
        elif isinstance(e, AggCall):
            stack.append(e.arg)
        elif isinstance(e, InList):
            stack.append(e.operand)
            stack += list(e.items)
        elif isinstance(e, Like):
            stack.append(e.operand)
        elif isinstance(e, Between):
            stack += [e.hi, e.lo, e.operand]
        elif isinstance(e, (ScalarSubquery, Exists)):
            q = e.query
            for item, _ in q.select:
                stack.append(item)
            stack.append(q.where)
            stack += list(q.group_by)
            stack.append(q.having)
            for item, _ in q.order_by:
                stack.append(item)
            for f in q.from_items:
                stack.append(f.on)
    return out


def stmt_exprs(stmt: Stmt) -> list[Expr]:
    """Top-level expressions of one statement (not descending into branches)."""
    if isinstance(stmt, Declare):
        return [stmt.init] if stmt.init is not None else []
    if isinstance(stmt, Set):
        return [stmt.expr]
    if isinstance(stmt, SelectAssign):
        out = [stmt.expr]
        if stmt.where is not None:
            out.append(stmt.where)
        out += [f.on for f in stmt.from_items if f.on is not None]
        return out
    if isinstance(stmt, If):
        return [stmt.pred]
    if isinstance(stmt, Return):
        return [stmt.expr]
    raise TypeError(stmt)


def read_vars(exprs) -> set[str]:
    """Variable names referenced by the given expression(s)."""
    names: set[str] = set()
    if isinstance(exprs, Expr):
        exprs = [exprs]
    for e in exprs:
        for sub in walk_exprs(e):
            if isinstance(sub, VarRef):
                names.add(sub.name.lower())
    return names
