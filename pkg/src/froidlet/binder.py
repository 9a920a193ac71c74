"""Binds parsed ASTs to typed plans with globally-unique column ids.

UDF calls bind as residual Udf scalar nodes; the inliner decides later
whether to replace them with algebrized subqueries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from . import algebra as ra
from . import intrinsics
from .catalog import Catalog
from .errors import BindError, TypeCheckError, UnknownColumn
from .frontend import ast
from .frontend.printer import print_expr
from .values import BOOL, DATE, FLOAT64, INT64, STRING, ColumnType, castable

NUMERIC = (INT64, FLOAT64)


@dataclass
class Scope:
    """Name resolution frame: alias -> {column name -> OutCol}."""
    tables: dict[str, dict[str, ra.OutCol]] = field(default_factory=dict)

    def add_table(self, alias: str, cols: list[ra.OutCol]) -> None:
        key = alias.lower()
        if key in self.tables:
            raise BindError(f"duplicate table alias {alias!r}")
        self.tables[key] = {c.name.lower(): c for c in cols}

    def resolve(self, name: str, qualifier: str | None) -> ra.OutCol | None:
        if qualifier is not None:
            table = self.tables.get(qualifier.lower())
            if table is None:
                return None
            return table.get(name.lower())
        hits = [cols[name.lower()] for cols in self.tables.values()
                if name.lower() in cols]
        if len(hits) > 1:
            raise BindError(f"ambiguous column {name!r}")
        return hits[0] if hits else None


class Binder:
    def __init__(self, catalog: Catalog, idgen: ra.IdGen,
                 var_resolver: Callable[[str], ra.Scalar] | None = None):
        self.catalog = catalog
        self.idgen = idgen
        self.var_resolver = var_resolver

    # -- plans --

    def bind_query(self, q: ast.Query, outer: list[Scope] | None = None) -> ra.Plan:
        outer = outer or []
        scope = Scope()
        plan = self._bind_from(q.from_items, scope, outer)
        scopes = [scope] + outer

        if q.where is not None:
            pred = self._coerce_bool(self.bind_expr(q.where, scopes), "WHERE")
            plan = ra.Filter(plan, pred)

        has_aggs = q.group_by or q.having is not None or any(
            isinstance(e, ast.AggCall)
            for item, _ in q.select for e in ast.walk_exprs(item))

        if has_aggs:
            plan, select_cols = self._bind_aggregate_query(q, plan, scopes)
        else:
            computed = []
            select_cols = []
            for i, (item, alias) in enumerate(q.select):
                expr = self.bind_expr(item, scopes)
                cid = self.idgen.new()
                name = alias or self._item_name(item, i)
                computed.append((cid, name, expr))
                select_cols.append((name, cid, item))
            plan = ra.ComputeScalar(plan, computed)

        if q.order_by:
            keys = []
            sort_computed = []
            for key_ast, asc in q.order_by:
                cid = self._resolve_order_key(key_ast, select_cols)
                if cid is None:
                    if has_aggs:
                        raise BindError("ORDER BY of a grouped query must reference "
                                        "select items or grouping expressions")
                    expr = self.bind_expr(key_ast, scopes)
                    cid = self.idgen.new()
                    sort_computed.append((cid, f"sortkey{len(sort_computed)}", expr))
                keys.append((cid, asc))
            if sort_computed:
                plan = ra.ComputeScalar(plan, sort_computed)
            plan = ra.Sort(plan, keys)
        if q.limit is not None:
            plan = ra.Limit(plan, q.limit)
        return ra.Project(plan, [(name, cid) for name, cid, _ in select_cols])

    def _bind_from(self, from_items, scope: Scope, outer: list[Scope]) -> ra.Plan:
        if not from_items:
            return ra.ConstantScan()
        plan: ra.Plan | None = None
        for f in from_items:
            rel = self.catalog.lookup_table(f.table)
            cols = [ra.OutCol(self.idgen.new(), n, t) for n, t in rel.schema.columns]
            scan = ra.Scan(f.table.lower(), cols, alias=f.alias)
            scope.add_table(f.alias or f.table, cols)
            if plan is None:
                if f.on is not None:
                    raise BindError("first FROM item cannot have ON")
                plan = scan
                continue
            if f.on is not None:
                pred = self._coerce_bool(self.bind_expr(f.on, [scope] + outer), "ON")
                plan = ra.Join(plan, scan, ra.INNER, pred)
            else:
                plan = ra.Join(plan, scan, ra.INNER, ra.Lit(True, BOOL))
        return plan

    def _bind_aggregate_query(self, q: ast.Query, plan: ra.Plan,
                              scopes: list[Scope]):
        pre: list[tuple[int, str, ra.Scalar]] = []
        group_map: dict[str, int] = {}
        keys: list[int] = []
        for i, g in enumerate(q.group_by):
            bound = self.bind_expr(g, scopes)
            if isinstance(bound, ra.Col):
                cid = bound.cid
            else:
                cid = self.idgen.new()
                pre.append((cid, f"groupkey{i}", bound))
            group_map[print_expr(g).lower()] = cid
            keys.append(cid)

        aggs: list[tuple[int, str, str, int | None]] = []

        def bind_with_aggs(e: ast.Expr) -> ra.Scalar:
            printed = print_expr(e).lower()
            if printed in group_map:
                cid = group_map[printed]
                col = self._col_by_id(plan, pre, cid)
                return col
            if isinstance(e, ast.AggCall):
                arg_cid = None
                arg_type = None
                if e.arg is not None:
                    bound_arg = self.bind_expr(e.arg, scopes)
                    if e.fn in ("SUM", "AVG") and bound_arg.ctype not in NUMERIC \
                            and bound_arg.ctype is not None:
                        raise TypeCheckError(f"{e.fn} requires a numeric argument")
                    if isinstance(bound_arg, ra.Col):
                        arg_cid = bound_arg.cid
                        arg_type = bound_arg.ctype
                    else:
                        arg_cid = self.idgen.new()
                        pre.append((arg_cid, f"aggarg{len(pre)}", bound_arg))
                        arg_type = bound_arg.ctype
                out_cid = self.idgen.new()
                aggs.append((out_cid, f"agg{len(aggs)}", e.fn, arg_cid))
                return ra.Col(out_cid, ra.agg_result_type(e.fn, arg_type))
            return self._bind_structural(e, scopes, bind_with_aggs)

        select_cols = []
        post: list[tuple[int, str, ra.Scalar]] = []
        bound_items = []
        for i, (item, alias) in enumerate(q.select):
            bound_items.append((bind_with_aggs(item), alias or self._item_name(item, i), item))
        having_bound = None
        if q.having is not None:
            having_bound = self._coerce_bool(bind_with_aggs(q.having), "HAVING")

        agg_plan = ra.Aggregate(ra.ComputeScalar(plan, pre) if pre else plan,
                                keys, aggs)
        result: ra.Plan = agg_plan
        if having_bound is not None:
            result = ra.Filter(result, having_bound)
        for bound, name, item in bound_items:
            cid = self.idgen.new()
            post.append((cid, name, bound))
            select_cols.append((name, cid, item))
        result = ra.ComputeScalar(result, post)
        return result, select_cols

    def _col_by_id(self, plan: ra.Plan, pre, cid: int) -> ra.Col:
        for c in plan.out_cols():
            if c.cid == cid:
                return ra.Col(cid, c.ctype, c.name)
        for pcid, name, expr in pre:
            if pcid == cid:
                return ra.Col(cid, expr.ctype, name)
        raise UnknownColumn(f"#{cid}")

    def _resolve_order_key(self, key_ast: ast.Expr, select_cols) -> int | None:
        if isinstance(key_ast, ast.ColumnRef) and key_ast.qualifier is None:
            for name, cid, _ in select_cols:
                if name.lower() == key_ast.name.lower():
                    return cid
        printed = print_expr(key_ast).lower()
        for _, cid, item in select_cols:
            if print_expr(item).lower() == printed:
                return cid
        return None

    @staticmethod
    def _item_name(item: ast.Expr, index: int) -> str:
        if isinstance(item, ast.ColumnRef):
            return item.name
        return f"col{index + 1}"

    # -- scalar expressions --

    def bind_expr(self, e: ast.Expr, scopes: list[Scope]) -> ra.Scalar:
        return self._bind_structural(e, scopes, lambda sub: self.bind_expr(sub, scopes))

    def _bind_structural(self, e: ast.Expr, scopes: list[Scope],
                         recurse: Callable[[ast.Expr], ra.Scalar]) -> ra.Scalar:
        if isinstance(e, ast.Literal):
            return self._bind_literal(e)
        if isinstance(e, ast.ColumnRef):
            for scope in scopes:
                col = scope.resolve(e.name, e.qualifier)
                if col is not None:
                    return ra.Col(col.cid, col.ctype, col.name)
            full = f"{e.qualifier}.{e.name}" if e.qualifier else e.name
            raise UnknownColumn(f"unknown column {full!r}")
        if isinstance(e, ast.VarRef):
            if self.var_resolver is None:
                raise BindError(f"variable @{e.name} referenced outside a function body")
            return self.var_resolver(e.name)
        if isinstance(e, ast.BinaryOp):
            return self._bind_binary(e, recurse)
        if isinstance(e, ast.Not):
            operand = self._coerce_bool(recurse(e.operand), "NOT")
            return ra.NotE(operand)
        if isinstance(e, ast.IsNull):
            return ra.IsNullE(recurse(e.operand))
        if isinstance(e, ast.Case):
            branches = []
            types = []
            for when, then in e.branches:
                wb = self._coerce_bool(recurse(when), "CASE WHEN")
                tb = recurse(then)
                branches.append((wb, tb))
                types.append(tb.ctype)
            otherwise = recurse(e.otherwise) if e.otherwise is not None else None
            if otherwise is not None:
                types.append(otherwise.ctype)
            unified = ra.unify_types(types, "CASE branches")
            if unified is not None:
                branches = [(w, self._promote(t, unified)) for w, t in branches]
                if otherwise is not None:
                    otherwise = self._promote(otherwise, unified)
            return ra.CaseE(branches, otherwise, unified)
        if isinstance(e, ast.Cast):
            operand = recurse(e.operand)
            if operand.ctype is not None and not castable(operand.ctype, e.to):
                raise TypeCheckError(f"cannot cast {operand.ctype} to {e.to}")
            return ra.CastE(operand, e.to)
        if isinstance(e, ast.IntrinsicCall):
            intr = intrinsics.lookup(e.name)
            args = [recurse(a) for a in e.args]
            if len(args) != intr.arity:
                raise TypeCheckError(f"{intr.name} takes {intr.arity} arguments, "
                                     f"got {len(args)}")
            rtype = intr.result_type([a.ctype for a in args])
            return ra.Intr(intr.name, args, rtype)
        if isinstance(e, ast.UdfCall):
            udf = self.catalog.lookup_udf(e.name)
            args = [recurse(a) for a in e.args]
            if len(args) != len(udf.params):
                raise BindError(f"{udf.name} takes {len(udf.params)} arguments, "
                                f"got {len(args)}")
            for arg, (pname, ptype) in zip(args, udf.params):
                if arg.ctype is not None and not castable(arg.ctype, ptype):
                    raise TypeCheckError(
                        f"argument @{pname} of {udf.name}: cannot cast "
                        f"{arg.ctype} to {ptype}")
            return ra.Udf(udf.name.lower(), args, udf.return_type)
        if isinstance(e, ast.AggCall):
            raise TypeCheckError("aggregate is not allowed in this context")
        if isinstance(e, ast.ScalarSubquery):
            if len(e.query.select) != 1:
                raise TypeCheckError("scalar subquery must select exactly one column")
            plan = self.bind_query(e.query, outer=scopes)
            return ra.Subq(plan)
        if isinstance(e, ast.Exists):
            plan = self.bind_query(e.query, outer=scopes)
            return ra.ExistsE(plan)
        if isinstance(e, ast.InList):
            operand = recurse(e.operand)
            items = [self._bind_literal(i) for i in e.items]
            for item in items:
                self._check_comparable(operand.ctype, item.ctype, "IN")
            return ra.InE(operand, items)
        if isinstance(e, ast.Like):
            operand = recurse(e.operand)
            if operand.ctype is not None and operand.ctype is not STRING:
                raise TypeCheckError("LIKE requires a string operand")
            return ra.LikeE(operand, e.pattern)
        if isinstance(e, ast.Between):
            operand = recurse(e.operand)
            lo = recurse(e.lo)
            hi = recurse(e.hi)
            self._check_comparable(operand.ctype, lo.ctype, "BETWEEN")
            self._check_comparable(operand.ctype, hi.ctype, "BETWEEN")
            return ra.Bin("AND",
                          ra.Bin(">=", operand, lo, BOOL),
                          ra.Bin("<=", operand, hi, BOOL), BOOL)
        raise BindError(f"cannot bind {e!r}")

    @staticmethod
    def _bind_literal(e: ast.Literal) -> ra.Lit:
        v = e.value
        if v is None:
            return ra.Lit(None, None)
        if isinstance(v, bool):
            return ra.Lit(v, BOOL)
        if isinstance(v, int):
            return ra.Lit(v, INT64)
        if isinstance(v, float):
            return ra.Lit(v, FLOAT64)
        return ra.Lit(v, STRING)

    def _bind_binary(self, e: ast.BinaryOp, recurse) -> ra.Scalar:
        lhs = recurse(e.lhs)
        rhs = recurse(e.rhs)
        lt, rt = lhs.ctype, rhs.ctype
        if e.op in ("AND", "OR"):
            return ra.Bin(e.op, self._coerce_bool(lhs, e.op),
                          self._coerce_bool(rhs, e.op), BOOL)
        if e.op in ("=", "<>", "<", "<=", ">", ">="):
            self._check_comparable(lt, rt, e.op)
            return ra.Bin(e.op, lhs, rhs, BOOL)
        # arithmetic / concatenation
        if lt is STRING and rt is STRING and e.op == "+":
            return ra.Bin("+", lhs, rhs, STRING)
        if lt is None and rt is STRING and e.op == "+":
            return ra.Bin("+", lhs, rhs, STRING)
        if rt is None and lt is STRING and e.op == "+":
            return ra.Bin("+", lhs, rhs, STRING)
        for t, side in ((lt, "left"), (rt, "right")):
            if t is not None and t not in NUMERIC:
                raise TypeCheckError(
                    f"operator {e.op!r}: {side} operand is {t.value}, expected a "
                    f"numeric type (use an explicit cast)")
        if e.op == "/":
            rtype = INT64 if lt is INT64 and rt is INT64 else FLOAT64
        else:
            rtype = FLOAT64 if FLOAT64 in (lt, rt) else INT64
        return ra.Bin(e.op, lhs, rhs, rtype)

    @staticmethod
    def _check_comparable(lt: ColumnType | None, rt: ColumnType | None, op: str) -> None:
        if lt is None or rt is None:
            return
        if lt in NUMERIC and rt in NUMERIC:
            return
        if lt is rt:
            return
        raise TypeCheckError(f"cannot apply {op} to {lt.value} and {rt.value}")

    @staticmethod
    def _coerce_bool(e: ra.Scalar, what: str) -> ra.Scalar:
        if e.ctype is not None and e.ctype is not BOOL:
            raise TypeCheckError(f"{what} requires a BOOL expression, found {e.ctype.value}")
        return e

    def _promote(self, e: ra.Scalar, target: ColumnType) -> ra.Scalar:
        if e.ctype is target or e.ctype is None:
            return e
        return ra.CastE(e, target)

    def coerce_assign(self, e: ra.Scalar, target: ColumnType, what: str) -> ra.Scalar:
        """Assignment/parameter/return boundary: insert an explicit cast
        whenever the types differ (runtime may still fail per cast rules)."""
        if e.ctype is target:
            return e
        if e.ctype is None:
            if isinstance(e, ra.Lit) and e.value is None:
                return ra.Lit(None, target)
            return ra.CastE(e, target)
        if not castable(e.ctype, target):
            raise TypeCheckError(f"{what}: cannot cast {e.ctype.value} to {target.value}")
        return ra.CastE(e, target)
