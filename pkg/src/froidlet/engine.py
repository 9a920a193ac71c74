"""Set-oriented plan execution plus the per-tuple UDF interpreter.

Plans compile once into closures over positional row layouts; rows are plain
Python lists. The interpreter compiles each UDF body once per catalog and
re-runs it per invocation, which is exactly the iterative cost model the
inlining pipeline is measured against. Both modes share one scalar evaluator,
one cast routine, and one subquery-cardinality rule, so differential
comparisons are meaningful.
"""

from __future__ import annotations

import datetime
import itertools
import time
from dataclasses import dataclass, field

from . import algebra as ra
from .binder import Binder, Scope
from .catalog import Catalog, Relation, Schema
from .errors import (BindError, InternalError, RecursionLimit,
                     ScalarSubqueryCardinality)
from .frontend import ast
from .intrinsics import lookup as intrinsic_lookup
from .values import (BOOL, DATE, FLOAT64, INT64, STRING, cast_value_typed,
                     sql_add, sql_compare, sql_div, sql_in, sql_like, sql_mul,
                     sql_not, sql_sub)

_EPOCH = datetime.date(1970, 1, 1).toordinal()

RECURSION_LIMIT = 256


@dataclass
class ExecMetrics:
    udf_invocations: int = 0
    rows_scanned: dict = field(default_factory=dict)
    operator_output_rows: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def scanned(self, table: str, n: int) -> None:
        self.rows_scanned[table] = self.rows_scanned.get(table, 0) + n

    def as_dict(self) -> dict:
        return {"udf_invocations": self.udf_invocations,
                "rows_scanned": dict(self.rows_scanned),
                "operator_output_rows": dict(self.operator_output_rows),
                "wall_time": self.wall_time}


class ExecContext:
    """Per-execution state: metrics sink, stable now(), recursion depth."""

    def __init__(self, catalog: Catalog, metrics: ExecMetrics | None = None,
                 now_date: int | None = None, count_rows: bool = False):
        self.catalog = catalog
        self.metrics = metrics if metrics is not None else ExecMetrics()
        if now_date is None:
            now_date = datetime.date.today().toordinal() - _EPOCH
        self.now_date = now_date
        self.depth = 0
        self.count_rows = count_rows
        self.subq_cache: dict[int, object] = {}
        self.program_bodies: dict[str, list] = {}
        self._node_seq = itertools.count()

    def call_udf(self, name: str, args: list):
        program = get_program(self.catalog, name)
        return program.run(args, self)


# --------------------------------------------------------------------------
# scalar compilation

Layout = dict  # cid -> position


def compile_scalar(e: ra.Scalar, layouts: list[Layout], ctx: ExecContext):
    """Compile to fn(row, outers) -> value. layouts[0] describes `row`,
    layouts[k] describes outers[k-1]."""
    if isinstance(e, ra.Lit):
        v = e.value
        return lambda row, outers: v
    if isinstance(e, ra.Col):
        for k, lay in enumerate(layouts):
            pos = lay.get(e.cid)
            if pos is not None:
                if k == 0:
                    return lambda row, outers: row[pos]
                idx = k - 1
                return lambda row, outers: outers[idx][pos]
        raise InternalError(f"column #{e.cid} ({e.name}) not found in any layout")
    if isinstance(e, ra.Param):
        raise InternalError(f"unbound parameter @{e.name} reached execution")
    if isinstance(e, ra.Bin):
        lf = compile_scalar(e.lhs, layouts, ctx)
        rf = compile_scalar(e.rhs, layouts, ctx)
        op = e.op
        if op == "AND":
            def f(row, outers):
                a = lf(row, outers)
                if a is False:
                    return False
                b = rf(row, outers)
                if b is False:
                    return False
                return None if (a is None or b is None) else True
            return f
        if op == "OR":
            def f(row, outers):
                a = lf(row, outers)
                if a is True:
                    return True
                b = rf(row, outers)
                if b is True:
                    return True
                return None if (a is None or b is None) else False
            return f
        if op == "+":
            return lambda row, outers: sql_add(lf(row, outers), rf(row, outers))
        if op == "-":
            return lambda row, outers: sql_sub(lf(row, outers), rf(row, outers))
        if op == "*":
            return lambda row, outers: sql_mul(lf(row, outers), rf(row, outers))
        if op == "/":
            return lambda row, outers: sql_div(lf(row, outers), rf(row, outers))
        return lambda row, outers: sql_compare(op, lf(row, outers), rf(row, outers))
    if isinstance(e, ra.NotE):
        f = compile_scalar(e.operand, layouts, ctx)
        return lambda row, outers: sql_not(f(row, outers))
    if isinstance(e, ra.IsNullE):
        f = compile_scalar(e.operand, layouts, ctx)
        return lambda row, outers: f(row, outers) is None
    if isinstance(e, ra.CaseE):
        compiled = [(compile_scalar(w, layouts, ctx), compile_scalar(t, layouts, ctx))
                    for w, t in e.branches]
        other = (compile_scalar(e.otherwise, layouts, ctx)
                 if e.otherwise is not None else None)

        def f(row, outers):
            for wf, tf in compiled:
                if wf(row, outers) is True:
                    return tf(row, outers)
            return other(row, outers) if other is not None else None
        return f
    if isinstance(e, ra.CastE):
        f = compile_scalar(e.operand, layouts, ctx)
        frm = e.operand.ctype
        to = e.ctype
        if frm is None:
            frm = to
        return lambda row, outers: cast_value_typed(f(row, outers), frm, to)
    if isinstance(e, ra.Intr):
        intr = intrinsic_lookup(e.name)
        arg_fns = [compile_scalar(a, layouts, ctx) for a in e.args]
        if intr.fn is None:  # now()/getdate(): stable within one execution
            return lambda row, outers: ctx.now_date
        fn = intr.fn
        return lambda row, outers: fn(*[af(row, outers) for af in arg_fns])
    if isinstance(e, ra.Udf):
        udf = ctx.catalog.lookup_udf(e.name)
        formals = [t for _, t in udf.params]
        arg_fns = [compile_scalar(a, layouts, ctx) for a in e.args]
        arg_types = [a.ctype if a.ctype is not None else t
                     for a, t in zip(e.args, formals)]
        name = e.name

        def f(row, outers):
            args = [cast_value_typed(af(row, outers), at, ft)
                    for af, at, ft in zip(arg_fns, arg_types, formals)]
            return ctx.call_udf(name, args)
        return f
    if isinstance(e, ra.Subq):
        exec_ = PlanExec(e.plan, layouts, ctx)
        correlated = bool(ra.free_col_ids(e.plan))
        key = id(e)

        def f(row, outers):
            if not correlated:
                cached = ctx.subq_cache.get(key, _MISSING)
                if cached is not _MISSING:
                    return cached
            it = exec_.gen((row,) + tuple(outers))
            first = next(it, _MISSING)
            if first is _MISSING:
                result = None
            else:
                second = next(it, _MISSING)
                if second is not _MISSING:
                    raise ScalarSubqueryCardinality(ra.print_scalar(e))
                result = first[0]
            if not correlated:
                ctx.subq_cache[key] = result
            return result
        return f
    if isinstance(e, ra.ExistsE):
        exec_ = PlanExec(e.plan, layouts, ctx)
        correlated = bool(ra.free_col_ids(e.plan))
        key = id(e)

        def f(row, outers):
            if not correlated:
                cached = ctx.subq_cache.get(key, _MISSING)
                if cached is not _MISSING:
                    return cached
            result = next(exec_.gen((row,) + tuple(outers)), _MISSING) is not _MISSING
            if not correlated:
                ctx.subq_cache[key] = result
            return result
        return f
    if isinstance(e, ra.InE):
        f = compile_scalar(e.operand, layouts, ctx)
        items = [i.value for i in e.items]
        return lambda row, outers: sql_in(f(row, outers), items)
    if isinstance(e, ra.LikeE):
        f = compile_scalar(e.operand, layouts, ctx)
        pattern = e.pattern
        return lambda row, outers: sql_like(f(row, outers), pattern)
    raise InternalError(f"cannot compile {e!r}")


_MISSING = object()


# --------------------------------------------------------------------------
# plan compilation


class PlanExec:
    """Compiled plan; gen(outers) yields rows matching .layout positions."""

    def __init__(self, plan: ra.Plan, enclosing: list[Layout], ctx: ExecContext):
        self.ctx = ctx
        self.out_cols = plan.out_cols()
        self.layout = {c.cid: i for i, c in enumerate(self.out_cols)}
        self.gen = self._compile(plan, enclosing)

    def _compile(self, plan: ra.Plan, enclosing: list[Layout]):
        gen = self._compile_inner(plan, enclosing)
        if not self.ctx.count_rows:
            return gen
        node_id = f"{next(self.ctx._node_seq)}:{type(plan).__name__}"
        metrics = self.ctx.metrics

        def counting(outers, inner=gen):
            n = 0
            try:
                for row in inner(outers):
                    n += 1
                    yield row
            finally:
                metrics.operator_output_rows[node_id] = \
                    metrics.operator_output_rows.get(node_id, 0) + n
        return counting

    def _compile_inner(self, plan: ra.Plan, enclosing: list[Layout]):
        ctx = self.ctx
        metrics = ctx.metrics

        if isinstance(plan, ra.ConstantScan):
            def gen(outers):
                yield []
            return gen

        if isinstance(plan, ra.Scan):
            rel = ctx.catalog.lookup_table(plan.table)
            table = plan.table.lower()

            def gen(outers, rows=rel.rows):
                count = 0
                try:
                    for row in rows:
                        count += 1
                        yield row
                finally:
                    metrics.scanned(table, count)
            return gen

        if isinstance(plan, ra.ComputeScalar):
            child = self._compile(plan.child, enclosing)
            layout = {c.cid: i for i, c in enumerate(plan.child.out_cols())}
            fns = []
            for cid, _, expr in plan.computed:
                fns.append(compile_scalar(expr, [dict(layout)] + enclosing, ctx))
                layout[cid] = len(layout)

            def gen(outers):
                for row in child(outers):
                    out = list(row)
                    for fn in fns:
                        out.append(fn(out, outers))
                    yield out
            return gen

        if isinstance(plan, ra.Filter):
            child = self._compile(plan.child, enclosing)
            layout = {c.cid: i for i, c in enumerate(plan.child.out_cols())}
            pred = compile_scalar(plan.pred, [layout] + enclosing, ctx)

            def gen(outers):
                for row in child(outers):
                    if pred(row, outers) is True:
                        yield row
            return gen

        if isinstance(plan, ra.Project):
            child = self._compile(plan.child, enclosing)
            layout = {c.cid: i for i, c in enumerate(plan.child.out_cols())}
            positions = [layout[cid] for _, cid in plan.items]

            def gen(outers):
                for row in child(outers):
                    yield [row[p] for p in positions]
            return gen

        if isinstance(plan, ra.Apply):
            return self._compile_apply(plan, enclosing)

        if isinstance(plan, ra.Join):
            return self._compile_join(plan, enclosing)

        if isinstance(plan, ra.Aggregate):
            return self._compile_aggregate(plan, enclosing)

        if isinstance(plan, ra.Sort):
            child = self._compile(plan.child, enclosing)
            layout = {c.cid: i for i, c in enumerate(plan.child.out_cols())}
            keys = [(layout[cid], asc) for cid, asc in plan.keys]

            def gen(outers):
                rows = list(child(outers))
                for pos, asc in reversed(keys):
                    rows.sort(key=lambda r: (0, 0) if r[pos] is None else (1, r[pos]),
                              reverse=not asc)
                yield from rows
            return gen

        if isinstance(plan, ra.Limit):
            child = self._compile(plan.child, enclosing)
            n = plan.n

            def gen(outers):
                yield from itertools.islice(child(outers), n)
            return gen

        if isinstance(plan, ra.AttachOrdinal):
            child = self._compile(plan.child, enclosing)

            def gen(outers):
                for i, row in enumerate(child(outers)):
                    yield row + [i]
            return gen

        raise InternalError(f"cannot compile plan node {plan!r}")

    def _compile_apply(self, plan: ra.Apply, enclosing: list[Layout]):
        ctx = self.ctx
        left = self._compile(plan.left, enclosing)
        left_layout = {c.cid: i for i, c in enumerate(plan.left.out_cols())}
        right_enclosing = [left_layout] + enclosing
        right = self._compile(plan.right, right_enclosing)
        n_right = len(plan.right.out_cols())
        pass_fn = (compile_scalar(plan.pass_through, [left_layout] + enclosing, ctx)
                   if plan.pass_through is not None else None)
        join_type = plan.join_type
        has_probe = plan.probe is not None

        def gen(outers):
            pad = [None] * n_right
            for lrow in left(outers):
                if pass_fn is not None and pass_fn(lrow, outers) is True:
                    if join_type in (ra.CROSS, ra.LEFT_OUTER):
                        yield lrow + pad
                    elif has_probe:
                        yield lrow + [False]
                    elif join_type == ra.LEFT_ANTI:
                        yield list(lrow)
                    continue
                inner = right((lrow,) + tuple(outers))
                if join_type in (ra.CROSS, ra.LEFT_OUTER):
                    matched = False
                    for rrow in inner:
                        matched = True
                        yield lrow + rrow
                    if not matched and join_type == ra.LEFT_OUTER:
                        yield lrow + pad
                elif join_type == ra.LEFT_SEMI:
                    hit = next(inner, _MISSING) is not _MISSING
                    if has_probe:
                        yield lrow + [hit]
                    elif hit:
                        yield list(lrow)
                else:  # LEFT_ANTI
                    if next(inner, _MISSING) is _MISSING:
                        yield list(lrow)
        return gen

    def _compile_join(self, plan: ra.Join, enclosing: list[Layout]):
        ctx = self.ctx
        left = self._compile(plan.left, enclosing)
        right = self._compile(plan.right, enclosing)
        left_cols = plan.left.out_cols()
        right_cols = plan.right.out_cols()
        left_ids = {c.cid for c in left_cols}
        right_ids = {c.cid for c in right_cols}
        left_layout = {c.cid: i for i, c in enumerate(left_cols)}
        right_layout = {c.cid: i for i, c in enumerate(right_cols)}
        combined = {c.cid: i for i, c in enumerate(left_cols + right_cols)}

        eq_pairs, residual = _split_equijoin(plan.pred, left_ids, right_ids)
        residual_fn = (compile_scalar(residual, [combined] + enclosing, ctx)
                       if residual is not None else None)
        outer = plan.join_type == ra.LEFT_OUTER
        n_right = len(right_cols)

        if eq_pairs:
            lkeys = [compile_scalar(l, [left_layout] + enclosing, ctx) for l, _ in eq_pairs]
            rkeys = [compile_scalar(r, [right_layout] + enclosing, ctx) for _, r in eq_pairs]

            def gen(outers):
                table: dict = {}
                for rrow in right(outers):
                    key = tuple(kf(rrow, outers) for kf in rkeys)
                    if any(k is None for k in key):
                        continue
                    table.setdefault(key, []).append(rrow)
                pad = [None] * n_right
                for lrow in left(outers):
                    key = tuple(kf(lrow, outers) for kf in lkeys)
                    matched = False
                    if not any(k is None for k in key):
                        for rrow in table.get(key, ()):
                            combined_row = lrow + rrow
                            if residual_fn is None or residual_fn(combined_row, outers) is True:
                                matched = True
                                yield combined_row
                    if outer and not matched:
                        yield lrow + pad
            return gen

        pred_fn = compile_scalar(plan.pred, [combined] + enclosing, ctx)

        def gen(outers):
            rrows = list(right(outers))
            pad = [None] * n_right
            for lrow in left(outers):
                matched = False
                for rrow in rrows:
                    combined_row = lrow + rrow
                    if pred_fn(combined_row, outers) is True:
                        matched = True
                        yield combined_row
                if outer and not matched:
                    yield lrow + pad
        return gen

    def _compile_aggregate(self, plan: ra.Aggregate, enclosing: list[Layout]):
        child = self._compile(plan.child, enclosing)
        layout = {c.cid: i for i, c in enumerate(plan.child.out_cols())}
        key_pos = [layout[k] for k in plan.keys]
        specs = [(fn, layout[arg] if arg is not None else -1)
                 for _, _, fn, arg in plan.aggs]
        scalar = not key_pos

        def gen(outers):
            groups: dict = {}
            order: list = []
            for row in child(outers):
                key = tuple(row[p] for p in key_pos)
                accs = groups.get(key)
                if accs is None:
                    accs = [_new_acc(fn) for fn, _ in specs]
                    groups[key] = accs
                    order.append(key)
                for acc, (fn, pos) in zip(accs, specs):
                    _acc_add(acc, fn, row[pos] if pos >= 0 else None)
            if scalar and not groups:
                groups[()] = [_new_acc(fn) for fn, _ in specs]
                order.append(())
            for key in order:
                accs = groups[key]
                yield list(key) + [_acc_result(acc, fn)
                                   for acc, (fn, _) in zip(accs, specs)]
        return gen


def _split_equijoin(pred: ra.Scalar, left_ids: set[int], right_ids: set[int]):
    """Split an AND tree into hashable equi-pairs and a residual predicate."""
    conjuncts: list[ra.Scalar] = []

    def flatten(e: ra.Scalar):
        if isinstance(e, ra.Bin) and e.op == "AND":
            flatten(e.lhs)
            flatten(e.rhs)
        else:
            conjuncts.append(e)

    flatten(pred)
    pairs: list[tuple[ra.Scalar, ra.Scalar]] = []
    rest: list[ra.Scalar] = []
    for c in conjuncts:
        if isinstance(c, ra.Bin) and c.op == "=":
            lrefs = ra.referenced_col_ids(c.lhs)
            rrefs = ra.referenced_col_ids(c.rhs)
            if lrefs <= left_ids and rrefs <= right_ids:
                pairs.append((c.lhs, c.rhs))
                continue
            if lrefs <= right_ids and rrefs <= left_ids:
                pairs.append((c.rhs, c.lhs))
                continue
        rest.append(c)
    if isinstance(pred, ra.Lit) and pred.value is True:
        return [], None
    residual = None
    for c in rest:
        residual = c if residual is None else ra.Bin("AND", residual, c, BOOL)
    return pairs, residual


# aggregate accumulators: [sum, count, min, max]

def _new_acc(fn: str):
    return [None, 0, None, None]


def _acc_add(acc, fn: str, v) -> None:
    if fn == "COUNT_STAR":
        acc[1] += 1
        return
    if v is None:
        return
    acc[1] += 1
    if fn in ("SUM", "AVG"):
        acc[0] = v if acc[0] is None else acc[0] + v
    elif fn == "MIN":
        acc[2] = v if acc[2] is None else min(acc[2], v)
    elif fn == "MAX":
        acc[3] = v if acc[3] is None else max(acc[3], v)


def _acc_result(acc, fn: str):
    if fn in ("COUNT", "COUNT_STAR"):
        return acc[1]
    if fn == "SUM":
        return acc[0]
    if fn == "AVG":
        return None if acc[0] is None else acc[0] / acc[1]
    if fn == "MIN":
        return acc[2]
    return acc[3]


# --------------------------------------------------------------------------
# top-level execution


def execute(plan: ra.Plan, catalog: Catalog, metrics: ExecMetrics | None = None,
            now_date: int | None = None,
            count_rows: bool = False) -> tuple[Relation, ExecMetrics]:
    """Run a bound plan to completion; residual Udf nodes dispatch to the
    interpreter and count invocations."""
    ctx = ExecContext(catalog, metrics, now_date, count_rows)
    started = time.perf_counter()
    exec_ = PlanExec(plan, [], ctx)
    rows = [row for row in exec_.gen(())]
    ctx.metrics.wall_time = time.perf_counter() - started
    schema = Schema(tuple((c.name, c.ctype) for c in exec_.out_cols))
    return Relation(schema, rows), ctx.metrics


def execute_iterative(query: ast.Query, catalog: Catalog,
                      metrics: ExecMetrics | None = None,
                      now_date: int | None = None,
                      count_rows: bool = False) -> tuple[Relation, ExecMetrics]:
    """Baseline mode: bind without inlining, leaving UdfCall nodes intact."""
    binder = Binder(catalog, ra.IdGen())
    plan = binder.bind_query(query)
    return execute(plan, catalog, metrics, now_date, count_rows)


# --------------------------------------------------------------------------
# iterative UDF interpreter


class _AssignExpr:
    __slots__ = ("slot", "fn")

    def __init__(self, slot, fn):
        self.slot = slot
        self.fn = fn


class _AssignQuery:
    __slots__ = ("slot", "exec_", "frm", "to")

    def __init__(self, slot, exec_, frm, to):
        self.slot = slot
        self.exec_ = exec_
        self.frm = frm
        self.to = to


class _IfStmt:
    __slots__ = ("pred", "then", "orelse")

    def __init__(self, pred, then, orelse):
        self.pred = pred
        self.then = then
        self.orelse = orelse


class _ReturnStmt:
    __slots__ = ("fn",)

    def __init__(self, fn):
        self.fn = fn


# bound statement forms (catalog-level, context-free)

class _BAssign:
    __slots__ = ("slot", "expr")

    def __init__(self, slot, expr):
        self.slot = slot
        self.expr = expr  # bound Scalar or None (declare without initializer)


class _BQuery:
    __slots__ = ("slot", "plan", "frm", "to")

    def __init__(self, slot, plan, frm, to):
        self.slot = slot
        self.plan = plan
        self.frm = frm
        self.to = to


class _BIf:
    __slots__ = ("pred", "then", "orelse")

    def __init__(self, pred, then, orelse):
        self.pred = pred
        self.then = then
        self.orelse = orelse


class _BReturn:
    __slots__ = ("expr",)

    def __init__(self, expr):
        self.expr = expr


class InterpProgram:
    """A UDF body bound once per catalog and compiled once per execution
    context, so metrics, now(), and recursion depth flow to the live run.

    Variables live in a flat frame (one slot per param/variable); embedded
    queries see the frame as an outer row.
    """

    def __init__(self, udf: ast.UdfDef, catalog: Catalog):
        self.udf = udf
        self.catalog = catalog
        idgen = ra.IdGen()
        from .regions import dict_types
        types = dict_types(udf)
        self.slots: dict[str, int] = {}
        self.slot_types: list = []
        frame_cols: list[ra.OutCol] = []
        param_names = {p.lower() for p, _ in udf.params}
        ordered = [p.lower() for p, _ in udf.params] + \
            [v for v in types if v not in param_names and v != "returnval"]
        for name in ordered:
            cid = idgen.new()
            self.slots[name] = len(self.slot_types)
            self.slot_types.append(types[name])
            frame_cols.append(ra.OutCol(cid, name, types[name]))
        self.frame_layout = {c.cid: i for i, c in enumerate(frame_cols)}

        def var_resolver(name: str) -> ra.Scalar:
            slot = self.slots.get(name.lower())
            if slot is None:
                raise BindError(f"unknown variable @{name}")
            col = frame_cols[slot]
            return ra.Col(col.cid, col.ctype, col.name)

        binder = Binder(catalog, idgen, var_resolver)
        frame_scope: list[Scope] = [Scope()]

        def bind_block(stmts):
            out = []
            for stmt in stmts:
                if isinstance(stmt, ast.Declare):
                    slot = self.slots[stmt.var.lower()]
                    if stmt.init is None:
                        out.append(_BAssign(slot, None))
                    else:
                        bound = binder.coerce_assign(
                            binder.bind_expr(stmt.init, frame_scope),
                            self.slot_types[slot], f"declare @{stmt.var}")
                        out.append(_BAssign(slot, bound))
                elif isinstance(stmt, ast.Set):
                    slot = self.slots[stmt.var.lower()]
                    bound = binder.coerce_assign(
                        binder.bind_expr(stmt.expr, frame_scope),
                        self.slot_types[slot], f"set @{stmt.var}")
                    out.append(_BAssign(slot, bound))
                elif isinstance(stmt, ast.SelectAssign):
                    slot = self.slots[stmt.var.lower()]
                    query = ast.Query(((stmt.expr, stmt.var),), stmt.from_items,
                                      stmt.where)
                    plan = binder.bind_query(query, outer=frame_scope)
                    out.append(_BQuery(slot, plan, plan.out_cols()[0].ctype,
                                       self.slot_types[slot]))
                elif isinstance(stmt, ast.If):
                    pred = binder.bind_expr(stmt.pred, frame_scope)
                    if pred.ctype is not None and pred.ctype is not BOOL:
                        from .errors import TypeCheckError
                        raise TypeCheckError("IF predicate must be BOOL")
                    out.append(_BIf(pred, bind_block(stmt.then),
                                    bind_block(stmt.orelse)))
                elif isinstance(stmt, ast.Return):
                    bound = binder.coerce_assign(
                        binder.bind_expr(stmt.expr, frame_scope),
                        udf.return_type, "return value")
                    out.append(_BReturn(bound))
                else:
                    raise InternalError(f"unexpected statement {stmt!r}")
            return out

        self.bound_body = bind_block(udf.body)

    def compile_body(self, ctx: ExecContext):
        layouts = [self.frame_layout]

        def compile_block(block):
            out = []
            for stmt in block:
                if isinstance(stmt, _BAssign):
                    fn = (compile_scalar(stmt.expr, layouts, ctx)
                          if stmt.expr is not None else lambda row, outers: None)
                    out.append(_AssignExpr(stmt.slot, fn))
                elif isinstance(stmt, _BQuery):
                    out.append(_AssignQuery(stmt.slot,
                                            PlanExec(stmt.plan, layouts, ctx),
                                            stmt.frm, stmt.to))
                elif isinstance(stmt, _BIf):
                    out.append(_IfStmt(compile_scalar(stmt.pred, layouts, ctx),
                                       compile_block(stmt.then),
                                       compile_block(stmt.orelse)))
                else:
                    out.append(_ReturnStmt(compile_scalar(stmt.expr, layouts, ctx)))
            return out

        return compile_block(self.bound_body)

    def run(self, args: list, ctx: ExecContext):
        ctx.metrics.udf_invocations += 1
        if ctx.depth >= RECURSION_LIMIT:
            raise RecursionLimit(self.udf.name)
        compiled = ctx.program_bodies.get(self.udf.name.lower())
        if compiled is None:
            compiled = self.compile_body(ctx)
            ctx.program_bodies[self.udf.name.lower()] = compiled
        frame = [None] * len(self.slot_types)
        for i, v in enumerate(args):
            frame[i] = v
        ctx.depth += 1
        try:
            done, value = self._run_block(compiled, frame, ctx)
        finally:
            ctx.depth -= 1
        if not done:
            raise InternalError(f"{self.udf.name} fell off the end without RETURN")
        return value

    def _run_block(self, block, frame, ctx) -> tuple[bool, object]:
        for stmt in block:
            if isinstance(stmt, _AssignExpr):
                frame[stmt.slot] = stmt.fn(frame, ())
            elif isinstance(stmt, _AssignQuery):
                frame[stmt.slot] = self._run_assign_query(stmt, frame)
            elif isinstance(stmt, _IfStmt):
                taken = stmt.then if stmt.pred(frame, ()) is True else stmt.orelse
                done, value = self._run_block(taken, frame, ctx)
                if done:
                    return True, value
            else:  # _ReturnStmt
                return True, stmt.fn(frame, ())
        return False, None

    def _run_assign_query(self, stmt: _AssignQuery, frame):
        it = stmt.exec_.gen((frame,))
        first = next(it, _MISSING)
        if first is _MISSING:
            value = None
        else:
            if next(it, _MISSING) is not _MISSING:
                raise ScalarSubqueryCardinality(f"assignment in {self.udf.name}")
            value = first[0]
        return cast_value_typed(value, stmt.frm, stmt.to)


def get_program(catalog: Catalog, name: str) -> InterpProgram:
    key = name.lower()
    program = catalog._interp_cache.get(key)
    if program is None:
        udf = catalog.lookup_udf(name)
        program = InterpProgram(udf, catalog)
        catalog._interp_cache[key] = program
    return program


def interpret_udf(udf: ast.UdfDef, args: list, catalog: Catalog,
                  metrics: ExecMetrics | None = None,
                  now_date: int | None = None) -> tuple[object, ExecMetrics]:
    """Statement-by-statement evaluation; the differential-testing oracle."""
    ctx = ExecContext(catalog, metrics, now_date)
    if not catalog.has_udf(udf.name):
        catalog.register_udf(udf)
    formals = [t for _, t in udf.params]
    if len(args) != len(formals):
        raise BindError(f"{udf.name} takes {len(formals)} arguments, got {len(args)}")
    program = get_program(catalog, udf.name)
    value = program.run(list(args), ctx)
    return value, ctx.metrics
