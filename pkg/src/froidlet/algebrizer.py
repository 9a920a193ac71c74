"""Turns a UDF body into one relational expression.

Each region becomes a single-tuple derived table (ConstantScan plus computed
columns) whose projection is the region's write-set; consecutive regions are
chained with outer Apply. Early returns materialize a return-tracking column
per returning region, downstream Apply seams carry a pass-through predicate
over it, and the final projection coalesces returnVal across the seams.

`mutation` enables deliberately-broken variants used by the differential
fuzzer to prove it can catch rewrite bugs; never set it outside tests.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import algebra as ra
from .binder import Binder, Scope
from .catalog import Catalog
from .errors import InternalError
from .frontend import ast
from .regions import RETURN_VAL, Region, RegionKind, build_regions, dict_types
from .values import BOOL, ColumnType


@dataclass
class DerivedTable:
    plan: ra.Plan
    exports: dict[str, ra.OutCol]      # projected write-set columns by var
    ra_col: ra.OutCol | None           # return-tracking column, if materialized
    rv_col: ra.OutCol | None           # projected returnVal column, if any


@dataclass
class SequenceResult:
    plan: ra.Plan
    env: dict[str, ra.OutCol]
    returning: list[tuple[ra.OutCol, ra.OutCol]]  # (ra_col, rv_col) per region


def check_algebrizable(udf: ast.UdfDef, catalog: Catalog) -> tuple[bool, str | None]:
    """The frontend already rejects unsupported constructs, so the only
    remaining blocker is (transitive) non-determinism."""
    if udf.calls_nondeterministic or catalog.udf_is_nondeterministic(udf.name):
        return False, "non-deterministic intrinsic"
    for callee in udf.called_udfs:
        if catalog.has_udf(callee) and catalog.udf_is_nondeterministic(callee):
            return False, "non-deterministic intrinsic"
    return True, None


class Algebrizer:
    def __init__(self, catalog: Catalog, idgen: ra.IdGen | None = None,
                 mutation: str | None = None):
        self.catalog = catalog
        self.idgen = idgen if idgen is not None else ra.IdGen()
        self.mutation = mutation
        self._env: dict[str, ra.Scalar] = {}
        self._var_types: dict[str, ColumnType] = {}
        self._dt_counter = 0
        self._pred_counter = 0
        self._multi_return = False
        self._return_type: ColumnType | None = None
        self.binder = Binder(catalog, self.idgen, self._resolve_var)

    # -- variable environment --

    def _resolve_var(self, name: str) -> ra.Scalar:
        scalar = self._env.get(name.lower())
        if scalar is None:
            raise InternalError(f"variable @{name} has no definition in scope")
        return scalar

    def _bind(self, e: ast.Expr) -> ra.Scalar:
        return self.binder.bind_expr(e, [Scope()])

    # -- statements --

    def algebrize_statement(self, stmt: ast.Stmt) -> list[tuple[str, ra.Scalar]]:
        """One (column name, expression) pair per assignment; Return yields
        the implicit returnVal assignment."""
        if isinstance(stmt, ast.Declare):
            ctype = self._var_types[stmt.var.lower()]
            if stmt.init is None:
                return [(stmt.var.lower(), ra.Lit(None, ctype))]
            bound = self.binder.coerce_assign(self._bind(stmt.init), ctype,
                                              f"declare @{stmt.var}")
            return [(stmt.var.lower(), bound)]
        if isinstance(stmt, ast.Set):
            ctype = self._var_types[stmt.var.lower()]
            bound = self.binder.coerce_assign(self._bind(stmt.expr), ctype,
                                              f"set @{stmt.var}")
            return [(stmt.var.lower(), bound)]
        if isinstance(stmt, ast.SelectAssign):
            ctype = self._var_types[stmt.var.lower()]
            query = ast.Query(((stmt.expr, stmt.var),), stmt.from_items, stmt.where)
            plan = self.binder.bind_query(query, outer=[])
            subq = ra.Subq(plan)
            bound = self.binder.coerce_assign(subq, ctype, f"select @{stmt.var}")
            return [(stmt.var.lower(), bound)]
        if isinstance(stmt, ast.Return):
            bound = self.binder.coerce_assign(self._bind(stmt.expr),
                                              self._return_type, "return value")
            return [(RETURN_VAL, bound)]
        raise InternalError(f"unexpected statement at algebrization: {stmt!r}")

    # -- regions --

    def algebrize_udf(self, udf: ast.UdfDef,
                      param_scalars: dict[str, ra.Scalar] | None = None) -> ra.Plan:
        """Left-deep Apply chain over region derived tables, projected down
        to the single returnVal column."""
        root = build_regions(udf)
        self._var_types = dict_types(udf)
        self._return_type = udf.return_type
        self._dt_counter = 0
        self._pred_counter = 0
        self._multi_return = _count_returns(udf.body) > 1
        self._env = {}
        for pname, ptype in udf.params:
            if param_scalars is not None:
                self._env[pname.lower()] = param_scalars[pname.lower()]
            else:
                self._env[pname.lower()] = ra.Param(pname.lower(), ptype)

        seq = self._compose_sequence(list(root.children))
        rv = self._coalesce_return(seq)
        if isinstance(rv, ra.Col):
            return ra.Project(seq.plan, [("returnVal", rv.cid)])
        cid = self.idgen.new()
        top = ra.ComputeScalar(seq.plan, [(cid, "returnVal", rv)])
        return ra.Project(top, [("returnVal", cid)])

    def _coalesce_return(self, seq: SequenceResult) -> ra.Scalar:
        if not seq.returning:
            raise InternalError("no region writes returnVal")
        *early, (last_ra, last_rv) = seq.returning
        last = ra.Col(last_rv.cid, last_rv.ctype, last_rv.name)
        if not early:
            return last
        branches = [(ra.Col(ra_col.cid, BOOL, ra_col.name),
                     ra.Col(rv_col.cid, rv_col.ctype, rv_col.name))
                    for ra_col, rv_col in early]
        return ra.CaseE(branches, last, self._return_type)

    def _compose_sequence(self, regions: list[Region]) -> SequenceResult:
        plan: ra.Plan | None = None
        returning: list[tuple[ra.OutCol, ra.OutCol]] = []
        for region in regions:
            pass_through = self._cumulative_return(returning)
            dt = self._algebrize_region(region)
            if plan is None:
                plan = dt.plan
            else:
                if self.mutation == "drop_pass_through":
                    pass_through = None
                plan = ra.Apply(plan, dt.plan, ra.LEFT_OUTER,
                                pass_through=pass_through)
            for var, col in dt.exports.items():
                self._env[var] = ra.Col(col.cid, col.ctype, col.name)
            if dt.rv_col is not None:
                if dt.ra_col is not None:
                    returning.append((dt.ra_col, dt.rv_col))
                else:
                    # single-return function: the sole returning region
                    always = ra.OutCol(dt.rv_col.cid, dt.rv_col.name, dt.rv_col.ctype)
                    returning.append((always, dt.rv_col))
        if plan is None:
            raise InternalError("empty region sequence")
        return SequenceResult(plan, dict(self._env), returning)

    @staticmethod
    def _cumulative_return(returning) -> ra.Scalar | None:
        """TRUE once any earlier region has assigned returnVal."""
        expr: ra.Scalar | None = None
        for ra_col, _ in returning:
            ref = ra.Col(ra_col.cid, BOOL, ra_col.name)
            expr = ref if expr is None else ra.Bin("OR", expr, ref, BOOL)
        return expr

    def algebrize_region(self, region: Region) -> ra.Plan:
        return self._algebrize_region(region).plan

    def _algebrize_region(self, region: Region) -> DerivedTable:
        if region.kind is RegionKind.BASIC:
            return self._algebrize_basic(region)
        if region.kind is RegionKind.CONDITIONAL:
            return self._algebrize_conditional(region)
        # a sequential region nested inside a branch: compose, then expose
        saved_env = dict(self._env)
        seq = self._compose_sequence(list(region.children))
        self._env = saved_env
        exports: dict[str, ra.OutCol] = {}
        for var, _ in region.write_set:
            col = seq.env.get(var)
            if col is not None and isinstance(col, ra.Col):
                exports[var] = ra.OutCol(col.cid, col.name, col.ctype)
        rv_col = exports.get(RETURN_VAL)
        ra_col = None
        if seq.returning and self._multi_return:
            # fold the nested coalesce into single exported columns
            rv_expr = self._coalesce_return(seq)
            ra_expr = self._cumulative_return(seq.returning)
            rv_cid = self.idgen.new()
            ra_cid = self.idgen.new()
            top = ra.ComputeScalar(seq.plan, [
                (rv_cid, "returnval", rv_expr),
                (ra_cid, "return_assigned", ra_expr),
            ])
            items = [(c.name, c.cid) for v, c in exports.items() if v != RETURN_VAL]
            items.append(("returnval", rv_cid))
            items.append(("return_assigned", ra_cid))
            plan = ra.Project(top, items)
            rv_col = ra.OutCol(rv_cid, "returnval", self._return_type)
            ra_col = ra.OutCol(ra_cid, "return_assigned", BOOL)
            exports[RETURN_VAL] = rv_col
            return DerivedTable(plan, exports, ra_col, rv_col)
        return DerivedTable(seq.plan, exports, None, rv_col)

    def _next_label(self) -> str:
        self._dt_counter += 1
        return f"DT{self._dt_counter}"

    def _algebrize_basic(self, region: Region) -> DerivedTable:
        label = self._next_label()
        computed: list[tuple[int, str, ra.Scalar]] = []
        local: dict[str, ra.OutCol] = {}
        seen_subq: dict[str, int] = {}
        returned = False
        saved_env = dict(self._env)
        for stmt in region.stmts:
            for var, expr in self.algebrize_statement(stmt):
                # identical scalar-subquery expressions share one column
                key = None
                if isinstance(expr, ra.Subq) or (isinstance(expr, ra.CastE)
                                                 and isinstance(expr.operand, ra.Subq)):
                    key = ra.print_scalar(expr)
                if key is not None and key in seen_subq:
                    cid = seen_subq[key]
                    prior = next(c for c in computed if c[0] == cid)
                    col = ra.OutCol(cid, prior[1], prior[2].ctype)
                else:
                    cid = self.idgen.new()
                    name = f"{var}_{len(computed)}"
                    computed.append((cid, name, expr))
                    col = ra.OutCol(cid, name, expr.ctype or self._var_types.get(var))
                    if key is not None:
                        seen_subq[key] = cid
                local[var] = col
                self._env[var] = ra.Col(col.cid, col.ctype, col.name)
                if var == RETURN_VAL:
                    returned = True
        self._env = saved_env
        plan: ra.Plan = ra.ComputeScalar(ra.ConstantScan(), computed)
        exports: dict[str, ra.OutCol] = {}
        items: list[tuple[str, int]] = []
        for var, ctype in region.write_set:
            col = local[var]
            out_name = "returnVal" if var == RETURN_VAL else var
            items.append((out_name, col.cid))
            exports[var] = ra.OutCol(col.cid, out_name, col.ctype)
        ra_col = None
        if returned and self._multi_return:
            ra_cid = self.idgen.new()
            plan = ra.ComputeScalar(plan, [(ra_cid, "return_assigned",
                                            ra.Lit(True, BOOL))])
            items.append(("return_assigned", ra_cid))
            ra_col = ra.OutCol(ra_cid, "return_assigned", BOOL)
        out = ra.Project(plan, items, label=label)
        return DerivedTable(out, exports, ra_col, exports.get(RETURN_VAL))

    def _algebrize_conditional(self, region: Region) -> DerivedTable:
        label = self._next_label()
        pred = self._bind(region.pred)
        self._pred_counter += 1
        pred_cid = self.idgen.new()
        pred_name = f"pred_val_{self._pred_counter}"
        pred_col = ra.Col(pred_cid, BOOL, pred_name)

        simple_true = region.true_region.kind is RegionKind.BASIC
        simple_false = (region.false_region is None
                        or region.false_region.kind is RegionKind.BASIC)

        if simple_true and simple_false:
            return self._conditional_scalar(region, label, pred, pred_cid,
                                            pred_name, pred_col)
        return self._conditional_apply(region, label, pred, pred_cid,
                                       pred_name, pred_col)

    def _conditional_scalar(self, region: Region, label: str, pred: ra.Scalar,
                            pred_cid: int, pred_name: str,
                            pred_col: ra.Col) -> DerivedTable:
        """Both branches are straight-line: one derived table, with branch
        computations guarded by CASE so untaken work is never evaluated."""
        computed: list[tuple[int, str, ra.Scalar]] = [(pred_cid, pred_name, pred)]
        saved_env = dict(self._env)

        def run_branch(branch: Region | None, taken_when_true: bool):
            local: dict[str, ra.Scalar] = {}
            returned = False
            if branch is None:
                return local, returned
            self._env = dict(saved_env)
            for stmt in branch.stmts:
                for var, expr in self.algebrize_statement(stmt):
                    if taken_when_true:
                        guarded = ra.CaseE([(pred_col, expr)], None, expr.ctype)
                    else:
                        guarded = ra.CaseE([(pred_col, ra.Lit(None, expr.ctype))],
                                           expr, expr.ctype)
                    cid = self.idgen.new()
                    name = f"{'t' if taken_when_true else 'f'}_{var}_{len(computed)}"
                    computed.append((cid, name, guarded))
                    ref = ra.Col(cid, guarded.ctype or self._var_types.get(var), name)
                    local[var] = ref
                    self._env[var] = ref
                    if var == RETURN_VAL:
                        returned = True
            return local, returned

        true_vals, true_returns = run_branch(region.true_region, True)
        false_vals, false_returns = run_branch(region.false_region, False)
        self._env = saved_env

        merged: list[tuple[int, str, ra.Scalar]] = []
        exports: dict[str, ra.OutCol] = {}
        items: list[tuple[str, int]] = []
        for var, ctype in region.write_set:
            prior = self._env.get(var)
            fallback = prior if prior is not None else ra.Lit(None, ctype)
            t_val = true_vals.get(var, fallback)
            f_val = false_vals.get(var, fallback)
            if self.mutation == "flip_case_arms":
                t_val, f_val = f_val, t_val
            expr = ra.CaseE([(pred_col, t_val)], f_val, ctype)
            cid = self.idgen.new()
            out_name = "returnVal" if var == RETURN_VAL else var
            merged.append((cid, out_name, expr))
            items.append((out_name, cid))
            exports[var] = ra.OutCol(cid, out_name, ctype)
        ra_col = None
        if (true_returns or false_returns) and self._multi_return:
            t_ra: ra.Scalar = ra.Lit(true_returns, BOOL)
            f_ra: ra.Scalar = ra.Lit(false_returns, BOOL)
            ra_cid = self.idgen.new()
            merged.append((ra_cid, "return_assigned",
                           ra.CaseE([(pred_col, t_ra)], f_ra, BOOL)))
            items.append(("return_assigned", ra_cid))
            ra_col = ra.OutCol(ra_cid, "return_assigned", BOOL)
        plan = ra.ComputeScalar(ra.ConstantScan(), computed)
        plan = ra.ComputeScalar(plan, merged)
        out = ra.Project(plan, items, label=label)
        return DerivedTable(out, exports, ra_col, exports.get(RETURN_VAL))

    def _conditional_apply(self, region: Region, label: str, pred: ra.Scalar,
                           pred_cid: int, pred_name: str,
                           pred_col: ra.Col) -> DerivedTable:
        """A branch contains sub-regions: algebrize each branch recursively
        and gate its evaluation with Apply pass-through."""
        base: ra.Plan = ra.ComputeScalar(ra.ConstantScan(),
                                         [(pred_cid, pred_name, pred)])
        saved_env = dict(self._env)

        def branch_result(branch: Region | None):
            if branch is None:
                return None
            self._env = dict(saved_env)
            if branch.kind is RegionKind.SEQUENTIAL:
                seq = self._compose_sequence(list(branch.children))
            else:
                seq = self._compose_sequence([branch])
            self._env = saved_env
            return seq

        true_seq = branch_result(region.true_region)
        false_seq = branch_result(region.false_region)

        plan = base
        skip_true = ra.Bin("OR", ra.IsNullE(pred_col), ra.NotE(pred_col), BOOL)
        if self.mutation == "drop_pass_through":
            plan = ra.Apply(plan, true_seq.plan, ra.LEFT_OUTER)
        else:
            plan = ra.Apply(plan, true_seq.plan, ra.LEFT_OUTER,
                            pass_through=skip_true)
        if false_seq is not None:
            skip_false: ra.Scalar | None = pred_col
            if self.mutation == "drop_pass_through":
                skip_false = None
            plan = ra.Apply(plan, false_seq.plan, ra.LEFT_OUTER,
                            pass_through=skip_false)

        merged: list[tuple[int, str, ra.Scalar]] = []
        exports: dict[str, ra.OutCol] = {}
        items: list[tuple[str, int]] = []

        def branch_value(seq: SequenceResult | None, var: str, fallback: ra.Scalar):
            if seq is None:
                return fallback
            col = seq.env.get(var)
            if col is None:
                return fallback
            return col if isinstance(col, ra.Col) else fallback

        for var, ctype in region.write_set:
            prior = self._env.get(var)
            fallback = prior if prior is not None else ra.Lit(None, ctype)
            if var == RETURN_VAL:
                t_val = (self._coalesce_return(true_seq)
                         if true_seq and true_seq.returning else fallback)
                f_val = (self._coalesce_return(false_seq)
                         if false_seq and false_seq.returning else fallback)
            else:
                t_val = branch_value(true_seq, var, fallback)
                f_val = branch_value(false_seq, var, fallback)
            if self.mutation == "flip_case_arms":
                t_val, f_val = f_val, t_val
            expr = ra.CaseE([(pred_col, t_val)], f_val, ctype)
            cid = self.idgen.new()
            out_name = "returnVal" if var == RETURN_VAL else var
            merged.append((cid, out_name, expr))
            items.append((out_name, cid))
            exports[var] = ra.OutCol(cid, out_name, ctype)
        ra_col = None
        if region.writes_return and self._multi_return:
            t_ra = (self._cumulative_return(true_seq.returning)
                    if true_seq and true_seq.returning else ra.Lit(False, BOOL))
            f_ra = (self._cumulative_return(false_seq.returning)
                    if false_seq and false_seq.returning else ra.Lit(False, BOOL))
            ra_cid = self.idgen.new()
            merged.append((ra_cid, "return_assigned",
                           ra.CaseE([(pred_col, t_ra)], f_ra, BOOL)))
            items.append(("return_assigned", ra_cid))
            ra_col = ra.OutCol(ra_cid, "return_assigned", BOOL)
        plan = ra.ComputeScalar(plan, merged)
        out = ra.Project(plan, items, label=label)
        return DerivedTable(out, exports, ra_col, exports.get(RETURN_VAL))


def _count_returns(stmts) -> int:
    n = 0
    for stmt in stmts:
        if isinstance(stmt, ast.Return):
            n += 1
        elif isinstance(stmt, ast.If):
            n += _count_returns(stmt.then) + _count_returns(stmt.orelse)
    return n


def algebrize_udf(udf: ast.UdfDef, catalog: Catalog,
                  idgen: ra.IdGen | None = None,
                  param_scalars: dict[str, ra.Scalar] | None = None,
                  mutation: str | None = None) -> ra.Plan:
    return Algebrizer(catalog, idgen, mutation).algebrize_udf(udf, param_scalars)
