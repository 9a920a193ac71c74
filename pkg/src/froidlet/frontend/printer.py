"""AST pretty-printer; parse(print_*(ast)) reconstructs an equal AST."""

from __future__ import annotations

from ..values import BOOL, DATE, FLOAT64, INT64, STRING, ColumnType
from . import ast

_TYPE_NAMES = {INT64: "int", FLOAT64: "float", STRING: "varchar",
               DATE: "date", BOOL: "bool"}


def type_name(t: ColumnType) -> str:
    return _TYPE_NAMES[t]


def _quote(s: str) -> str:
    return "'" + s.replace("'", "''") + "'"


def print_expr(e: ast.Expr) -> str:
    if isinstance(e, ast.Literal):
        v = e.value
        if v is None:
            return "null"
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return repr(v)
        if isinstance(v, str):
            return _quote(v)
        return str(v)
    if isinstance(e, ast.ColumnRef):
        return f"{e.qualifier}.{e.name}" if e.qualifier else e.name
    if isinstance(e, ast.VarRef):
        return f"@{e.name}"
    if isinstance(e, ast.BinaryOp):
        op = e.op.lower() if e.op in ("AND", "OR") else e.op
        return f"({print_expr(e.lhs)} {op} {print_expr(e.rhs)})"
    if isinstance(e, ast.Not):
        if isinstance(e.operand, ast.IsNull):
            return f"({print_expr(e.operand.operand)} is not null)"
        return f"(not {print_expr(e.operand)})"
    if isinstance(e, ast.IsNull):
        return f"({print_expr(e.operand)} is null)"
    if isinstance(e, ast.Case):
        parts = ["case"]
        for when, then in e.branches:
            parts.append(f"when {print_expr(when)} then {print_expr(then)}")
        if e.otherwise is not None:
            parts.append(f"else {print_expr(e.otherwise)}")
        parts.append("end")
        return "(" + " ".join(parts) + ")"
    if isinstance(e, ast.Cast):
        return f"cast({print_expr(e.operand)} as {type_name(e.to)})"
    if isinstance(e, ast.IntrinsicCall):
        return f"{e.name}({', '.join(print_expr(a) for a in e.args)})"
    if isinstance(e, ast.UdfCall):
        return f"{e.name}({', '.join(print_expr(a) for a in e.args)})"
    if isinstance(e, ast.AggCall):
        if e.fn == "COUNT_STAR":
            return "count(*)"
        return f"{e.fn.lower()}({print_expr(e.arg)})"
    if isinstance(e, ast.ScalarSubquery):
        return f"({print_query(e.query)})"
    if isinstance(e, ast.Exists):
        return f"exists ({print_query(e.query)})"
    if isinstance(e, ast.InList):
        items = ", ".join(print_expr(i) for i in e.items)
        return f"({print_expr(e.operand)} in ({items}))"
    if isinstance(e, ast.Like):
        return f"({print_expr(e.operand)} like {_quote(e.pattern)})"
    if isinstance(e, ast.Between):
        return (f"({print_expr(e.operand)} between {print_expr(e.lo)}"
                f" and {print_expr(e.hi)})")
    raise TypeError(f"cannot print {e!r}")


def print_query(q: ast.Query) -> str:
    parts = ["select"]
    if q.limit is not None:
        parts.append(f"top {q.limit}")
    items = []
    for expr, alias in q.select:
        items.append(print_expr(expr) + (f" as {alias}" if alias else ""))
    parts.append(", ".join(items))
    if q.from_items:
        froms = []
        for i, f in enumerate(q.from_items):
            piece = f.table + (f" as {f.alias}" if f.alias else "")
            if f.on is not None:
                froms.append(f"join {piece} on {print_expr(f.on)}")
            elif i == 0:
                froms.append(piece)
            else:
                froms.append(f", {piece}")
        parts.append("from " + " ".join(froms))
    if q.where is not None:
        parts.append("where " + print_expr(q.where))
    if q.group_by:
        parts.append("group by " + ", ".join(print_expr(g) for g in q.group_by))
    if q.having is not None:
        parts.append("having " + print_expr(q.having))
    if q.order_by:
        keys = [print_expr(k) + ("" if asc else " desc") for k, asc in q.order_by]
        parts.append("order by " + ", ".join(keys))
    return " ".join(parts)


def print_stmt(stmt: ast.Stmt, indent: str = "    ") -> list[str]:
    if isinstance(stmt, ast.Declare):
        line = f"declare @{stmt.var} {type_name(stmt.ctype)}"
        if stmt.init is not None:
            line += f" = {print_expr(stmt.init)}"
        return [indent + line + ";"]
    if isinstance(stmt, ast.Set):
        return [indent + f"set @{stmt.var} = {print_expr(stmt.expr)};"]
    if isinstance(stmt, ast.SelectAssign):
        line = f"select @{stmt.var} = {print_expr(stmt.expr)}"
        if stmt.from_items:
            froms = []
            for i, f in enumerate(stmt.from_items):
                piece = f.table + (f" as {f.alias}" if f.alias else "")
                if f.on is not None:
                    froms.append(f"join {piece} on {print_expr(f.on)}")
                elif i == 0:
                    froms.append(piece)
                else:
                    froms.append(f", {piece}")
            line += " from " + " ".join(froms)
        if stmt.where is not None:
            line += " where " + print_expr(stmt.where)
        return [indent + line + ";"]
    if isinstance(stmt, ast.If):
        lines = [indent + f"if {print_expr(stmt.pred)}", indent + "begin"]
        for s in stmt.then:
            lines += print_stmt(s, indent + "    ")
        lines.append(indent + "end")
        if stmt.orelse:
            lines.append(indent + "else")
            lines.append(indent + "begin")
            for s in stmt.orelse:
                lines += print_stmt(s, indent + "    ")
            lines.append(indent + "end")
        return lines
    if isinstance(stmt, ast.Return):
        return [indent + f"return {print_expr(stmt.expr)};"]
    raise TypeError(f"cannot print {stmt!r}")


def print_udf(udf: ast.UdfDef) -> str:
    params = ", ".join(f"@{n} {type_name(t)}" for n, t in udf.params)
    lines = [f"create function {udf.name}({params})",
             f"returns {type_name(udf.return_type)} as",
             "begin"]
    for stmt in udf.body:
        lines += print_stmt(stmt)
    lines.append("end")
    return "\n".join(lines)
