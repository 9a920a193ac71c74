"""Recursive-descent parser for queries and CREATE FUNCTION bodies."""

from __future__ import annotations

from ..errors import (MissingReturnPath, SqlSyntaxError, UnsupportedConstruct,
                      UseBeforeDeclare)
from ..values import BOOL, DATE, FLOAT64, INT64, STRING, ColumnType
from . import ast
from .lexer import Token, tokenize

TYPE_KEYWORDS = {
    "INT": INT64, "BIGINT": INT64, "SMALLINT": INT64, "INTEGER": INT64,
    "INT64": INT64, "BIT": INT64,
    "FLOAT": FLOAT64, "REAL": FLOAT64, "DOUBLE": FLOAT64, "DECIMAL": FLOAT64,
    "NUMERIC": FLOAT64, "MONEY": FLOAT64, "FLOAT64": FLOAT64,
    "CHAR": STRING, "VARCHAR": STRING, "NCHAR": STRING, "NVARCHAR": STRING,
    "TEXT": STRING, "STRING": STRING,
    "DATE": DATE, "DATETIME": DATE,
    "BOOL": BOOL, "BOOLEAN": BOOL,
}

PARAMETRIC_TYPES = {"CHAR", "VARCHAR", "NCHAR", "NVARCHAR", "DECIMAL", "NUMERIC"}

AGGREGATES = {"SUM", "AVG", "MIN", "MAX", "COUNT"}

INTRINSICS = {"DATEADD", "DATEPART", "SUBSTRING", "LEN", "FLOOR", "ABS",
              "NOW", "GETDATE", "ISNULL"}

NONDETERMINISTIC_INTRINSICS = {"NOW", "GETDATE"}

DATE_UNIT_INTRINSICS = {"DATEADD", "DATEPART"}

UNSUPPORTED_STATEMENTS = {"WHILE", "INSERT", "UPDATE", "DELETE", "GOTO",
                          "EXEC", "EXECUTE", "PRINT", "THROW", "BREAK",
                          "CONTINUE", "FETCH", "OPEN", "CLOSE", "DEALLOCATE",
                          "TRY", "MERGE", "WAITFOR"}

RESERVED = {"SELECT", "FROM", "WHERE", "GROUP", "HAVING", "ORDER", "BY", "TOP",
            "AND", "OR", "NOT", "NULL", "TRUE", "FALSE", "CASE", "WHEN", "THEN",
            "ELSE", "END", "CAST", "CONVERT", "EXISTS", "IN", "LIKE", "BETWEEN",
            "IS", "AS", "JOIN", "INNER", "ON", "ASC", "DESC", "BEGIN", "IF",
            "RETURN", "RETURNS", "DECLARE", "SET", "CREATE", "FUNCTION"}


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    # -- token helpers --

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at_kw(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "IDENT" and tok.upper in words

    def take_kw(self, *words: str) -> bool:
        if self.at_kw(*words):
            self.next()
            return True
        return False

    def expect_kw(self, word: str) -> Token:
        tok = self.peek()
        if tok.kind != "IDENT" or tok.upper != word:
            raise SqlSyntaxError(f"expected {word}, found {tok.text or 'end of input'!r}",
                                 tok.line, tok.col)
        return self.next()

    def at_sym(self, *syms: str) -> bool:
        tok = self.peek()
        return tok.kind == "SYM" and tok.text in syms

    def take_sym(self, *syms: str) -> bool:
        if self.at_sym(*syms):
            self.next()
            return True
        return False

    def expect_sym(self, sym: str) -> Token:
        tok = self.peek()
        if tok.kind != "SYM" or tok.text != sym:
            raise SqlSyntaxError(f"expected {sym!r}, found {tok.text or 'end of input'!r}",
                                 tok.line, tok.col)
        return self.next()

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise SqlSyntaxError(f"expected {what}, found {tok.text or 'end of input'!r}",
                                 tok.line, tok.col)
        if tok.upper in RESERVED:
            raise SqlSyntaxError(f"expected {what}, found keyword {tok.text!r}",
                                 tok.line, tok.col)
        return self.next()

    # -- types --

    def parse_type(self) -> ColumnType:
        tok = self.peek()
        if tok.kind == "IDENT" and tok.upper == "CURSOR":
            raise UnsupportedConstruct("CURSOR", tok.line, tok.col)
        if tok.kind != "IDENT" or tok.upper not in TYPE_KEYWORDS:
            raise SqlSyntaxError(f"expected a type name, found {tok.text!r}",
                                 tok.line, tok.col)
        self.next()
        ctype = TYPE_KEYWORDS[tok.upper]
        if tok.upper in PARAMETRIC_TYPES and self.take_sym("("):
            self.expect_number()
            if self.take_sym(","):
                self.expect_number()
            self.expect_sym(")")
        return ctype

    def expect_number(self) -> Token:
        tok = self.peek()
        if tok.kind != "NUMBER":
            raise SqlSyntaxError(f"expected number, found {tok.text!r}", tok.line, tok.col)
        return self.next()

    # -- expressions --

    def parse_expr(self) -> ast.Expr:
        return self.parse_or()

    def parse_or(self) -> ast.Expr:
        left = self.parse_and()
        while self.at_kw("OR"):
            self.next()
            left = ast.BinaryOp("OR", left, self.parse_and())
        return left

    def parse_and(self) -> ast.Expr:
        left = self.parse_not()
        while self.at_kw("AND"):
            self.next()
            left = ast.BinaryOp("AND", left, self.parse_not())
        return left

    def parse_not(self) -> ast.Expr:
        if self.at_kw("NOT") and not (self.peek(1).kind == "IDENT"
                                      and self.peek(1).upper == "EXISTS"):
            self.next()
            return ast.Not(self.parse_not())
        return self.parse_predicate()

    def parse_predicate(self) -> ast.Expr:
        if self.at_kw("NOT") and self.peek(1).upper == "EXISTS":
            self.next()
            return ast.Not(self.parse_predicate())
        if self.at_kw("EXISTS"):
            self.next()
            self.expect_sym("(")
            q = self.parse_query_body()
            self.expect_sym(")")
            return ast.Exists(q)
        left = self.parse_additive()
        tok = self.peek()
        if tok.kind == "SYM" and tok.text in ("=", "<>", "<", "<=", ">", ">="):
            self.next()
            return ast.BinaryOp(tok.text, left, self.parse_additive())
        if self.at_kw("IS"):
            self.next()
            negated = self.take_kw("NOT")
            self.expect_kw("NULL")
            node = ast.IsNull(left)
            return ast.Not(node) if negated else node
        negated = False
        if self.at_kw("NOT") and self.peek(1).upper in ("IN", "LIKE", "BETWEEN"):
            self.next()
            negated = True
        if self.take_kw("IN"):
            self.expect_sym("(")
            items = [self.parse_literal_item()]
            while self.take_sym(","):
                items.append(self.parse_literal_item())
            self.expect_sym(")")
            node: ast.Expr = ast.InList(left, tuple(items))
        elif self.take_kw("LIKE"):
            tok = self.peek()
            if tok.kind != "STRING":
                raise SqlSyntaxError("LIKE pattern must be a string literal",
                                     tok.line, tok.col)
            self.next()
            node = ast.Like(left, tok.text)
        elif self.take_kw("BETWEEN"):
            lo = self.parse_additive()
            self.expect_kw("AND")
            hi = self.parse_additive()
            node = ast.Between(left, lo, hi)
        else:
            if negated:
                tok = self.peek()
                raise SqlSyntaxError("expected IN, LIKE or BETWEEN after NOT",
                                     tok.line, tok.col)
            return left
        return ast.Not(node) if negated else node

    def parse_literal_item(self) -> ast.Expr:
        e = self.parse_unary()
        if not isinstance(e, ast.Literal):
            tok = self.peek()
            raise SqlSyntaxError("IN list items must be literals", tok.line, tok.col)
        return e

    def parse_additive(self) -> ast.Expr:
        left = self.parse_multiplicative()
        while self.at_sym("+", "-"):
            op = self.next().text
            left = ast.BinaryOp(op, left, self.parse_multiplicative())
        return left

    def parse_multiplicative(self) -> ast.Expr:
        left = self.parse_unary()
        while self.at_sym("*", "/"):
            op = self.next().text
            left = ast.BinaryOp(op, left, self.parse_unary())
        return left

    def parse_unary(self) -> ast.Expr:
        if self.take_sym("-"):
            operand = self.parse_unary()
            if isinstance(operand, ast.Literal) and isinstance(operand.value, (int, float)) \
                    and not isinstance(operand.value, bool):
                return ast.Literal(-operand.value)
            return ast.BinaryOp("-", ast.Literal(0), operand)
        return self.parse_primary()

    def parse_primary(self) -> ast.Expr:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.next()
            text = tok.text
            if "." in text or "e" in text or "E" in text:
                return ast.Literal(float(text))
            return ast.Literal(int(text))
        if tok.kind == "STRING":
            self.next()
            return ast.Literal(tok.text)
        if tok.kind == "VAR":
            self.next()
            return ast.VarRef(tok.text)
        if tok.kind == "SYM" and tok.text == "(":
            self.next()
            if self.at_kw("SELECT"):
                q = self.parse_query_body()
                self.expect_sym(")")
                return ast.ScalarSubquery(q)
            e = self.parse_expr()
            self.expect_sym(")")
            return e
        if tok.kind == "IDENT":
            word = tok.upper
            if word == "NULL":
                self.next()
                return ast.Literal(None)
            if word == "TRUE":
                self.next()
                return ast.Literal(True)
            if word == "FALSE":
                self.next()
                return ast.Literal(False)
            if word == "CASE":
                return self.parse_case()
            if word == "CAST":
                self.next()
                self.expect_sym("(")
                e = self.parse_expr()
                self.expect_kw("AS")
                ctype = self.parse_type()
                self.expect_sym(")")
                return ast.Cast(e, ctype)
            if word == "CONVERT":
                self.next()
                self.expect_sym("(")
                ctype = self.parse_type()
                self.expect_sym(",")
                e = self.parse_expr()
                self.expect_sym(")")
                return ast.Cast(e, ctype)
            if word == "EXISTS":
                return self.parse_predicate()
            if self.peek(1).kind == "SYM" and self.peek(1).text == "(":
                return self.parse_call()
            # column reference, possibly qualified
            name = self.expect_ident("column name")
            if self.at_sym(".") :
                self.next()
                col = self.expect_ident("column name")
                return ast.ColumnRef(col.text, name.text)
            return ast.ColumnRef(name.text)
        raise SqlSyntaxError(f"expected an expression, found {tok.text or 'end of input'!r}",
                             tok.line, tok.col)

    def parse_case(self) -> ast.Expr:
        self.expect_kw("CASE")
        branches = []
        while self.take_kw("WHEN"):
            when = self.parse_expr()
            self.expect_kw("THEN")
            then = self.parse_expr()
            branches.append((when, then))
        if not branches:
            tok = self.peek()
            raise SqlSyntaxError("CASE requires at least one WHEN branch",
                                 tok.line, tok.col)
        otherwise = None
        if self.take_kw("ELSE"):
            otherwise = self.parse_expr()
        self.expect_kw("END")
        return ast.Case(tuple(branches), otherwise)

    def parse_call(self) -> ast.Expr:
        name_tok = self.next()
        name = name_tok.text
        upper = name_tok.upper
        self.expect_sym("(")
        if upper == "COUNT" and self.at_sym("*"):
            self.next()
            self.expect_sym(")")
            return ast.AggCall("COUNT_STAR", None)
        args: list[ast.Expr] = []
        if not self.at_sym(")"):
            if upper in DATE_UNIT_INTRINSICS and self.peek().kind == "IDENT" \
                    and self.peek().upper not in RESERVED \
                    and self.peek(1).kind == "SYM" and self.peek(1).text == ",":
                args.append(ast.Literal(self.next().text.lower()))
            else:
                args.append(self.parse_expr())
            while self.take_sym(","):
                args.append(self.parse_expr())
        self.expect_sym(")")
        if upper in AGGREGATES:
            if len(args) != 1:
                raise SqlSyntaxError(f"{upper} takes exactly one argument",
                                     name_tok.line, name_tok.col)
            return ast.AggCall(upper, args[0])
        if upper in INTRINSICS:
            return ast.IntrinsicCall(upper.lower(), tuple(args))
        return ast.UdfCall(name, tuple(args))

    # -- queries --

    def parse_query_body(self) -> ast.Query:
        self.expect_kw("SELECT")
        limit = None
        if self.take_kw("TOP"):
            limit = int(self.expect_number().text)
        items = [self.parse_select_item()]
        while self.take_sym(","):
            items.append(self.parse_select_item())
        from_items: tuple[ast.FromClause, ...] = ()
        if self.take_kw("FROM"):
            from_items = self.parse_from_list()
        where = self.parse_expr() if self.take_kw("WHERE") else None
        group_by: tuple[ast.Expr, ...] = ()
        if self.at_kw("GROUP"):
            self.next()
            self.expect_kw("BY")
            exprs = [self.parse_expr()]
            while self.take_sym(","):
                exprs.append(self.parse_expr())
            group_by = tuple(exprs)
        having = self.parse_expr() if self.take_kw("HAVING") else None
        order_by: tuple[tuple[ast.Expr, bool], ...] = ()
        if self.at_kw("ORDER"):
            self.next()
            self.expect_kw("BY")
            keys = [self.parse_order_item()]
            while self.take_sym(","):
                keys.append(self.parse_order_item())
            order_by = tuple(keys)
        return ast.Query(tuple(items), from_items, where, group_by, having,
                         order_by, limit)

    def parse_select_item(self) -> tuple[ast.Expr, str | None]:
        expr = self.parse_expr()
        alias = None
        if self.take_kw("AS"):
            alias = self.expect_ident("alias").text
        elif self.peek().kind == "IDENT" and self.peek().upper not in RESERVED:
            alias = self.next().text
        return expr, alias

    def parse_from_list(self) -> tuple[ast.FromClause, ...]:
        items = [self.parse_from_item(on=None)]
        while True:
            if self.take_sym(","):
                items.append(self.parse_from_item(on=None))
            elif self.at_kw("JOIN", "INNER"):
                if self.take_kw("INNER"):
                    self.expect_kw("JOIN")
                else:
                    self.next()
                item = self.parse_from_item(on=None)
                self.expect_kw("ON")
                pred = self.parse_expr()
                items.append(ast.FromClause(item.table, item.alias, pred))
            else:
                break
        return tuple(items)

    def parse_from_item(self, on) -> ast.FromClause:
        name = self.expect_ident("table name").text
        alias = None
        if self.take_kw("AS"):
            alias = self.expect_ident("alias").text
        elif self.peek().kind == "IDENT" and self.peek().upper not in RESERVED:
            alias = self.next().text
        return ast.FromClause(name, alias, on)

    def parse_order_item(self) -> tuple[ast.Expr, bool]:
        expr = self.parse_expr()
        asc = True
        if self.take_kw("DESC"):
            asc = False
        else:
            self.take_kw("ASC")
        return expr, asc

    # -- UDF statements --

    def parse_udf_def(self) -> ast.UdfDef:
        self.expect_kw("CREATE")
        self.expect_kw("FUNCTION")
        name = self.expect_ident("function name").text
        self.expect_sym("(")
        params: list[tuple[str, ColumnType]] = []
        while not self.at_sym(")"):
            tok = self.peek()
            if tok.kind != "VAR":
                raise SqlSyntaxError("expected @parameter", tok.line, tok.col)
            self.next()
            ctype = self.parse_type()
            params.append((tok.text, ctype))
            if not self.take_sym(","):
                break
        self.expect_sym(")")
        self.expect_kw("RETURNS")
        return_type = self.parse_type()
        self.take_kw("AS")
        self.expect_kw("BEGIN")
        body = self.parse_statements()
        self.expect_kw("END")
        tok = self.peek()
        if tok.kind != "EOF":
            raise SqlSyntaxError(f"unexpected input after END: {tok.text!r}",
                                 tok.line, tok.col)
        return ast.UdfDef(name, tuple(params), return_type, tuple(body))

    def parse_statements(self) -> list[ast.Stmt]:
        stmts: list[ast.Stmt] = []
        while not self.at_kw("END") and self.peek().kind != "EOF":
            stmts.extend(self.parse_statement())
            self.take_sym(";")
        return stmts

    def parse_statement(self) -> list[ast.Stmt]:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise SqlSyntaxError(f"expected a statement, found {tok.text!r}",
                                 tok.line, tok.col)
        word = tok.upper
        if word in UNSUPPORTED_STATEMENTS:
            raise UnsupportedConstruct(word, tok.line, tok.col)
        if word == "BEGIN":
            if self.peek(1).upper == "TRY":
                raise UnsupportedConstruct("TRY", tok.line, tok.col)
            self.next()
            inner = self.parse_statements()
            self.expect_kw("END")
            return inner
        if word == "DECLARE":
            return self.parse_declare()
        if word == "SET":
            self.next()
            var = self.peek()
            if var.kind != "VAR":
                raise SqlSyntaxError("expected @variable after SET", var.line, var.col)
            self.next()
            self.expect_sym("=")
            return [ast.Set(var.text, self.parse_expr(), line=tok.line)]
        if word == "SELECT":
            return self.parse_select_assign()
        if word == "IF":
            return [self.parse_if()]
        if word == "RETURN":
            self.next()
            return [ast.Return(self.parse_expr(), line=tok.line)]
        raise SqlSyntaxError(f"unexpected statement {tok.text!r}", tok.line, tok.col)

    def parse_declare(self) -> list[ast.Stmt]:
        start = self.expect_kw("DECLARE")
        out: list[ast.Stmt] = []
        while True:
            var = self.peek()
            if var.kind != "VAR":
                if var.kind == "IDENT" and var.upper == "CURSOR":
                    raise UnsupportedConstruct("CURSOR", var.line, var.col)
                raise SqlSyntaxError("expected @variable in DECLARE", var.line, var.col)
            self.next()
            ctype = self.parse_type()
            init = None
            if self.take_sym("="):
                init = self.parse_expr()
            out.append(ast.Declare(var.text, ctype, init, line=start.line))
            if not self.take_sym(","):
                break
        return out

    def parse_select_assign(self) -> list[ast.Stmt]:
        start = self.expect_kw("SELECT")
        assigns: list[tuple[str, ast.Expr]] = []
        while True:
            var = self.peek()
            if var.kind != "VAR":
                raise SqlSyntaxError("SELECT statements in a function body must "
                                     "assign to @variables", var.line, var.col)
            self.next()
            self.expect_sym("=")
            assigns.append((var.text, self.parse_expr()))
            if not self.take_sym(","):
                break
        from_items: tuple[ast.FromClause, ...] = ()
        if self.take_kw("FROM"):
            from_items = self.parse_from_list()
        where = self.parse_expr() if self.take_kw("WHERE") else None
        # a multi-assignment SELECT splits into one statement per variable
        return [ast.SelectAssign(var, expr, from_items, where, line=start.line)
                for var, expr in assigns]

    def parse_if(self) -> ast.Stmt:
        start = self.expect_kw("IF")
        pred = self.parse_expr()
        then = self.parse_block()
        orelse: tuple[ast.Stmt, ...] = ()
        if self.take_kw("ELSE"):
            orelse = self.parse_block()
        return ast.If(pred, then, orelse, line=start.line)

    def parse_block(self) -> tuple[ast.Stmt, ...]:
        if self.at_kw("BEGIN"):
            self.next()
            stmts = self.parse_statements()
            self.expect_kw("END")
            return tuple(stmts)
        stmts = self.parse_statement()
        self.take_sym(";")
        return tuple(stmts)


def parse_query(text: str) -> ast.Query:
    """Parse a standalone query; UDF calls stay unexpanded UdfCall nodes."""
    p = _Parser(text)
    q = p.parse_query_body()
    p.take_sym(";")
    tok = p.peek()
    if tok.kind != "EOF":
        raise SqlSyntaxError(f"unexpected input after query: {tok.text!r}",
                             tok.line, tok.col)
    _validate_query(q)
    return q


def parse_udf(text: str) -> ast.UdfDef:
    """Parse and validate one CREATE FUNCTION."""
    udf = _Parser(text).parse_udf_def()
    return validate_udf(udf)


def _validate_query(q: ast.Query) -> None:
    if q.limit is not None and not q.order_by:
        raise SqlSyntaxError("TOP requires ORDER BY for deterministic results")
    for f in q.from_items:
        if f.on is not None:
            _reject_aggs(f.on, "JOIN ON")
    if q.where is not None:
        _reject_aggs(q.where, "WHERE")
    has_aggs = any(isinstance(e, ast.AggCall)
                   for item, _ in q.select for e in ast.walk_exprs(item))
    if q.having is not None:
        has_aggs = True
    if q.group_by or has_aggs:
        from .printer import print_expr
        grouped = {print_expr(g) for g in q.group_by}
        for item, _ in q.select:
            _check_grouped(item, grouped)
        for key, _ in q.order_by:
            _check_grouped(key, grouped, allow_alias=True)


def _reject_aggs(e: ast.Expr, where: str) -> None:
    for sub in ast.walk_exprs(e):
        if isinstance(sub, ast.AggCall):
            raise SqlSyntaxError(f"aggregate not allowed in {where}")


def _check_grouped(e: ast.Expr, grouped: set[str], allow_alias: bool = False) -> None:
    from .printer import print_expr
    if isinstance(e, ast.AggCall):
        return
    if print_expr(e) in grouped:
        return
    if isinstance(e, ast.ColumnRef):
        if allow_alias:
            return  # may name a select alias; the binder resolves it
        raise SqlSyntaxError(
            f"column {e.name!r} must appear in GROUP BY or inside an aggregate")
    if isinstance(e, (ast.ScalarSubquery, ast.Exists, ast.Literal, ast.VarRef)):
        return
    for child in _direct_children(e):
        _check_grouped(child, grouped, allow_alias)


def _direct_children(e: ast.Expr) -> list[ast.Expr]:
    if isinstance(e, ast.BinaryOp):
        return [e.lhs, e.rhs]
    if isinstance(e, (ast.Not, ast.IsNull)):
        return [e.operand]
    if isinstance(e, ast.Case):
        out = [x for pair in e.branches for x in pair]
        if e.otherwise is not None:
            out.append(e.otherwise)
        return out
    if isinstance(e, ast.Cast):
        return [e.operand]
    if isinstance(e, (ast.IntrinsicCall, ast.UdfCall)):
        return list(e.args)
    if isinstance(e, ast.InList):
        return [e.operand]
    if isinstance(e, ast.Like):
        return [e.operand]
    if isinstance(e, ast.Between):
        return [e.operand, e.lo, e.hi]
    return []


def validate_udf(udf: ast.UdfDef) -> ast.UdfDef:
    """Declared-before-use, all-paths-return, no unreachable code; derives
    the nested-call and non-determinism summaries."""
    seen_params = set()
    for name, _ in udf.params:
        low = name.lower()
        if low in seen_params:
            raise SqlSyntaxError(f"duplicate parameter @{name}")
        seen_params.add(low)

    calls: set[str] = set()
    nondet = False

    def scan_expr(e: ast.Expr):
        nonlocal nondet
        for sub in ast.walk_exprs(e):
            if isinstance(sub, ast.UdfCall):
                calls.add(sub.name.lower())
            elif isinstance(sub, ast.IntrinsicCall):
                if sub.name.upper() in NONDETERMINISTIC_INTRINSICS:
                    nondet = True

    def check_vars(stmts, declared: set[str]):
        # declarations inside a branch stay local to that branch
        local = set(declared)
        for stmt in stmts:
            for e in ast.stmt_exprs(stmt):
                scan_expr(e)
                for var in ast.read_vars(e):
                    if var not in local:
                        raise UseBeforeDeclare(var, getattr(stmt, "line", 0))
            if isinstance(stmt, ast.Declare):
                low = stmt.var.lower()
                if low in local:
                    raise SqlSyntaxError(f"variable @{stmt.var} declared twice",
                                         stmt.line)
                local.add(low)
            elif isinstance(stmt, (ast.Set, ast.SelectAssign)):
                if stmt.var.lower() not in local:
                    raise UseBeforeDeclare(stmt.var, stmt.line)
            elif isinstance(stmt, ast.If):
                check_vars(stmt.then, local)
                check_vars(stmt.orelse, local)

    check_vars(udf.body, set(seen_params))

    def always_returns(stmts) -> bool:
        for i, stmt in enumerate(stmts):
            terminal = False
            if isinstance(stmt, ast.Return):
                terminal = True
            elif isinstance(stmt, ast.If) and stmt.orelse:
                terminal = always_returns(stmt.then) and always_returns(stmt.orelse)
            if terminal:
                if i != len(stmts) - 1:
                    raise SqlSyntaxError(
                        f"unreachable statement after line {getattr(stmt, 'line', 0)}",
                        getattr(stmts[i + 1], "line", 0))
                return True
        return False

    if not always_returns(udf.body):
        raise MissingReturnPath(udf.name)

    return ast.UdfDef(udf.name, udf.params, udf.return_type, udf.body,
                      calls_nondeterministic=nondet,
                      called_udfs=frozenset(calls))
