"""Exception hierarchy shared by every layer of the engine."""

from __future__ import annotations


class FroidletError(Exception):
    """Base class for all engine errors."""


# --- catalog / ingestion ---

class IoError(FroidletError):
    pass


class CsvParseError(FroidletError):
    def __init__(self, path: str, row: int, column: str, message: str):
        super().__init__(f"{path}: row {row}, column {column}: {message}")
        self.path = path
        self.row = row
        self.column = column


class DuplicateTable(FroidletError):
    pass


class DuplicateUdf(FroidletError):
    pass


class NotFound(FroidletError):
    pass


# --- frontend ---

class FrontendError(FroidletError):
    """Base for parse/validation errors, carrying a source location."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.message = message
        self.line = line
        self.col = col


class SqlSyntaxError(FrontendError):
    pass


class UnsupportedConstruct(FrontendError):
    def __init__(self, construct: str, line: int = 0, col: int = 0):
        super().__init__(f"UnsupportedConstruct: {construct}", line, col)
        self.construct = construct


class UseBeforeDeclare(FrontendError):
    def __init__(self, var: str, line: int = 0, col: int = 0):
        super().__init__(f"variable @{var} used before declaration", line, col)
        self.var = var


class MissingReturnPath(FrontendError):
    def __init__(self, udf: str):
        super().__init__(f"not every code path through {udf} ends in RETURN")


# --- binding / typing ---

class BindError(FroidletError):
    pass


class UnknownColumn(BindError):
    pass


class TypeCheckError(FroidletError):
    pass


class InternalError(FroidletError):
    pass


class FixpointOverflow(FroidletError):
    pass


# --- execution ---

class ExecError(FroidletError):
    """Runtime failure; `detail` names the originating expression."""

    kind = "runtime"

    def __init__(self, detail: str = ""):
        super().__init__(f"{self.kind}: {detail}" if detail else self.kind)
        self.detail = detail


class ScalarSubqueryCardinality(ExecError):
    kind = "scalar subquery returned more than one row"


class DivideByZero(ExecError):
    kind = "division by zero"


class CastFailure(ExecError):
    kind = "cast failed"


class RecursionLimit(ExecError):
    kind = "UDF recursion limit exceeded"
