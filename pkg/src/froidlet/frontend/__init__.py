from .parser import parse_query, parse_udf  # noqa: F401
