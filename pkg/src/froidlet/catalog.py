"""Named tables, registered UDFs, and CSV ingestion.

Database directory layout:
    <db>/schema.txt     one line per table: name,col:TYPE,col:TYPE,...
    <db>/<table>.csv    RFC-4180 CSV with a header row
    <db>/udfs/*.sql     one CREATE FUNCTION per file

NULL is encoded in CSV as the empty field; the literal string "NULL" is data.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field

from .errors import CsvParseError, DuplicateTable, DuplicateUdf, IoError, NotFound
from .values import (BOOL, DATE, FLOAT64, INT64, STRING, ColumnType, Value,
                     date_from_iso, date_to_iso, float_to_str)


@dataclass(frozen=True)
class Schema:
    columns: tuple[tuple[str, ColumnType], ...]

    def __post_init__(self):
        seen = set()
        for name, _ in self.columns:
            low = name.lower()
            if low in seen:
                raise DuplicateTable(f"duplicate column name {name!r} in schema")
            seen.add(low)

    @staticmethod
    def of(*cols: tuple[str, ColumnType]) -> "Schema":
        return Schema(tuple(cols))

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.columns]

    @property
    def types(self) -> list[ColumnType]:
        return [t for _, t in self.columns]

    def __len__(self):
        return len(self.columns)


@dataclass
class Relation:
    schema: Schema
    rows: list[list[Value]] = field(default_factory=list)

    def check(self) -> None:
        width = len(self.schema)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise CsvParseError("<relation>", i + 1, "*",
                                    f"row has {len(row)} cells, schema has {width}")


_TYPE_NAMES = {t.value: t for t in ColumnType}


def parse_type_name(name: str) -> ColumnType:
    t = _TYPE_NAMES.get(name.strip().upper())
    if t is None:
        raise CsvParseError("<schema>", 0, name, f"unknown column type {name!r}")
    return t


def parse_cell(text: str, ctype: ColumnType, path: str, row: int, col: str) -> Value:
    if text == "":
        return None
    try:
        if ctype is INT64:
            return int(text)
        if ctype is FLOAT64:
            return float(text)
        if ctype is BOOL:
            low = text.lower()
            if low in ("true", "1"):
                return True
            if low in ("false", "0"):
                return False
            raise ValueError(text)
        if ctype is DATE:
            return date_from_iso(text)
        return text
    except Exception as exc:
        raise CsvParseError(path, row, col,
                            f"cannot parse {text!r} as {ctype.value}") from exc


def format_cell(v: Value, ctype: ColumnType) -> str:
    if v is None:
        return ""
    if ctype is DATE:
        return date_to_iso(v)
    if ctype is FLOAT64:
        return float_to_str(float(v))
    if ctype is BOOL:
        return "true" if v else "false"
    return str(v)


class Catalog:
    """Tables and UDF definitions; built once, then read-only.

    Lookups are case-insensitive; tables and UDFs live in disjoint namespaces.
    """

    def __init__(self):
        self.tables: dict[str, Relation] = {}
        self.udfs: dict[str, object] = {}  # name -> UdfDef (frontend.ast)
        self._interp_cache: dict[str, object] = {}

    # -- tables --

    def register_table(self, name: str, relation: Relation) -> None:
        key = name.lower()
        if key in self.tables:
            raise DuplicateTable(f"table {name!r} already registered")
        relation.check()
        self.tables[key] = relation

    def lookup_table(self, name: str) -> Relation:
        rel = self.tables.get(name.lower())
        if rel is None:
            raise NotFound(f"table {name!r} not found")
        return rel

    def has_table(self, name: str) -> bool:
        return name.lower() in self.tables

    def load_csv(self, path: str, table_name: str, schema: Schema) -> None:
        if table_name.lower() in self.tables:
            raise DuplicateTable(f"table {table_name!r} already registered")
        try:
            with open(path, newline="", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise IoError(f"cannot read {path}: {exc}") from exc
        rel = relation_from_csv(text, schema, path)
        self.tables[table_name.lower()] = rel

    # -- UDFs --

    def register_udf(self, udf) -> None:
        key = udf.name.lower()
        if key in self.udfs:
            raise DuplicateUdf(f"function {udf.name!r} already registered")
        self.udfs[key] = udf

    def lookup_udf(self, name: str):
        udf = self.udfs.get(name.lower())
        if udf is None:
            raise NotFound(f"function {name!r} not found")
        return udf

    def has_udf(self, name: str) -> bool:
        return name.lower() in self.udfs

    def udf_is_nondeterministic(self, name: str) -> bool:
        """Transitive closure over nested calls; cycles count as visited."""
        seen: set[str] = set()

        def walk(n: str) -> bool:
            key = n.lower()
            if key in seen or key not in self.udfs:
                return False
            seen.add(key)
            udf = self.udfs[key]
            if udf.calls_nondeterministic:
                return True
            return any(walk(callee) for callee in udf.called_udfs)

        return walk(name)


def relation_from_csv(text: str, schema: Schema, path: str = "<csv>") -> Relation:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvParseError(path, 0, "*", "missing header row")
    if len(header) != len(schema):
        raise CsvParseError(path, 0, "*",
                            f"header has {len(header)} columns, schema has {len(schema)}")
    names = schema.names
    types = schema.types
    rows: list[list[Value]] = []
    for rno, raw in enumerate(reader, start=1):
        if len(raw) != len(schema):
            raise CsvParseError(path, rno, "*",
                                f"row has {len(raw)} cells, schema has {len(schema)}")
        rows.append([parse_cell(cell, types[i], path, rno, names[i])
                     for i, cell in enumerate(raw)])
    return Relation(schema, rows)


def relation_to_csv(rel: Relation) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(rel.schema.names)
    types = rel.schema.types
    for row in rel.rows:
        writer.writerow([format_cell(cell, types[i]) for i, cell in enumerate(row)])
    return buf.getvalue()


def parse_schema_line(line: str) -> tuple[str, Schema]:
    parts = [p.strip() for p in line.split(",")]
    if len(parts) < 2:
        raise CsvParseError("schema.txt", 0, "*", f"malformed schema line {line!r}")
    cols = []
    for spec in parts[1:]:
        name, _, tname = spec.partition(":")
        if not tname:
            raise CsvParseError("schema.txt", 0, spec, "expected col:TYPE")
        cols.append((name.strip(), parse_type_name(tname)))
    return parts[0], Schema(tuple(cols))


def schema_line(table: str, schema: Schema) -> str:
    cols = ",".join(f"{n}:{t.value}" for n, t in schema.columns)
    return f"{table},{cols}"


def load_database(db_dir: str) -> Catalog:
    """Load a database directory (schema.txt + CSVs + udfs/*.sql)."""
    from .frontend.parser import parse_udf

    schema_path = os.path.join(db_dir, "schema.txt")
    if not os.path.isfile(schema_path):
        raise IoError(f"{schema_path} not found")
    catalog = Catalog()
    with open(schema_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            table, schema = parse_schema_line(line)
            catalog.load_csv(os.path.join(db_dir, f"{table}.csv"), table, schema)
    udf_dir = os.path.join(db_dir, "udfs")
    if os.path.isdir(udf_dir):
        for fname in sorted(os.listdir(udf_dir)):
            if not fname.endswith(".sql"):
                continue
            with open(os.path.join(udf_dir, fname), encoding="utf-8") as fh:
                catalog.register_udf(parse_udf(fh.read()))
    return catalog


def save_database(catalog: Catalog, db_dir: str) -> None:
    os.makedirs(db_dir, exist_ok=True)
    lines = []
    for name in catalog.tables:
        rel = catalog.tables[name]
        lines.append(schema_line(name, rel.schema))
        with open(os.path.join(db_dir, f"{name}.csv"), "w", encoding="utf-8") as fh:
            fh.write(relation_to_csv(rel))
    with open(os.path.join(db_dir, "schema.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
