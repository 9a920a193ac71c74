"""Decomposes a UDF body into sequential/conditional/basic regions and
annotates each with read/write sets and live-out variables.

Write-sets are ordered by first write position in the whole body (declaration
order for declared variables, with returnVal last), which is also first-write
order inside any region that contains the declarations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .frontend import ast
from .values import ColumnType

RETURN_VAL = "returnval"


class RegionKind(enum.Enum):
    SEQUENTIAL = "Sequential"
    CONDITIONAL = "Conditional"
    BASIC = "Basic"


@dataclass
class Region:
    kind: RegionKind
    stmts: tuple[ast.Stmt, ...] = ()            # BASIC
    children: tuple["Region", ...] = ()         # SEQUENTIAL
    pred: ast.Expr | None = None                # CONDITIONAL
    true_region: "Region | None" = None
    false_region: "Region | None" = None
    read_set: set[str] = field(default_factory=set)
    write_set: list[tuple[str, ColumnType]] = field(default_factory=list)
    live_out: set[str] = field(default_factory=set)

    @property
    def writes_return(self) -> bool:
        return any(name == RETURN_VAL for name, _ in self.write_set)

    def write_names(self) -> list[str]:
        return [name for name, _ in self.write_set]

    def pretty(self, indent: int = 0) -> str:
        pad = "  " * indent
        ws = ", ".join(f"{n}:{t.value}" for n, t in self.write_set)
        info = (f" read=[{', '.join(sorted(self.read_set))}]"
                f" write=[{ws}] live_out=[{', '.join(sorted(self.live_out))}]")
        if self.kind is RegionKind.BASIC:
            return f"{pad}Basic stmts={len(self.stmts)}{info}"
        if self.kind is RegionKind.SEQUENTIAL:
            lines = [f"{pad}Sequential{info}"]
            lines += [c.pretty(indent + 1) for c in self.children]
            return "\n".join(lines)
        lines = [f"{pad}Conditional{info}"]
        lines.append(f"{pad}  true:")
        lines.append(self.true_region.pretty(indent + 2))
        if self.false_region is not None:
            lines.append(f"{pad}  false:")
            lines.append(self.false_region.pretty(indent + 2))
        return "\n".join(lines)


def build_regions(udf: ast.UdfDef) -> Region:
    """Region hierarchy with read/write/live annotations for a validated UDF."""
    var_types = dict_types(udf)
    order = _var_order(udf)
    root = _region_of(udf.body, top_level=True)
    _annotate_rw(root, var_types, order)
    _annotate_live(root, {RETURN_VAL})
    return root


def dict_types(udf: ast.UdfDef) -> dict[str, ColumnType]:
    types = {name.lower(): t for name, t in udf.params}
    _collect_declares(udf.body, types)
    types[RETURN_VAL] = udf.return_type
    return types


def _collect_declares(stmts, types: dict[str, ColumnType]) -> None:
    for stmt in stmts:
        if isinstance(stmt, ast.Declare):
            types[stmt.var.lower()] = stmt.ctype
        elif isinstance(stmt, ast.If):
            _collect_declares(stmt.then, types)
            _collect_declares(stmt.orelse, types)


def _var_order(udf: ast.UdfDef) -> dict[str, int]:
    """Position of each variable's first write in source order."""
    order: dict[str, int] = {}
    counter = [0]

    def note(name: str):
        key = name.lower()
        if key not in order:
            order[key] = counter[0]
            counter[0] += 1

    for name, _ in udf.params:
        note(name)

    def walk(stmts):
        for stmt in stmts:
            if isinstance(stmt, (ast.Declare, ast.Set, ast.SelectAssign)):
                note(stmt.var)
            elif isinstance(stmt, ast.If):
                walk(stmt.then)
                walk(stmt.orelse)
            elif isinstance(stmt, ast.Return):
                pass

    walk(udf.body)
    note(RETURN_VAL)
    return order


def _region_of(stmts, top_level: bool = False) -> Region:
    regions: list[Region] = []
    run: list[ast.Stmt] = []

    def flush():
        if run:
            regions.append(Region(RegionKind.BASIC, stmts=tuple(run)))
            run.clear()

    for stmt in stmts:
        if isinstance(stmt, ast.If):
            flush()
            true_region = _region_of(stmt.then)
            false_region = _region_of(stmt.orelse) if stmt.orelse else None
            regions.append(Region(RegionKind.CONDITIONAL, pred=stmt.pred,
                                  true_region=true_region,
                                  false_region=false_region))
        else:
            run.append(stmt)
    flush()
    if len(regions) == 1 and not top_level:
        return regions[0]
    return Region(RegionKind.SEQUENTIAL, children=tuple(regions))


def _stmt_writes(stmt: ast.Stmt) -> list[str]:
    if isinstance(stmt, (ast.Declare, ast.Set, ast.SelectAssign)):
        return [stmt.var.lower()]
    if isinstance(stmt, ast.Return):
        return [RETURN_VAL]
    return []


def _stmt_reads(stmt: ast.Stmt) -> set[str]:
    return ast.read_vars(ast.stmt_exprs(stmt))


def _annotate_rw(region: Region, var_types, order) -> None:
    if region.kind is RegionKind.BASIC:
        reads: set[str] = set()
        writes: list[str] = []
        for stmt in region.stmts:
            reads |= _stmt_reads(stmt)
            for w in _stmt_writes(stmt):
                if w not in writes:
                    writes.append(w)
        region.read_set = reads
    elif region.kind is RegionKind.SEQUENTIAL:
        writes = []
        reads = set()
        for child in region.children:
            _annotate_rw(child, var_types, order)
            reads |= child.read_set
            for w in child.write_names():
                if w not in writes:
                    writes.append(w)
        region.read_set = reads
    else:
        _annotate_rw(region.true_region, var_types, order)
        reads = set(region.true_region.read_set)
        writes = list(region.true_region.write_names())
        if region.false_region is not None:
            _annotate_rw(region.false_region, var_types, order)
            reads |= region.false_region.read_set
            for w in region.false_region.write_names():
                if w not in writes:
                    writes.append(w)
        reads |= ast.read_vars(region.pred)
        region.read_set = reads
    ordered = sorted(writes, key=lambda w: order.get(w, 1 << 30))
    region.write_set = [(w, var_types[w]) for w in ordered]


def _annotate_live(region: Region, live_after: set[str]) -> set[str]:
    """Backward liveness; returns live_in. returnVal is pinned live."""
    region.live_out = set(live_after) | {RETURN_VAL}
    if region.kind is RegionKind.BASIC:
        live = set(region.live_out)
        for stmt in reversed(region.stmts):
            for w in _stmt_writes(stmt):
                if w != RETURN_VAL:
                    live.discard(w)
            live |= _stmt_reads(stmt)
        return live
    if region.kind is RegionKind.SEQUENTIAL:
        live = set(region.live_out)
        for child in reversed(region.children):
            live = _annotate_live(child, live)
        return live
    live_t = _annotate_live(region.true_region, region.live_out)
    if region.false_region is not None:
        live_f = _annotate_live(region.false_region, region.live_out)
    else:
        live_f = set(region.live_out)
    return live_t | live_f | ast.read_vars(region.pred)
