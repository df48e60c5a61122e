"""MPS reading and writing.

Reads both fixed- and free-format MPS (data fields are whitespace-tokenized,
which covers both dialects as long as names carry no embedded blanks) and
writes free format. Supported sections: NAME, OBJSENSE, ROWS, COLUMNS (with
'MARKER' INTORG/INTEND blocks), RHS, RANGES, BOUNDS, ENDATA.

Conventions:
  * The first N row is the objective; further N rows are free rows and are
    dropped. An RHS entry on the objective row (constant shift) is ignored.
  * RANGES rows are expanded into two single-sense rows at parse time, kept
    adjacent at the original row's position:
      L row, rhs b, range r -> (LE b) and (GE b-|r|)
      G row, rhs b, range r -> (GE b) and (LE b+|r|)
      E row, rhs b, range r -> [b, b+r] for r >= 0, [b-|r|, b] for r < 0
  * OBJSENSE MAX is converted to minimize by negating the objective; the
    instance records flipped_from_max so the writer can restore it.
  * Default variable bounds are [0, +inf). Bound types UP, LO, FX, FR, MI,
    PL, BV, LI, UI are supported; BV/LI/UI also mark the column integer.

Row names written by ``write_mps`` encode original_index (``C0000012``) so
external-solver logs stay traceable to rows after reordering. The parser
recovers those indices when the whole file uses that scheme; otherwise rows
are numbered in file order.
"""

from __future__ import annotations

import re

from .model import EQ, GE, LE, NEG_INF, POS_INF, Constraint, MilpInstance

_ROW_SENSE = {"L": LE, "G": GE, "E": EQ}
_SENSE_ROW = {LE: "L", GE: "G", EQ: "E"}
_OWN_ROW_NAME = re.compile(r"^C(\d+)$")

_SECTIONS = ("NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA")


class MpsParseError(ValueError):
    """Malformed MPS input; message names the offending 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _num(token: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise MpsParseError(lineno, f"expected a number, got {token!r}") from None


def parse_mps(text: str) -> MilpInstance:
    """Parse MPS text into a MilpInstance (rows in file order)."""
    name = ""
    maximize = False
    obj_row: str | None = None
    row_sense: dict[str, str] = {}        # constraint rows only
    free_rows: set[str] = set()           # extra N rows: recognized, dropped
    row_names: list[str] = []             # file order
    columns: list[str] = []
    col_index: dict[str, int] = {}
    integer_cols: set[str] = set()
    obj_coeffs: dict[str, float] = {}
    entries: dict[str, dict[str, float]] = {}   # row -> col -> coeff
    rhs: dict[str, float] = {}
    ranges: dict[str, float] = {}
    bounds_lo: dict[str, float] = {}
    bounds_up: dict[str, float] = {}

    section = None
    in_int_block = False
    expect_objsense_value = False

    def require_row(rname: str, lineno: int) -> str:
        if rname not in row_sense and rname != obj_row and rname not in free_rows:
            raise MpsParseError(lineno, f"unknown row name {rname!r}")
        return rname

    def require_col(cname: str, lineno: int) -> str:
        if cname not in col_index:
            raise MpsParseError(lineno, f"unknown column name {cname!r}")
        return cname

    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        is_header = not raw[0].isspace()
        tokens = raw.split()

        if is_header:
            expect_objsense_value = False
            keyword = tokens[0].upper()
            if keyword not in _SECTIONS:
                raise MpsParseError(lineno, f"malformed section header {tokens[0]!r}")
            section = keyword
            if keyword == "NAME":
                name = tokens[1] if len(tokens) > 1 else ""
            elif keyword == "OBJSENSE":
                if len(tokens) > 1:
                    maximize = tokens[1].upper().startswith("MAX")
                else:
                    expect_objsense_value = True
            elif keyword == "ENDATA":
                break
            continue

        if section == "OBJSENSE" and expect_objsense_value:
            maximize = tokens[0].upper().startswith("MAX")
            expect_objsense_value = False
        elif section == "ROWS":
            if len(tokens) < 2:
                raise MpsParseError(lineno, "ROWS entry needs a type and a name")
            rtype, rname = tokens[0].upper(), tokens[1]
            if rname in row_sense or rname == obj_row:
                raise MpsParseError(lineno, f"duplicate row name {rname!r}")
            if rtype == "N":
                if obj_row is None:
                    obj_row = rname
                else:
                    free_rows.add(rname)  # free row: entries dropped below
            elif rtype in _ROW_SENSE:
                row_sense[rname] = _ROW_SENSE[rtype]
                row_names.append(rname)
            else:
                raise MpsParseError(lineno, f"unknown row type {rtype!r}")
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1] == "'MARKER'":
                marker = tokens[-1]
                if marker == "'INTORG'":
                    in_int_block = True
                elif marker == "'INTEND'":
                    in_int_block = False
                else:
                    raise MpsParseError(lineno, f"unknown marker {marker!r}")
                continue
            if len(tokens) < 3 or len(tokens) % 2 == 0:
                raise MpsParseError(lineno, "COLUMNS entry needs col followed by row/value pairs")
            cname = tokens[0]
            if cname not in col_index:
                col_index[cname] = len(columns)
                columns.append(cname)
            if in_int_block:
                integer_cols.add(cname)
            for i in range(1, len(tokens), 2):
                rname, value = tokens[i], _num(tokens[i + 1], lineno)
                if rname == obj_row:
                    obj_coeffs[cname] = obj_coeffs.get(cname, 0.0) + value
                    continue
                if rname in free_rows:
                    continue
                if rname not in row_sense:
                    raise MpsParseError(lineno, f"unknown row name {rname!r}")
                row = entries.setdefault(rname, {})
                if cname in row:
                    raise MpsParseError(
                        lineno, f"duplicate column entry {cname!r} in row {rname!r}"
                    )
                row[cname] = value
        elif section == "RHS":
            if len(tokens) < 2:
                raise MpsParseError(lineno, "RHS entry needs row/value pairs")
            start = 1 if len(tokens) % 2 == 1 else 0  # vector name is optional
            for i in range(start, len(tokens), 2):
                rname, value = tokens[i], _num(tokens[i + 1], lineno)
                if rname == obj_row or rname in free_rows:
                    continue  # objective constant shift: not modeled
                require_row(rname, lineno)
                rhs[rname] = value
        elif section == "RANGES":
            if len(tokens) < 2:
                raise MpsParseError(lineno, "RANGES entry needs row/value pairs")
            start = 1 if len(tokens) % 2 == 1 else 0
            for i in range(start, len(tokens), 2):
                rname, value = tokens[i], _num(tokens[i + 1], lineno)
                require_row(rname, lineno)
                if rname == obj_row:
                    raise MpsParseError(lineno, "RANGES on the objective row is meaningless")
                ranges[rname] = value
        elif section == "BOUNDS":
            if len(tokens) < 3:
                raise MpsParseError(lineno, "BOUNDS entry needs a type, name, and column")
            btype = tokens[0].upper()
            cname = require_col(tokens[2], lineno)
            needs_value = btype in ("UP", "LO", "FX", "LI", "UI")
            if needs_value and len(tokens) < 4:
                raise MpsParseError(lineno, f"bound type {btype} needs a value")
            value = _num(tokens[3], lineno) if needs_value else 0.0
            if btype == "UP":
                bounds_up[cname] = value
            elif btype == "LO":
                bounds_lo[cname] = value
            elif btype == "FX":
                bounds_lo[cname] = value
                bounds_up[cname] = value
            elif btype == "FR":
                bounds_lo[cname] = NEG_INF
            elif btype == "MI":
                bounds_lo[cname] = NEG_INF
            elif btype == "PL":
                bounds_up[cname] = POS_INF
            elif btype == "BV":
                bounds_lo[cname], bounds_up[cname] = 0.0, 1.0
                integer_cols.add(cname)
            elif btype == "LI":
                bounds_lo[cname] = value
                integer_cols.add(cname)
            elif btype == "UI":
                bounds_up[cname] = value
                integer_cols.add(cname)
            else:
                raise MpsParseError(lineno, f"unknown bound type {btype!r}")
        elif section in ("NAME", "OBJSENSE"):
            raise MpsParseError(lineno, f"unexpected data line in section {section}")
        elif section is None:
            raise MpsParseError(lineno, "data line before any section header")

    if obj_row is None:
        raise MpsParseError(1, "no objective (N) row found")

    # Expand RANGES into adjacent single-sense row pairs, in file order.
    expanded: list[tuple[str, str, float]] = []  # (source row name, sense, rhs)
    for rname in row_names:
        sense = row_sense[rname]
        b = rhs.get(rname, 0.0)
        if rname not in ranges:
            expanded.append((rname, sense, b))
            continue
        r = ranges[rname]
        if sense == LE:
            expanded.append((rname, LE, b))
            expanded.append((rname, GE, b - abs(r)))
        elif sense == GE:
            expanded.append((rname, GE, b))
            expanded.append((rname, LE, b + abs(r)))
        else:  # EQ
            lo, hi = (b, b + r) if r >= 0 else (b - abs(r), b)
            expanded.append((rname, GE, lo))
            expanded.append((rname, LE, hi))

    # Recover original_index from our C####### naming scheme when the whole
    # file uses it and no expansion duplicated a name; else use file order.
    provenance: list[int] | None = None
    if not ranges:
        matches = [_OWN_ROW_NAME.match(rname) for rname, _, _ in expanded]
        if all(matches):
            indices = [int(m.group(1)) for m in matches]  # type: ignore[union-attr]
            if sorted(indices) == list(range(len(indices))):
                provenance = indices
    if provenance is None:
        provenance = list(range(len(expanded)))

    n = len(columns)
    objective = [obj_coeffs.get(c, 0.0) for c in columns]
    if maximize:
        objective = [-c for c in objective]

    rows = []
    for (rname, sense, b), orig in zip(expanded, provenance):
        row_entries = tuple(
            (col_index[c], v) for c, v in entries.get(rname, {}).items() if v != 0.0
        )
        rows.append(Constraint(entries=row_entries, sense=sense, rhs=b, original_index=orig))

    var_bounds = tuple(
        (bounds_lo.get(c, 0.0), bounds_up.get(c, POS_INF)) for c in columns
    )
    integrality = frozenset(col_index[c] for c in integer_cols)

    return MilpInstance(
        name=name,
        objective=tuple(objective),
        rows=tuple(rows),
        var_bounds=var_bounds,
        integrality=integrality,
        flipped_from_max=maximize,
    )


def _fmt(value: float) -> str:
    # repr round-trips doubles exactly; trim the trailing ".0" noise for ints
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def write_mps(inst: MilpInstance) -> str:
    """Emit free-format MPS with rows in the instance's current order."""
    lines = [f"NAME          {inst.name}" if inst.name else "NAME"]
    if inst.flipped_from_max:
        lines.append("OBJSENSE")
        lines.append("    MAX")

    lines.append("ROWS")
    lines.append(" N  OBJ")
    row_names = [f"C{row.original_index:07d}" for row in inst.rows]
    for row, rname in zip(inst.rows, row_names):
        lines.append(f" {_SENSE_ROW[row.sense]}  {rname}")

    # write_mps must invert parse_mps: restore the original maximize objective
    sign = -1.0 if inst.flipped_from_max else 1.0
    col_rows: list[list[tuple[str, float]]] = [[] for _ in range(inst.num_vars)]
    for row, rname in zip(inst.rows, row_names):
        for c, v in row.entries:
            col_rows[c].append((rname, v))

    lines.append("COLUMNS")
    in_int_block = False
    for j in range(inst.num_vars):
        is_int = j in inst.integrality
        if is_int and not in_int_block:
            lines.append("    MARKER                 'MARKER'                 'INTORG'")
            in_int_block = True
        elif not is_int and in_int_block:
            lines.append("    MARKER                 'MARKER'                 'INTEND'")
            in_int_block = False
        cname = f"X{j:07d}"
        # always emit the objective entry so empty columns survive round-trips
        pairs = [("OBJ", sign * inst.objective[j])] + col_rows[j]
        for rname, v in pairs:
            lines.append(f"    {cname}  {rname}  {_fmt(v)}")
    if in_int_block:
        lines.append("    MARKER                 'MARKER'                 'INTEND'")

    lines.append("RHS")
    for row, rname in zip(inst.rows, row_names):
        if row.rhs != 0.0:
            lines.append(f"    RHS  {rname}  {_fmt(row.rhs)}")

    bound_lines = []
    for j, (lo, hi) in enumerate(inst.var_bounds):
        cname = f"X{j:07d}"
        if lo == hi:
            bound_lines.append(f" FX BND  {cname}  {_fmt(lo)}")
            continue
        if lo == NEG_INF and hi == POS_INF:
            bound_lines.append(f" FR BND  {cname}")
            continue
        if lo == NEG_INF:
            bound_lines.append(f" MI BND  {cname}")
        elif lo != 0.0:
            bound_lines.append(f" LO BND  {cname}  {_fmt(lo)}")
        if hi != POS_INF:
            bound_lines.append(f" UP BND  {cname}  {_fmt(hi)}")
    if bound_lines:
        lines.append("BOUNDS")
        lines.extend(bound_lines)

    lines.append("ENDATA")
    return "\n".join(lines) + "\n"
