"""MPS export and read-back.

Layout follows fixed MPS sections (NAME, ROWS, COLUMNS, RHS, BOUNDS, ENDATA)
but fields are whitespace separated, so names longer than eight characters
survive; this is what current solvers call free MPS. Integer and binary
columns sit between ``MARKER INTORG`` / ``MARKER INTEND`` lines and carry
explicit bounds. A nonzero objective constant is written as ``-constant`` on
the objective row in RHS, the usual convention.
"""

from __future__ import annotations

import math

from ..model import BINARY, CONTINUOUS, EQ, GE, INTEGER, LE, MilpModel

OBJ = "OBJ"
_SENSE_CODE = {LE: "L", GE: "G", EQ: "E"}
_CODE_SENSE = {v: k for k, v in _SENSE_CODE.items()}


class MPSError(ValueError):
    pass


def _num(v: float) -> str:
    v = float(v)
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def mps_text(model: MilpModel) -> str:
    out = [f"NAME {model.name}", "ROWS", f" N {OBJ}"]
    for row in model.rows:
        out.append(f" {_SENSE_CODE[row.sense]} {row.name}")
    by_col: list[list[tuple[str, float]]] = [[] for _ in model.columns]
    for j, v in sorted(model.objective.items()):
        by_col[j].append((OBJ, v))
    for row in model.rows:
        for j, v in sorted(row.coefs.items()):
            if v != 0.0:
                by_col[j].append((row.name, v))
    out.append("COLUMNS")
    in_int = False
    marker = 0
    for j, col in enumerate(model.columns):
        is_int = col.kind != CONTINUOUS
        if is_int and not in_int:
            out.append(f" MARKER{marker} 'MARKER' 'INTORG'")
            in_int = True
        elif not is_int and in_int:
            out.append(f" MARKER{marker} 'MARKER' 'INTEND'")
            marker += 1
            in_int = False
        entries = by_col[j]
        if not entries:
            # keep the column visible to readers even without coefficients
            entries = [(OBJ, 0.0)]
        for rname, v in entries:
            out.append(f" {col.name} {rname} {_num(v)}")
    if in_int:
        out.append(f" MARKER{marker} 'MARKER' 'INTEND'")
    out.append("RHS")
    if model.obj_constant:
        out.append(f" RHS {OBJ} {_num(-model.obj_constant)}")
    for row in model.rows:
        if row.rhs != 0.0:
            out.append(f" RHS {row.name} {_num(row.rhs)}")
    out.append("BOUNDS")
    for col in model.columns:
        lb, ub = col.lb, col.ub
        if col.kind == BINARY:
            out.append(f" UP BND {col.name} 1")
            continue
        if lb == ub:
            out.append(f" FX BND {col.name} {_num(lb)}")
            continue
        if not math.isfinite(lb) and not math.isfinite(ub):
            out.append(f" FR BND {col.name}")
            continue
        if not math.isfinite(lb):
            out.append(f" MI BND {col.name}")
        elif lb != 0.0:
            out.append(f" LO BND {col.name} {_num(lb)}")
        if math.isfinite(ub):
            out.append(f" UP BND {col.name} {_num(ub)}")
        elif col.kind == INTEGER:
            # some readers give integer columns an implicit upper bound of 1
            out.append(f" PL BND {col.name}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def export_mps(model: MilpModel, destination) -> int:
    """Write the model to a path or text stream; returns bytes written."""
    text = mps_text(model)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8") as fh:
            fh.write(text)
    return len(text.encode("utf-8"))


def parse_mps(text: str) -> MilpModel:
    """Read back the subset of MPS that ``export_mps`` writes."""
    model = MilpModel()
    section = None
    obj_name = None
    row_index: dict[str, int] = {}
    pending_rows: list[tuple[str, str]] = []
    col_terms: dict[str, list[tuple[str, float]]] = {}
    col_kind: dict[str, str] = {}
    col_order: list[str] = []
    rhs: dict[str, float] = {}
    bounds: dict[str, list] = {}
    in_int = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0].upper()
            if section == "NAME":
                model.name = head[1] if len(head) > 1 else ""
            elif section == "ENDATA":
                break
            elif section not in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "RANGES"):
                raise MPSError(f"line {lineno}: unknown section {section}")
            continue
        f = raw.split()
        if section == "ROWS":
            code, name = f[0].upper(), f[1]
            if code == "N":
                if obj_name is None:
                    obj_name = name
                continue
            if code not in _CODE_SENSE:
                raise MPSError(f"line {lineno}: bad row type {code}")
            pending_rows.append((name, _CODE_SENSE[code]))
        elif section == "COLUMNS":
            if len(f) >= 3 and f[1].strip("'\"").upper() == "MARKER":
                tag = f[2].strip("'\"").upper()
                in_int = tag == "INTORG"
                continue
            name = f[0]
            if name not in col_terms:
                col_terms[name] = []
                col_order.append(name)
                col_kind[name] = INTEGER if in_int else CONTINUOUS
            pairs = f[1:]
            if len(pairs) % 2:
                raise MPSError(f"line {lineno}: odd number of fields")
            for k in range(0, len(pairs), 2):
                col_terms[name].append((pairs[k], float(pairs[k + 1])))
        elif section == "RHS":
            pairs = f[1:] if len(f) % 2 == 1 else f
            for k in range(0, len(pairs), 2):
                rhs[pairs[k]] = float(pairs[k + 1])
        elif section == "BOUNDS":
            kind = f[0].upper()
            name = f[2]
            val = float(f[3]) if len(f) > 3 else None
            bounds.setdefault(name, []).append((kind, val))
        elif section == "RANGES":
            raise MPSError("RANGES are not supported")
    for name in col_order:
        lb, ub, kind = 0.0, math.inf, col_kind[name]
        for bkind, val in bounds.get(name, []):
            if bkind == "BV":
                lb, ub, kind = 0.0, 1.0, BINARY
            elif bkind == "UP":
                ub = val
            elif bkind == "LO":
                lb = val
            elif bkind == "FX":
                lb = ub = val
            elif bkind == "FR":
                lb, ub = -math.inf, math.inf
            elif bkind == "MI":
                lb = -math.inf
            elif bkind == "PL":
                ub = math.inf
            else:
                raise MPSError(f"unsupported bound type {bkind}")
        if kind == INTEGER and lb == 0.0 and ub == 1.0:
            kind = BINARY
        model.add_column(name, lb, ub, kind)
    for name, _ in pending_rows:
        row_index[name] = len(row_index)
    row_terms: dict[str, list] = {name: [] for name, _ in pending_rows}
    for name in col_order:
        j = model.col_id(name)
        for rname, v in col_terms[name]:
            if rname == obj_name:
                if v != 0.0:
                    model.add_objective(j, v)
            elif rname in row_terms:
                row_terms[rname].append((j, v))
            else:
                raise MPSError(f"column {name} references unknown row {rname}")
    for name, sense in pending_rows:
        model.add_row(name, row_terms[name], sense, rhs.get(name, 0.0))
    if obj_name in rhs:
        model.obj_constant = -rhs[obj_name]
    return model


def read_mps(source) -> MilpModel:
    if hasattr(source, "read"):
        return parse_mps(source.read())
    with open(source, encoding="utf-8") as fh:
        return parse_mps(fh.read())
