"""Solution files and decoding solver values back into a Schedule."""

from __future__ import annotations

import io
import math
import os

from ..model import CONTINUOUS, MilpModel, ScheduleProblem, VarIndex
from ..schedule import Schedule
from ..validator import evaluate_objective
from ..wallplan import WallPlan
from .bb import FEASIBLE, Solution

INT_TOL = 1e-6


class SolutionFormatError(ValueError):
    pass


class InconsistentSolutionError(ValueError):
    pass


def _column_kinds(index: VarIndex, model: MilpModel | None) -> dict:
    if model is not None:
        return {c.name: c.kind for c in model.columns}
    kinds = {}
    for j in index.SB:
        kinds[f"SB_{j}"] = "C"
    for fam in ("SA", "dA", "tA"):
        for j in getattr(index, fam):
            kinds[f"{fam}_{j}"] = "C"
    if index.cmax is not None:
        kinds["Cmax"] = "C"
    for i, k in index.x:
        kinds[f"x_{i}_{k}"] = "B"
    for k, i, j in index.alpha:
        kinds[f"alpha_{k}_{i}_{j}"] = "B"
    for fam in ("beta", "gammaB", "gammaBA", "o"):
        for i, j in getattr(index, fam):
            kinds[f"{fam}_{i}_{j}"] = "B"
    for i in index.s:
        kinds[f"s_{i}"] = "B"
    for i in index.r:
        kinds[f"r_{i}"] = "I"
    return kinds


def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        return source.decode("utf-8")
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        data = source.read()
        return data.decode("utf-8") if isinstance(data, bytes) else data
    if isinstance(source, os.PathLike) or (isinstance(source, str) and "\n" not in source and os.path.exists(source)):
        with open(source, encoding="utf-8") as fh:
            return fh.read()
    return str(source)


def import_solution(source, index: VarIndex, model: MilpModel | None = None) -> Solution:
    """Parse ``name value`` lines (``#`` comments allowed) into a Solution.

    Binary and integer columns that are absent default to 0; an absent
    continuous column is an error. Integer values are snapped when within 1e-6.
    Unknown names are collected as warnings. ``source`` may be a path, text,
    bytes or a file object.
    """
    kinds = _column_kinds(index, model)
    values: dict[str, float] = {}
    warnings = []
    for lineno, raw in enumerate(_read_text(source).splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 2:
            raise SolutionFormatError(f"line {lineno}: expected 'name value', got {raw!r}")
        name, tok = parts[0], parts[1]
        try:
            val = float(tok)
        except ValueError as exc:
            raise SolutionFormatError(f"line {lineno}: bad number {tok!r}") from exc
        if not math.isfinite(val):
            raise SolutionFormatError(f"line {lineno}: non-finite value for {name}")
        if name not in kinds:
            warnings.append(f"line {lineno}: unknown column {name}")
            continue
        if kinds[name] != CONTINUOUS:
            snapped = round(val)
            if abs(val - snapped) > INT_TOL:
                raise SolutionFormatError(f"line {lineno}: {name} = {val} is not integral")
            val = float(snapped)
        values[name] = val
    missing = sorted(n for n, k in kinds.items() if k == CONTINUOUS and n not in values)
    if missing:
        shown = ", ".join(missing[:5]) + (" ..." if len(missing) > 5 else "")
        raise SolutionFormatError(f"missing continuous values: {shown}")
    for n, k in kinds.items():
        if k != CONTINUOUS:
            values.setdefault(n, 0.0)
    if model is not None:
        ordered = {c.name: values[c.name] for c in model.columns}
        obj = model.evaluate_objective(ordered)
    else:
        ordered, obj = values, math.nan
    sol = Solution(ordered, obj, -math.inf, FEASIBLE)
    sol.warnings = warnings
    return sol


def write_solution(sol: Solution, destination, model: MilpModel | None = None) -> int:
    """Write ``name value`` lines (model column order when a model is given)."""
    names = [c.name for c in model.columns] if model is not None else sorted(sol.values)
    lines = [f"# objective {sol.objective!r}"]
    lines += [f"{n} {sol.values[n]!r}" for n in names]
    text = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8") as fh:
            fh.write(text)
    return len(text.encode("utf-8"))


def extract_schedule(sol: Solution, index: VarIndex, plan: WallPlan, prob: ScheduleProblem) -> Schedule:
    """Decode solver values into a Schedule; the objective breakdown is recomputed."""
    v = sol.values
    nb, na = len(plan.bricks), len(plan.adhesions)
    assign = {}
    for i in range(nb):
        ks = [k for k in range(index.n_robots) if v[f"x_{i}_{k}"] > 0.5]
        if len(ks) != 1:
            raise InconsistentSolutionError(f"brick {i} assigned to robots {ks}")
        assign[i] = ks[0]
    ranks = {j: v[f"r_{j}"] for j in range(na)}
    order = sorted(range(na), key=lambda j: (ranks[j], j))
    if sorted(round(r) for r in ranks.values()) != list(range(na)):
        raise InconsistentSolutionError(f"adhesion ranks {ranks} are not a permutation")
    s = Schedule(
        assign,
        {i: v[f"SB_{i}"] for i in range(nb)},
        {j: v[f"SA_{j}"] for j in range(na)},
        {j: v[f"dA_{j}"] for j in range(na)},
        order,
    )
    s.objective_breakdown = evaluate_objective(s, plan, prob)
    s.makespan = s.objective_breakdown.c_max
    return s
