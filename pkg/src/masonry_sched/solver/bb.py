"""Best-first branch-and-bound over the dual simplex relaxation."""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .lp import DualSimplex, model_arrays

OPTIMAL, FEASIBLE, INFEASIBLE, TIME_LIMIT = "Optimal", "Feasible", "Infeasible", "TimeLimit"
INT_TOL = 1e-6
ABS_GAP = 1e-9


@dataclass(frozen=True)
class SolveOptions:
    time_limit: float = 60.0
    gap_tolerance: float = 1e-4
    node_limit: int = 1_000_000
    deterministic_seed: int = 0  # recorded for provenance; the search itself uses no randomness

    def __post_init__(self):
        if self.gap_tolerance < 0:
            raise ValueError("gap_tolerance must be nonnegative")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        if self.node_limit < 1:
            raise ValueError("node_limit must be at least 1")


@dataclass
class Solution:
    values: dict  # column name -> value
    objective: float
    best_bound: float
    status: str
    node_count: int = 0
    wall_time: float = 0.0
    root_bound: float = -math.inf
    warnings: list = field(default_factory=list)

    @property
    def gap(self) -> float:
        if not math.isfinite(self.objective) or not math.isfinite(self.best_bound):
            return math.inf
        return max(0.0, self.objective - self.best_bound) / max(1.0, abs(self.objective))

    def __getitem__(self, name: str) -> float:
        return self.values[name]


def solution_from_values(model, values: dict, status: str = FEASIBLE) -> Solution:
    obj = model.evaluate_objective(values)
    full = {c.name: float(values.get(c.name, 0.0)) for c in model.columns}
    return Solution(full, obj, -math.inf, status)


def _fractional(x, int_cols):
    frac = np.abs(x[int_cols] - np.round(x[int_cols]))
    return int_cols[frac > INT_TOL]


def _pick_branch(x, cand):
    """Most fractional candidate, lowest column index on ties."""
    dist = np.abs(x[cand] - np.floor(x[cand]) - 0.5)
    best = dist.min()
    return int(cand[dist <= best + 1e-12].min())


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    changes: tuple = field(compare=False)  # ((col, lo, hi), ...) applied on top of the root bounds
    basis: object = field(compare=False)
    x: np.ndarray = field(compare=False)


def solve_bb(model, incumbent: Solution | None = None, opts: SolveOptions = SolveOptions()) -> Solution:
    """Minimise ``model`` exactly (up to ``opts.gap_tolerance``) with branch-and-bound."""
    t0 = time.monotonic()
    deadline = t0 + opts.time_limit
    A, row_lo, row_hi, c, col_lo, col_hi, is_int = model_arrays(model)
    names = [col.name for col in model.columns]
    int_cols = np.flatnonzero(is_int)
    const = model.obj_constant

    inc_x, inc_obj = None, math.inf
    if incumbent is not None and math.isfinite(incumbent.objective):
        cand = model.vector(incumbent.values)
        if not model.violations(incumbent.values):
            inc_x, inc_obj = cand, float(c @ cand) + const

    def finish(status, best_bound, nodes, root_bound):
        if inc_x is None:
            vals, obj = {}, math.inf
        else:
            xs = inc_x.copy()
            xs[int_cols] = np.round(xs[int_cols])
            vals = {n: float(v) for n, v in zip(names, xs)}
            obj = inc_obj
        if status == OPTIMAL:
            best_bound = min(best_bound, obj)
        best_bound = max(best_bound, root_bound) if math.isfinite(root_bound) else best_bound
        if math.isfinite(obj):
            best_bound = min(best_bound, obj)
        return Solution(vals, obj, best_bound, status, nodes, time.monotonic() - t0, root_bound)

    if model.n_cols == 0:
        ok = np.all(row_lo <= 1e-9) and np.all(row_hi >= -1e-9)
        if not ok:
            return Solution({}, math.inf, math.inf, INFEASIBLE, 0, time.monotonic() - t0)
        return Solution({}, const, const, OPTIMAL, 1, time.monotonic() - t0, const)

    engine = DualSimplex(A, row_lo, row_hi, c, deadline=deadline)

    def bounds_for(changes):
        lo, hi = col_lo.copy(), col_hi.copy()
        for j, l, h in changes:
            lo[j], hi[j] = l, h
        return lo, hi

    def polish(x, basis):
        """Fix the integer columns at their rounded values and re-solve the continuous part."""
        lo, hi = col_lo.copy(), col_hi.copy()
        r = np.round(x[int_cols])
        lo[int_cols] = r
        hi[int_cols] = r
        res = engine.solve(lo, hi, basis)
        if not res.ok:
            return None
        xs = res.x
        xs[int_cols] = r
        return xs, float(c @ xs) + const

    root = engine.solve(col_lo, col_hi)
    if root.status == "time_limit":
        return finish(TIME_LIMIT, -math.inf, 0, -math.inf)
    if root.status == "infeasible":
        return finish(INFEASIBLE, math.inf, 1, math.inf) if inc_x is None else finish(
            FEASIBLE, -math.inf, 1, -math.inf
        )
    if not root.ok:
        if root.status == "unbounded" or inc_x is None:
            raise RuntimeError(f"root relaxation {root.status}")
        return finish(FEASIBLE, -math.inf, 1, -math.inf)
    root_bound = root.objective + const

    heap: list[_Node] = []
    unresolved = math.inf  # bound of children whose LP ended without an answer
    seq = 0
    nodes = 1

    def consider(x, obj, basis, changes):
        nonlocal inc_x, inc_obj, seq
        frac = _fractional(x, int_cols)
        if frac.size == 0:
            pol = polish(x, basis)
            if pol is not None and pol[1] < inc_obj - ABS_GAP:
                inc_x, inc_obj = pol
            return
        if obj < inc_obj - ABS_GAP:
            seq += 1
            heapq.heappush(heap, _Node(obj, seq, changes, basis, x))

    consider(root.x, root_bound, engine.basis.copy(), ())

    status = OPTIMAL
    while heap:
        node = heap[0]
        tol = max(ABS_GAP, opts.gap_tolerance * max(1.0, abs(inc_obj))) if inc_x is not None else 0.0
        if inc_x is not None and inc_obj - node.bound <= tol:
            break
        if time.monotonic() > deadline:
            status = TIME_LIMIT
            break
        if nodes >= opts.node_limit:
            status = FEASIBLE
            break
        heapq.heappop(heap)
        j = _pick_branch(node.x, _fractional(node.x, int_cols))
        v = node.x[j]
        lo, hi = bounds_for(node.changes)
        for side in (0, 1):
            if side == 0:
                new = (j, lo[j], math.floor(v))
            else:
                new = (j, math.ceil(v), hi[j])
            if new[1] > new[2]:
                continue
            changes = node.changes + (new,)
            clo, chi = bounds_for(changes)
            res = engine.solve(clo, chi, node.basis)
            nodes += 1
            if res.status == "time_limit":
                heapq.heappush(heap, node)  # keep its bound in the final best_bound
                status = TIME_LIMIT
                break
            if res.status == "infeasible":
                continue
            if not res.ok:
                unresolved = min(unresolved, node.bound)
                continue
            consider(res.x, res.objective + const, engine.basis.copy(), changes)
        if status == TIME_LIMIT:
            break

    if heap:
        best_bound = heap[0].bound
        if status == OPTIMAL:
            best_bound = min(best_bound, inc_obj)
    else:
        best_bound = inc_obj
    best_bound = min(best_bound, unresolved)
    if status == OPTIMAL and unresolved < inc_obj - ABS_GAP:
        status = FEASIBLE
    if inc_x is None:
        if status == OPTIMAL:
            return finish(INFEASIBLE, math.inf, nodes, root_bound)
        return finish(status, best_bound, nodes, root_bound)
    if status == TIME_LIMIT or status == FEASIBLE:
        return finish(status, best_bound, nodes, root_bound)
    return finish(OPTIMAL, best_bound, nodes, root_bound)
