"""Arithmetic audit of schedules, objective breakdown, curing windows and a
brute-force optimum used as a test oracle.

Nothing here goes through ``MilpModel``: every constraint family is re-checked
directly on start times, and the oracle builds its own small LP per fixed
combinatorial choice.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .model import ScheduleProblem, adhesion_distance, pickup_distance
from .schedule import ObjectiveBreakdown, Schedule
from .wallplan import ConflictSets, WallPlan

TOL = 1e-6

FAMILIES = (
    "StartBound",
    "RobotSeriality",
    "AdhesionSeriality",
    "Precedence",
    "Conflict",
    "Curing",
    "SuccessorStructure",
)


@dataclass(frozen=True)
class Violation:
    family: str
    tasks: tuple
    measured: float
    bound: float

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "tasks": list(self.tasks),
            "measured": self.measured,
            "bound": self.bound,
        }


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    objective_breakdown: ObjectiveBreakdown | None = None

    @property
    def passed(self) -> bool:
        return not self.violations

    def families(self) -> set:
        return {v.family for v in self.violations}


@dataclass(frozen=True)
class CuringRecord:
    brick: int
    adhesion: int
    mortar_end: float
    window_open: float
    window_close: float
    placed_end: float

    @property
    def slack(self) -> float:
        return self.window_close - self.placed_end

    @property
    def first_half(self) -> bool:
        return self.placed_end - self.window_open <= 0.5 * (self.window_close - self.window_open)

    @property
    def fraction(self) -> float:
        """Position of the placement inside the window, 0 at the open end, 1 at the close."""
        span = self.window_close - self.window_open
        return (self.placed_end - self.window_open) / span if span > 0 else 0.0

    def as_dict(self) -> dict:
        return {
            "brick": self.brick,
            "adhesion": self.adhesion,
            "mortar_end": self.mortar_end,
            "window_open": self.window_open,
            "window_close": self.window_close,
            "placed_end": self.placed_end,
            "slack": self.slack,
        }


def expected_durations(order, plan: WallPlan, prob: ScheduleProblem) -> dict:
    """Adhesion durations implied by an execution order (spray + hop to the successor)."""
    out = {}
    for p, a in enumerate(order):
        t = 0.0
        if p + 1 < len(order):
            t = adhesion_distance(plan.adhesions[a], plan.adhesions[order[p + 1]]) / prob.v_log
        out[a] = prob.d_spray + t
    return out


def _overlap(s1, e1, s2, e2) -> float:
    return min(e1, e2) - max(s1, s2)


def evaluate_objective(s: Schedule, plan: WallPlan, prob: ScheduleProblem) -> ObjectiveBreakdown:
    dB, w = prob.d_brick, prob.weights
    c_max = max((s.brick_starts[b.id] + dB for b in plan.bricks), default=0.0)
    j_blog = sum(
        pickup_distance(b, prob.pickup_points[s.brick_assignments[b.id]], plan.wall_length)
        for b in plan.bricks
    )
    dur = expected_durations(s.adhesion_order, plan, prob)
    j_cur = 0.0
    for a in plan.adhesions:
        end = s.adhesion_starts[a.id] + dur.get(a.id, s.adhesion_durations[a.id])
        for br in plan.ancestors(a.id):
            j_cur += s.brick_starts[br] - end
    order = s.adhesion_order
    j_alog = sum(
        adhesion_distance(plan.adhesions[order[p]], plan.adhesions[order[p + 1]])
        for p in range(len(order) - 1)
    )
    j = w.span * c_max + w.brick_log * j_blog + w.cur * j_cur + w.adh_log * j_alog
    return ObjectiveBreakdown(c_max, j_blog, j_cur, j_alog, j)


def _window_close(s: Schedule, a: int, dur: dict, prob: ScheduleProblem) -> float:
    base = s.adhesion_starts[a] + (dur[a] if prob.cure_from_end else 0.0)
    return base + prob.d_cure


def check_schedule(
    s: Schedule, plan: WallPlan, conflicts: ConflictSets, prob: ScheduleProblem, tol: float = TOL
) -> ValidationReport:
    """Re-check every constraint family on the schedule's numbers."""
    bricks, ads = plan.bricks, plan.adhesions
    for b in bricks:
        if b.id not in s.brick_starts or b.id not in s.brick_assignments:
            raise ValueError(f"schedule lacks brick {b.id}")
        if not 0 <= s.brick_assignments[b.id] < prob.n_robots:
            raise ValueError(f"brick {b.id} assigned to unknown robot {s.brick_assignments[b.id]}")
    for a in ads:
        if a.id not in s.adhesion_starts or a.id not in s.adhesion_durations:
            raise ValueError(f"schedule lacks adhesion {a.id}")

    dB = prob.d_brick
    out: list[Violation] = []
    bs, as_, ad = s.brick_starts, s.adhesion_starts, s.adhesion_durations

    for b in bricks:
        if bs[b.id] < -tol:
            out.append(Violation("StartBound", (f"B{b.id}",), bs[b.id], 0.0))
    for a in ads:
        if as_[a.id] < -tol:
            out.append(Violation("StartBound", (f"A{a.id}",), as_[a.id], 0.0))

    for i, bi in enumerate(bricks):
        for bj in bricks[i + 1:]:
            if s.brick_assignments[bi.id] != s.brick_assignments[bj.id]:
                continue
            ov = _overlap(bs[bi.id], bs[bi.id] + dB, bs[bj.id], bs[bj.id] + dB)
            if ov > tol:
                out.append(Violation("RobotSeriality", (f"B{bi.id}", f"B{bj.id}"), ov, 0.0))

    for i, ai in enumerate(ads):
        for aj in ads[i + 1:]:
            ov = _overlap(as_[ai.id], as_[ai.id] + ad[ai.id], as_[aj.id], as_[aj.id] + ad[aj.id])
            if ov > tol:
                out.append(Violation("AdhesionSeriality", (f"A{ai.id}", f"A{aj.id}"), ov, 0.0))

    for a, br in sorted(plan.precedence_ab):
        end = as_[a] + ad[a]
        if end > bs[br] + tol:
            out.append(Violation("Precedence", (f"A{a}", f"B{br}"), end, bs[br]))
    for br, a in sorted(plan.precedence_ba):
        end = bs[br] + dB
        if end > as_[a] + tol:
            out.append(Violation("Precedence", (f"B{br}", f"A{a}"), end, as_[a]))

    for i, j in sorted(conflicts.brick_brick):
        ov = _overlap(bs[i], bs[i] + dB, bs[j], bs[j] + dB)
        if ov > tol:
            out.append(Violation("Conflict", (f"B{i}", f"B{j}"), ov, 0.0))
    for i, j in sorted(conflicts.brick_adhesion):
        ov = _overlap(bs[i], bs[i] + dB, as_[j], as_[j] + ad[j])
        if ov > tol:
            out.append(Violation("Conflict", (f"B{i}", f"A{j}"), ov, 0.0))

    order = list(s.adhesion_order)
    dur = expected_durations(order, plan, prob) if sorted(order) == sorted(a.id for a in ads) else None
    if dur is None:
        out.append(Violation("SuccessorStructure", tuple(f"A{a}" for a in order), len(order), len(ads)))
        dur = {a.id: ad[a.id] for a in ads}
    else:
        for p in range(len(order) - 1):
            if as_[order[p + 1]] < as_[order[p]] - tol:
                out.append(
                    Violation(
                        "SuccessorStructure", (f"A{order[p]}", f"A{order[p + 1]}"),
                        as_[order[p + 1]], as_[order[p]],
                    )
                )
        for a in order:
            if abs(ad[a] - dur[a]) > tol:
                out.append(Violation("SuccessorStructure", (f"A{a}",), ad[a], dur[a]))

    for a in ads:
        close = _window_close(s, a.id, dur, prob)
        for br in plan.ancestors(a.id):
            end = bs[br] + dB
            if end > close + tol:
                out.append(Violation("Curing", (f"A{a.id}", f"B{br}"), close - end, 0.0))

    return ValidationReport(out, evaluate_objective(s, plan, prob))


def curing_report(s: Schedule, plan: WallPlan, prob: ScheduleProblem) -> list[CuringRecord]:
    dur = expected_durations(s.adhesion_order, plan, prob)
    recs = []
    for a in plan.adhesions:
        mortar_end = s.adhesion_starts[a.id] + dur[a.id]
        close = _window_close(s, a.id, dur, prob)
        for br in plan.ancestors(a.id):
            recs.append(
                CuringRecord(br, a.id, mortar_end, mortar_end, close, s.brick_starts[br] + prob.d_brick)
            )
    recs.sort(key=lambda r: (r.brick, r.adhesion))
    return recs


# -- brute-force oracle ---------------------------------------------------------


class OracleLimitError(ValueError):
    pass


@dataclass(frozen=True)
class OracleLimits:
    max_bricks: int = 4
    max_adhesions: int = 3
    max_robots: int = 2


def _feasible_differences(n: int, edges) -> bool:
    """Bellman-Ford check that ``t_v >= t_u + w`` has no positive cycle."""
    dist = [0.0] * n
    for _ in range(n):
        changed = False
        for u, v, w in edges:
            if dist[u] + w > dist[v] + 1e-9:
                dist[v] = dist[u] + w
                changed = True
        if not changed:
            return True
    return False


def brute_force_oracle(
    plan: WallPlan,
    conflicts: ConflictSets,
    prob: ScheduleProblem,
    limits: OracleLimits = OracleLimits(),
):
    """Global optimum by enumerating every discrete choice and solving one LP per leaf.

    Returns ``(Schedule, objective)``; the schedule is None when nothing is feasible.
    """
    nb, na, N = len(plan.bricks), len(plan.adhesions), prob.n_robots
    if nb > limits.max_bricks or na > limits.max_adhesions or N > limits.max_robots:
        raise OracleLimitError(f"instance {nb}/{na}/{N} exceeds oracle limits")
    dB, w = prob.d_brick, prob.weights
    # LP variables: SB_0..SB_{nb-1}, SA_0..SA_{na-1}, Cmax, plus a time origin node for Bellman-Ford
    iSB = list(range(nb))
    iSA = [nb + j for j in range(na)]
    iC = nb + na
    nv = nb + na + 1
    origin = nv

    lB = [[pickup_distance(b, prob.pickup_points[k], plan.wall_length) for k in range(N)] for b in plan.bricks]
    ancestors = {a.id: plan.ancestors(a.id) for a in plan.adhesions}

    best_obj, best = math.inf, None
    for assign in itertools.product(range(N), repeat=nb):
        groups = [[i for i in range(nb) if assign[i] == k] for k in range(N)]
        const_b = w.brick_log * sum(lB[i][assign[i]] for i in range(nb))
        for orders in itertools.product(*(itertools.permutations(g) for g in groups)):
            pos = {}
            for seq in orders:
                for p, i in enumerate(seq):
                    pos[i] = p
            robot_edges = []
            for seq in orders:
                for p in range(len(seq) - 1):
                    robot_edges.append((iSB[seq[p]], iSB[seq[p + 1]], dB))
            free_bb = [
                (i, j) for (i, j) in sorted(conflicts.brick_brick) if assign[i] != assign[j]
            ]
            ordered_bb = [
                (i, j) if pos[i] < pos[j] else (j, i)
                for (i, j) in sorted(conflicts.brick_brick) if assign[i] == assign[j]
            ]
            for aorder in itertools.permutations(range(na)):
                dur = expected_durations(aorder, plan, prob)
                const_a = w.adh_log * sum(
                    adhesion_distance(plan.adhesions[aorder[p]], plan.adhesions[aorder[p + 1]])
                    for p in range(na - 1)
                )
                base = list(robot_edges)
                base += [(iSB[i], iSB[j], dB) for i, j in ordered_bb]
                for p in range(na - 1):
                    base.append((iSA[aorder[p]], iSA[aorder[p + 1]], dur[aorder[p]]))
                for a, br in plan.precedence_ab:
                    base.append((iSA[a], iSB[br], dur[a]))
                for br, a in plan.precedence_ba:
                    base.append((iSB[br], iSA[a], dB))
                for a, brs in ancestors.items():
                    for br in brs:
                        # SB + dB <= SA (+ dA) + d_cure
                        lag = dB - prob.d_cure - (dur[a] if prob.cure_from_end else 0.0)
                        base.append((iSB[br], iSA[a], lag))
                for i in range(nb):
                    base.append((iSB[i], iC, dB))
                for v in range(nv):
                    base.append((origin, v, 0.0))
                if not _feasible_differences(nv + 1, base):
                    continue
                ba = sorted(conflicts.brick_adhesion)
                for bits in itertools.product((0, 1), repeat=len(free_bb) + len(ba)):
                    edges = list(base)
                    for (i, j), g in zip(free_bb, bits):
                        edges.append((iSB[i], iSB[j], dB) if g else (iSB[j], iSB[i], dB))
                    for (i, j), g in zip(ba, bits[len(free_bb):]):
                        edges.append((iSB[i], iSA[j], dB) if g else (iSA[j], iSB[i], dur[j]))
                    if not _feasible_differences(nv + 1, edges):
                        continue
                    res = _solve_difference_lp(edges, nv, origin, iSB, iSA, iC, ancestors, prob)
                    if res is None:
                        continue
                    lp_obj, xs = res
                    const_cur = -w.cur * sum(dur[a] * len(brs) for a, brs in ancestors.items())
                    obj = lp_obj + const_b + const_a + const_cur
                    if obj < best_obj - 1e-9:
                        best_obj = obj
                        best = Schedule(
                            {i: assign[i] for i in range(nb)},
                            {i: float(xs[iSB[i]]) for i in range(nb)},
                            {j: float(xs[iSA[j]]) for j in range(na)},
                            {j: dur[j] for j in range(na)},
                            list(aorder),
                        )
    if best is not None:
        best.objective_breakdown = evaluate_objective(best, plan, prob)
        best.makespan = best.objective_breakdown.c_max
    return best, best_obj


def _solve_difference_lp(edges, nv, origin, iSB, iSA, iC, ancestors, prob):
    w = prob.weights
    c = np.zeros(nv)
    c[iC] = w.span
    for a, brs in ancestors.items():
        for br in brs:
            c[iSB[br]] += w.cur
            c[iSA[a]] -= w.cur
    rows, rhs = [], []
    for u, v, lag in edges:
        if u == origin:
            continue
        # t_u + lag <= t_v
        r = np.zeros(nv)
        r[u] += 1.0
        r[v] -= 1.0
        rows.append(r)
        rhs.append(-lag)
    res = linprog(
        c,
        A_ub=np.array(rows) if rows else None,
        b_ub=np.array(rhs) if rows else None,
        bounds=[(0, None)] * nv,
        method="highs",
    )
    if res.status != 0:
        return None
    return float(res.fun), res.x
