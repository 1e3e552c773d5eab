"""Greedy incumbent -> big-M horizon -> model -> branch-and-bound -> Schedule."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from ..model import MilpModel, ScheduleProblem, VarIndex, build_model, choose_big_m, encode_schedule
from ..schedule import Schedule
from ..wallplan import ConflictSets, WallPlan
from .bb import INFEASIBLE, Solution, SolveOptions, solution_from_values, solve_bb
from .greedy import greedy_schedule
from .solution import extract_schedule


@dataclass
class Prepared:
    problem: ScheduleProblem  # copy with big-M constants filled in
    model: MilpModel
    index: VarIndex
    greedy: Schedule
    incumbent: Solution
    horizon: float


def makespan_horizon(greedy: Schedule, prob: ScheduleProblem) -> float:
    """Upper bound on the makespan of some optimal schedule.

    Every objective term other than the makespan is nonnegative on feasible
    schedules, so ``W_span * C_max <= J* <= J_greedy``.
    """
    h = greedy.makespan
    if prob.weights.span > 0 and greedy.objective_breakdown is not None:
        h = max(h, greedy.objective_breakdown.j / prob.weights.span)
    return h


def prepare(plan: WallPlan, conflicts: ConflictSets, prob: ScheduleProblem) -> Prepared:
    greedy = greedy_schedule(plan, conflicts, prob)
    horizon = makespan_horizon(greedy, prob)
    prob = dataclasses.replace(prob)
    if prob.big_m_time is None or prob.big_m_rank is None:
        m_time, m_rank = choose_big_m(plan, prob, horizon)
        prob.big_m_time = prob.big_m_time if prob.big_m_time is not None else m_time
        prob.big_m_rank = prob.big_m_rank if prob.big_m_rank is not None else m_rank
    model, index = build_model(plan, conflicts, prob)
    incumbent = solution_from_values(model, encode_schedule(greedy, index, model, plan, prob))
    return Prepared(prob, model, index, greedy, incumbent, horizon)


@dataclass
class SolveResult:
    prepared: Prepared
    solution: Solution
    schedule: Schedule | None


def solve_schedule(
    plan: WallPlan, conflicts: ConflictSets, prob: ScheduleProblem, opts: SolveOptions = SolveOptions()
) -> SolveResult:
    prep = prepare(plan, conflicts, prob)
    sol = solve_bb(prep.model, prep.incumbent, opts)
    sched = None
    if sol.status != INFEASIBLE and sol.values:
        sched = extract_schedule(sol, prep.index, plan, prep.problem)
    return SolveResult(prep, sol, sched)
