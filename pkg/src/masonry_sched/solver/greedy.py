"""List-scheduling heuristic: a feasible incumbent and a makespan horizon for big-M."""

from __future__ import annotations

from ..model import ScheduleProblem, adhesion_distance
from ..schedule import Schedule
from ..validator import evaluate_objective
from ..wallplan import ConflictSets, WallPlan

EPS = 1e-9
MAX_PUSHES = 10000


class InfeasibleError(RuntimeError):
    pass


def _earliest_slot(release: float, dur: float, busy) -> float:
    """Earliest t >= release such that [t, t+dur) meets none of the busy intervals."""
    t = release
    moved = True
    while moved:
        moved = False
        for s, e in busy:
            if s < t + dur - EPS and e > t + EPS:
                t = e
                moved = True
    return t


def adhesion_sequence(plan: WallPlan) -> list[int]:
    """Adhesion order for the single mortar UAV: by top-brick row, then x, then id."""
    return sorted(
        (a.id for a in plan.adhesions),
        key=lambda j: (plan.bricks[plan.adhesions[j].top_brick].row, plan.adhesions[j].x_start, j),
    )


def greedy_schedule(plan: WallPlan, conflicts: ConflictSets, prob: ScheduleProblem) -> Schedule:
    """Feasible schedule built brick by brick in row order.

    The adhesions under a brick are sprayed just before it (in the fixed mortar
    sequence) and the brick goes to whichever robot can start it soonest. When
    the curing window would be missed, the adhesions are pushed later and the
    brick is re-placed.
    """
    if prob.n_robots < 1 or len(prob.pickup_points) != prob.n_robots:
        raise ValueError("need at least one brick robot and one pickup point per robot")
    dB = prob.d_brick
    if prob.d_cure < dB:
        raise InfeasibleError(f"curing time {prob.d_cure} s is shorter than a brick task ({dB} s)")

    order = adhesion_sequence(plan)
    dur = {}
    for p, j in enumerate(order):
        t = 0.0
        if p + 1 < len(order):
            t = adhesion_distance(plan.adhesions[j], plan.adhesions[order[p + 1]]) / prob.v_log
        dur[j] = prob.d_spray + t

    under = {b.id: [] for b in plan.bricks}
    for j in order:
        under[plan.adhesions[j].top_brick].append(j)
    for b, js in under.items():
        need = dB + sum(dur[j] for j in js)
        if js and prob.cure_from_end:
            need -= dur[js[0]]
        if need > prob.d_cure + EPS:
            raise InfeasibleError(
                f"brick {b} needs {need:.3f} s of mortar and placement, curing allows {prob.d_cure} s"
            )

    bb_conf = {}
    for i, j in conflicts.brick_brick:
        bb_conf.setdefault(i, set()).add(j)
        bb_conf.setdefault(j, set()).add(i)
    ba_by_b, ba_by_a = {}, {}
    for i, j in conflicts.brick_adhesion:
        ba_by_b.setdefault(i, set()).add(j)
        ba_by_a.setdefault(j, set()).add(i)

    b_start: dict[int, float] = {}
    b_robot: dict[int, int] = {}
    a_start: dict[int, float] = {}
    robot_busy = [[] for _ in range(prob.n_robots)]
    adh_free = 0.0

    for brick in sorted(plan.bricks, key=lambda b: (b.row, b.id)):
        js = under[brick.id]
        below_end = max((b_start[plan.adhesions[j].bottom_brick] + dB for j in js), default=0.0)
        best = None
        for k in range(prob.n_robots):
            release = 0.0
            for _ in range(MAX_PUSHES):
                t = max(adh_free, release)
                starts = []
                for j in js:
                    a = plan.adhesions[j]
                    rel = max(t, b_start[a.bottom_brick] + dB)
                    busy = [(b_start[i], b_start[i] + dB) for i in ba_by_a.get(j, ()) if i in b_start]
                    s = _earliest_slot(rel, dur[j], busy)
                    starts.append(s)
                    t = s + dur[j]
                rel_b = max(t, below_end) if js else 0.0
                busy = list(robot_busy[k])
                busy += [(b_start[i], b_start[i] + dB) for i in bb_conf.get(brick.id, ()) if i in b_start]
                busy += [(a_start[j], a_start[j] + dur[j]) for j in ba_by_b.get(brick.id, ()) if j in a_start]
                for j, s in zip(js, starts):
                    if j in ba_by_b.get(brick.id, ()):
                        busy.append((s, s + dur[j]))
                sb = _earliest_slot(rel_b, dB, busy)
                if not js:
                    break
                anchor = starts[0] + (dur[js[0]] if prob.cure_from_end else 0.0)
                if sb + dB <= anchor + prob.d_cure + EPS:
                    break
                release = max(release, sb + dB - prob.d_cure - (dur[js[0]] if prob.cure_from_end else 0.0))
            else:
                raise InfeasibleError(f"could not meet the curing window for brick {brick.id}")
            if best is None or sb < best[0] - EPS:
                best = (sb, k, starts)
        sb, k, starts = best
        b_start[brick.id] = sb
        b_robot[brick.id] = k
        robot_busy[k].append((sb, sb + dB))
        for j, s in zip(js, starts):
            a_start[j] = s
            adh_free = s + dur[j]

    sched = Schedule(
        b_robot,
        b_start,
        a_start,
        dur,
        order,
    )
    sched.objective_breakdown = evaluate_objective(sched, plan, prob)
    sched.makespan = sched.objective_breakdown.c_max
    return sched
