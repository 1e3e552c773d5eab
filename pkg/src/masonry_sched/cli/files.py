"""JSON plan/schedule files and their loaders.

Both are written with sorted keys, two-space indent and times rounded to 9
decimals, so identical inputs give byte-identical files. Solver wall time is
left out for the same reason.

plan.json::

    {"wall_length": .., "bricks": [{id, kind, row, x_start, x_end, z_base, height}],
     "adhesions": [{id, x_start, width, z, top_brick, bottom_brick}],
     "graph": [[[kind, id], [kind, id]], ..],
     "conflicts": {"brick_brick": [[i, j]], "brick_adhesion": [[i, j]]}}

schedule.json::

    {"bricks": [{id, robot, start, end}], "adhesions": [{id, start, duration, end}],
     "adhesion_order": [..], "makespan": .., "objective": {c_max, j_brick_log, j_cur, j_adh_log, j},
     "solver": {status, objective, best_bound, root_bound, gap, node_count, backend, seed}}
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from ..schedule import ObjectiveBreakdown, Schedule
from ..wallplan import AdhesionTask, BrickTask, ConflictSets, DependencyGraph, Kind, WallPlan

DECIMALS = 9


def _r(v: float):
    if v is None:
        return None
    v = float(v)
    if not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    v = round(v, DECIMALS)
    return 0.0 if v == 0 else v


def _f(v) -> float:
    return float(v)  # also takes the "inf" / "-inf" strings written by _r


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def plan_to_dict(plan: WallPlan, conflicts: ConflictSets) -> dict:
    return {
        "wall_length": _r(plan.wall_length),
        "bricks": [
            {
                "id": b.id,
                "kind": b.kind.value,
                "row": b.row,
                "x_start": _r(b.x_start),
                "x_end": _r(b.x_end),
                "z_base": _r(b.z_base),
                "height": _r(b.height),
            }
            for b in plan.bricks
        ],
        "adhesions": [
            {
                "id": a.id,
                "x_start": _r(a.x_start),
                "width": _r(a.width),
                "z": _r(a.z),
                "top_brick": a.top_brick,
                "bottom_brick": a.bottom_brick,
            }
            for a in plan.adhesions
        ],
        "graph": [[list(u), list(v)] for u, v in sorted(plan.graph.edges)],
        "conflicts": {
            "brick_brick": [list(p) for p in sorted(conflicts.brick_brick)],
            "brick_adhesion": [list(p) for p in sorted(conflicts.brick_adhesion)],
        },
    }


def plan_from_dict(d: dict) -> tuple[WallPlan, ConflictSets]:
    bricks = tuple(
        BrickTask(b["id"], Kind(b["kind"]), b["row"], b["x_start"], b["x_end"], b["z_base"], b["height"])
        for b in d["bricks"]
    )
    ads = tuple(
        AdhesionTask(a["id"], a["x_start"], a["width"], a["z"], a["top_brick"], a["bottom_brick"])
        for a in d["adhesions"]
    )
    edges = frozenset((tuple(u), tuple(v)) for u, v in d["graph"])
    conf = ConflictSets(
        frozenset(tuple(p) for p in d["conflicts"]["brick_brick"]),
        frozenset(tuple(p) for p in d["conflicts"]["brick_adhesion"]),
    )
    return WallPlan(bricks, ads, DependencyGraph(edges), d["wall_length"]), conf


def schedule_to_dict(s: Schedule, d_brick: float, solver: dict | None = None) -> dict:
    out = {
        "bricks": [
            {
                "id": i,
                "robot": s.brick_assignments[i],
                "start": _r(s.brick_starts[i]),
                "end": _r(s.brick_starts[i] + d_brick),
            }
            for i in sorted(s.brick_starts)
        ],
        "adhesions": [
            {
                "id": j,
                "start": _r(s.adhesion_starts[j]),
                "duration": _r(s.adhesion_durations[j]),
                "end": _r(s.adhesion_starts[j] + s.adhesion_durations[j]),
            }
            for j in sorted(s.adhesion_starts)
        ],
        "adhesion_order": list(s.adhesion_order),
        "makespan": _r(s.makespan),
        "objective": {k: _r(v) for k, v in s.objective_breakdown.as_dict().items()}
        if s.objective_breakdown is not None
        else None,
    }
    if solver is not None:
        out["solver"] = {k: (_r(v) if isinstance(v, float) else v) for k, v in solver.items()}
    return out


def schedule_from_dict(d: dict) -> tuple[Schedule, dict]:
    ob = d.get("objective")
    s = Schedule(
        brick_assignments={b["id"]: b["robot"] for b in d["bricks"]},
        brick_starts={b["id"]: _f(b["start"]) for b in d["bricks"]},
        adhesion_starts={a["id"]: _f(a["start"]) for a in d["adhesions"]},
        adhesion_durations={a["id"]: _f(a["duration"]) for a in d["adhesions"]},
        adhesion_order=list(d["adhesion_order"]),
        makespan=_f(d["makespan"]),
        objective_breakdown=ObjectiveBreakdown(**{k: _f(v) for k, v in ob.items()}) if ob else None,
    )
    return s, d.get("solver", {})


def write_plan(path: Path, plan: WallPlan, conflicts: ConflictSets) -> None:
    Path(path).write_text(dumps(plan_to_dict(plan, conflicts)), encoding="utf-8")


def read_plan(path: Path) -> tuple[WallPlan, ConflictSets]:
    return plan_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def write_schedule(path: Path, s: Schedule, d_brick: float, solver: dict | None = None) -> None:
    Path(path).write_text(dumps(schedule_to_dict(s, d_brick, solver)), encoding="utf-8")


def read_schedule(path: Path) -> tuple[Schedule, dict]:
    return schedule_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
