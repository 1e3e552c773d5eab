"""``masonry-sched`` command line: plan, schedule, validate, simulate, report,
export-mps and import-sol, all driven by one mission config file.

Exit codes: 0 success, 1 schedule failed validation, 2 infeasible instance,
3 config/input error, 4 kinematic infeasibility in the simulator.
"""

from __future__ import annotations

import argparse
import math
import statistics
import sys
from pathlib import Path

from ..simulator import KinematicError, run_mission, simulate
from ..solver.bb import INFEASIBLE
from ..solver.greedy import InfeasibleError
from ..solver.mps import export_mps
from ..solver.pipeline import prepare, solve_schedule
from ..solver.solution import InconsistentSolutionError, SolutionFormatError, extract_schedule, import_solution
from ..validator import check_schedule, curing_report
from ..wallplan import compute_conflicts
from . import figures
from .config import ConfigError, MissionConfig, load_config, resolve_path
from .files import dumps, read_schedule, write_plan, write_schedule

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_KINEMATIC = 0, 1, 2, 3, 4


def _say(msg: str) -> None:
    print(msg, flush=True)


def _fail(msg: str, code: int) -> int:
    print(f"error: {msg}", file=sys.stderr, flush=True)
    return code


def _instance(cfg: MissionConfig):
    plan = cfg.plan()
    return plan, compute_conflicts(plan, cfg.clearance)


def _solver_meta(sol, cfg: MissionConfig, greedy_j: float, backend: str) -> dict:
    return {
        "backend": backend,
        "status": sol.status,
        "objective": sol.objective,
        "best_bound": sol.best_bound,
        "root_bound": sol.root_bound,
        "gap": sol.gap,
        "node_count": sol.node_count,
        "greedy_objective": greedy_j,
        "seed": cfg.solver.seed,
    }


def cmd_plan(cfg: MissionConfig, out: Path) -> int:
    plan, conf = _instance(cfg)
    write_plan(out / "plan.json", plan, conf)
    (out / "wall.svg").write_text(figures.wall_svg(plan), encoding="utf-8")
    _say(f"plan: {len(plan.bricks)} bricks in {plan.n_rows} rows, {len(plan.adhesions)} adhesions -> {out / 'plan.json'}")
    return EXIT_OK


def cmd_export_mps(cfg: MissionConfig, out: Path) -> int:
    plan, conf = _instance(cfg)
    try:
        prep = prepare(plan, conf, cfg.problem())
    except InfeasibleError as e:
        return _fail(str(e), EXIT_INFEASIBLE)
    n = export_mps(prep.model, out / "model.mps")
    _say(f"export-mps: {len(prep.model.columns)} columns, {len(prep.model.rows)} rows, {n} bytes -> {out / 'model.mps'}")
    return EXIT_OK


def _write_schedule_outputs(cfg, out: Path, sched, meta: dict) -> None:
    prob = cfg.problem()
    write_schedule(out / "schedule.json", sched, prob.d_brick, meta)
    (out / "gantt.svg").write_text(
        figures.gantt_svg(sched, prob.n_robots, prob.d_brick, prob.d_spray), encoding="utf-8"
    )


def cmd_schedule(cfg: MissionConfig, out: Path) -> int:
    if cfg.solver.backend == "export":
        return cmd_export_mps(cfg, out)
    plan, conf = _instance(cfg)
    try:
        res = solve_schedule(plan, conf, cfg.problem(), cfg.solve_options())
    except InfeasibleError as e:
        return _fail(str(e), EXIT_INFEASIBLE)
    sol = res.solution
    if sol.status == INFEASIBLE or res.schedule is None:
        return _fail(f"solver status {sol.status}", EXIT_INFEASIBLE)
    meta = _solver_meta(sol, cfg, res.prepared.greedy.objective_breakdown.j, "builtin")
    _write_schedule_outputs(cfg, out, res.schedule, meta)
    _say(
        f"schedule: {sol.status}, J = {sol.objective:.6f}, bound = {sol.best_bound:.6f}, gap = {sol.gap:.3g}, "
        f"C_max = {res.schedule.makespan:.3f} s -> {out / 'schedule.json'}"
    )
    return EXIT_OK


def cmd_import_sol(cfg: MissionConfig, solution: Path, out: Path) -> int:
    plan, conf = _instance(cfg)
    try:
        prep = prepare(plan, conf, cfg.problem())
        sol = import_solution(solution, prep.index, prep.model)
        sched = extract_schedule(sol, prep.index, plan, prep.problem)
    except InfeasibleError as e:
        return _fail(str(e), EXIT_INFEASIBLE)
    except (OSError, SolutionFormatError, InconsistentSolutionError) as e:
        return _fail(f"{solution}: {e}", EXIT_INPUT)
    for w in sol.warnings:
        print(f"warning: {w}", file=sys.stderr)
    meta = _solver_meta(sol, cfg, prep.greedy.objective_breakdown.j, "external")
    meta["status"] = "Imported"
    _write_schedule_outputs(cfg, out, sched, meta)
    rep = check_schedule(sched, plan, conf, prep.problem)
    _say(f"import-sol: J = {sol.objective:.6f}, C_max = {sched.makespan:.3f} s, violations = {len(rep.violations)}")
    return EXIT_OK if rep.passed else EXIT_INVALID


def _validation_dict(rep, curing) -> dict:
    return {
        "passed": rep.passed,
        "violations": [v.as_dict() for v in rep.violations],
        "families": sorted(rep.families()),
        "objective": rep.objective_breakdown.as_dict() if rep.objective_breakdown else None,
        "curing": [c.as_dict() for c in curing],
    }


def _rounded(obj):
    if isinstance(obj, float):
        return round(obj, 9) if math.isfinite(obj) else str(obj)
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v) for v in obj]
    return obj


def cmd_validate(cfg: MissionConfig, schedule_file: Path, out: Path) -> int:
    plan, conf = _instance(cfg)
    prob = cfg.problem()
    try:
        sched, _ = read_schedule(schedule_file)
        rep = check_schedule(sched, plan, conf, prob)
    except (OSError, ValueError, KeyError) as e:
        return _fail(f"{schedule_file}: {e}", EXIT_INPUT)
    curing = curing_report(sched, plan, prob)
    (out / "validation.json").write_text(dumps(_rounded(_validation_dict(rep, curing))), encoding="utf-8")
    if rep.passed:
        _say(f"validate: passed ({len(curing)} curing windows, min slack {min((c.slack for c in curing), default=0):.3f} s)")
        return EXIT_OK
    _say(f"validate: {len(rep.violations)} violations in {', '.join(sorted(rep.families()))}")
    for v in rep.violations[:20]:
        _say(f"  {v.family} {' '.join(v.tasks)} measured {v.measured:.6g} bound {v.bound:.6g}")
    return EXIT_INVALID


def _is_empty(sched) -> bool:
    return not sched.brick_starts and not sched.adhesion_starts


def cmd_simulate(cfg: MissionConfig, schedule_file: Path, out: Path) -> int:
    plan, conf = _instance(cfg)
    prob = cfg.problem()
    try:
        sched, _ = read_schedule(schedule_file)
    except (OSError, ValueError, KeyError) as e:
        return _fail(f"{schedule_file}: {e}", EXIT_INPUT)
    sim = cfg.sim_config()
    if _is_empty(sched):
        trace = run_mission([], sim)
    else:
        try:
            rep = check_schedule(sched, plan, conf, prob)
        except ValueError as e:
            return _fail(f"{schedule_file}: {e}", EXIT_INPUT)
        if not rep.passed:
            return _fail(f"schedule has {len(rep.violations)} violations; run validate", EXIT_INVALID)
        try:
            trace = simulate(sched, plan, prob, sim)
        except KinematicError as e:
            return _fail(f"kinematic infeasibility: {e}", EXIT_KINEMATIC)
    (out / "positions.csv").write_text(trace.positions_csv(), encoding="utf-8")
    (out / "min_distance.csv").write_text(trace.min_distance_csv(), encoding="utf-8")
    (out / "events.log").write_text(trace.events_log(), encoding="utf-8")
    (out / "dmin.svg").write_text(figures.clearance_svg(trace.times, trace.min_distance, cfg.clearance), encoding="utf-8")
    cz = trace.min_distance_construction
    cz_min = float(cz.min()) if len(cz) else math.inf
    _say(
        f"simulate: {len(trace.times)} samples x {trace.n_uavs} UAVs, "
        f"min distance {_num(float(trace.min_distance.min()) if len(trace.times) else math.inf)} m, "
        f"in construction zone {_num(cz_min)} m -> {out / 'positions.csv'}"
    )
    return EXIT_OK


def _num(v: float, fmt: str = ".3f") -> str:
    return format(v, fmt) if math.isfinite(v) else "inf"


def _read_dmin(path: Path) -> float:
    vals = []
    for line in Path(path).read_text(encoding="utf-8").splitlines()[1:]:
        if line.strip():
            vals.append(float(line.split(",")[1]))
    return min(vals, default=math.inf)


def build_report(cfg: MissionConfig, schedule_file: Path, trace_csv: Path | None = None) -> str:
    plan, conf = _instance(cfg)
    prob = cfg.problem()
    sched, meta = read_schedule(schedule_file)
    w = prob.weights
    lines = [
        "mission report",
        "==============",
        f"config: {Path(cfg.source).name}",
        f"wall: {cfg.wall.length:g} x {cfg.wall.height:g} x {cfg.wall.width:g} m, brick {cfg.brick.full_width:g} x {cfg.brick.height:g} m",
        f"tasks: {len(plan.bricks)} bricks in {plan.n_rows} rows, {len(plan.adhesions)} adhesions",
        f"robots: {prob.n_robots} brick UAVs + 1 mortar UAV",
        f"conflicts: {len(conf.brick_brick)} brick-brick, {len(conf.brick_adhesion)} brick-adhesion (r_c = {prob.r_c:g} m)",
        f"durations: brick {prob.d_brick:g} s, spray {prob.d_spray:g} s, curing {prob.d_cure:g} s; v_log {prob.v_log:g} m/s",
        f"weights: span {w.span:g}, brick_log {w.brick_log:g}, cur {w.cur:g}, adh_log {w.adh_log:g}",
        "",
    ]
    rep = check_schedule(sched, plan, conf, prob)
    ob = rep.objective_breakdown
    lines += [
        "objective",
        f"  C_max        {ob.c_max:.6f} s",
        f"  J_brick_log  {ob.j_brick_log:.6f}",
        f"  J_cur        {ob.j_cur:.6f}",
        f"  J_adh_log    {ob.j_adh_log:.6f}",
        f"  J            {ob.j:.6f}",
        "",
    ]
    if meta:
        lines += [
            "solver",
            f"  backend      {meta.get('backend', '?')}",
            f"  status       {meta.get('status', '?')}",
            f"  best bound   {_num(float(meta.get('best_bound', math.nan)), '.6f')}",
            f"  root bound   {_num(float(meta.get('root_bound', math.nan)), '.6f')}",
            f"  gap          {_num(float(meta.get('gap', math.nan)), '.6g')}",
            f"  nodes        {meta.get('node_count', '?')}",
            f"  greedy J     {_num(float(meta.get('greedy_objective', math.nan)), '.6f')}",
            "",
        ]
    lines.append(f"validation: {'passed' if rep.passed else 'FAILED'} ({len(rep.violations)} violations)")
    curing = curing_report(sched, plan, prob)
    if curing:
        slacks = [c.slack for c in curing]
        fracs = [c.fraction for c in curing]
        lines += [
            f"curing: {len(curing)} windows, slack min {min(slacks):.3f} s, median {statistics.median(slacks):.3f} s",
            f"curing: placement position in window median {statistics.median(fracs):.3f}, "
            f"{sum(c.first_half for c in curing)} of {len(curing)} in the first half",
        ]
    else:
        lines.append("curing: no windows")
    if trace_csv is not None:
        lines.append(f"clearance: min distance {_num(_read_dmin(trace_csv))} m (from {Path(trace_csv).name})")
    elif rep.passed and not _is_empty(sched):
        try:
            tr = simulate(sched, plan, prob, cfg.sim_config())
            lines.append(
                f"clearance: min distance {_num(float(tr.min_distance.min()))} m overall, "
                f"{_num(float(tr.min_distance_construction.min()))} m with both UAVs in the construction zone"
            )
        except KinematicError as e:
            lines.append(f"clearance: simulation failed ({e})")
    return "\n".join(lines) + "\n"


def cmd_report(cfg: MissionConfig, schedule_file: Path, out: Path, trace_csv: Path | None = None) -> int:
    try:
        text = build_report(cfg, schedule_file, trace_csv)
    except (OSError, ValueError, KeyError) as e:
        return _fail(str(e), EXIT_INPUT)
    (out / "report.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="masonry-sched", description="Plan, schedule and replay UAV masonry missions.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="mission TOML (default: $MASONRY_SCHED_CONFIG or ./mission.toml)")
    common.add_argument("--out", default=".", help="output directory (created if missing)")
    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--seed", type=int, help="solver seed (recorded; the search is deterministic)")
    solver.add_argument("--time-limit", type=float, help="branch-and-bound time limit [s]")
    solver.add_argument("--gap", type=float, help="relative gap tolerance")
    solver.add_argument("--node-limit", type=int, help="branch-and-bound node limit")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("plan", parents=[common], help="wall plan and elevation SVG")
    sp = sub.add_parser("schedule", parents=[common, solver], help="solve and write schedule + Gantt SVG")
    sp.add_argument("--backend", choices=["builtin", "export"], help="override solver.backend")
    sub.add_parser("export-mps", parents=[common], help="write the MILP as an MPS file")
    sp = sub.add_parser("import-sol", parents=[common], help="read an external solution file")
    sp.add_argument("solution")
    sp = sub.add_parser("validate", parents=[common], help="audit a schedule file")
    sp.add_argument("schedule")
    sp = sub.add_parser("simulate", parents=[common], help="replay a schedule as a UAV mission")
    sp.add_argument("schedule")
    sp = sub.add_parser("report", parents=[common], help="human-readable summary")
    sp.add_argument("schedule")
    sp.add_argument("--trace", help="min-distance CSV from a previous simulate run")
    return p


def _apply_overrides(cfg: MissionConfig, args) -> None:
    s = cfg.solver
    if getattr(args, "seed", None) is not None:
        s.seed = args.seed
    if getattr(args, "time_limit", None) is not None:
        s.time_limit = args.time_limit
    if getattr(args, "gap", None) is not None:
        s.gap = args.gap
    if getattr(args, "node_limit", None) is not None:
        s.node_limit = args.node_limit
    if getattr(args, "backend", None) is not None:
        s.backend = args.backend
    cfg.solve_options()  # validates the overrides


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(resolve_path(args.config))
        _apply_overrides(cfg, args)
    except (ConfigError, ValueError) as e:
        return _fail(str(e), EXIT_INPUT)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    c = args.command
    if c == "plan":
        return cmd_plan(cfg, out)
    if c == "schedule":
        return cmd_schedule(cfg, out)
    if c == "export-mps":
        return cmd_export_mps(cfg, out)
    if c == "import-sol":
        return cmd_import_sol(cfg, Path(args.solution), out)
    if c == "validate":
        return cmd_validate(cfg, Path(args.schedule), out)
    if c == "simulate":
        return cmd_simulate(cfg, Path(args.schedule), out)
    if c == "report":
        return cmd_report(cfg, Path(args.schedule), out, Path(args.trace) if args.trace else None)
    return _fail(f"unknown command {c}", EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
