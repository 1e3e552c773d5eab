import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from masonry_sched.cli import main
from masonry_sched.cli.config import ConfigError, load_config, parse_config, resolve_path
from masonry_sched.cli.files import plan_from_dict, plan_to_dict, read_schedule, schedule_from_dict, schedule_to_dict
from masonry_sched.mesh import box_stl
from masonry_sched.solver.greedy import greedy_schedule

from conftest import CONFIGS, mission_problem
from golden_pipeline import FILES, FIXTURES, GOLDEN, run_pipeline

ONE = CONFIGS / "one_brick.toml"
FIVE = CONFIGS / "five_brick.toml"


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# config


def test_shipped_configs_load():
    for p in CONFIGS.glob("*.toml"):
        cfg = load_config(p)
        assert cfg.problem().n_robots == 2
    full = load_config(CONFIGS / "full_wall.toml")
    assert len(full.plan().bricks) == 16
    assert full.solver.time_limit == 600.0


def _cfg_text(**replace):
    text = ONE.read_text()
    for old, new in replace.items():
        text = text.replace(old, new)
    return text


def test_unknown_key_reports_line():
    text = _cfg_text(**{"[brick]\n": "[brick]\ncolour = 1\n"})
    line = text.splitlines().index("colour = 1") + 1
    with pytest.raises(ConfigError, match=rf"^m\.toml:{line}: unknown key 'colour'"):
        parse_config(text, "m.toml")


def test_wrong_type_reports_line():
    text = _cfg_text(**{"brick = 30.0": 'brick = "thirty"'})
    line = text.splitlines().index('brick = "thirty"') + 1
    with pytest.raises(ConfigError, match=rf"m\.toml:{line}: 'brick' has the wrong type"):
        parse_config(text, "m.toml")


@pytest.mark.parametrize(
    "old,new,msg",
    [
        ("[robots]", "[robotz]", "unknown section"),
        ("length = 0.5", "length = -0.5", "must be positive"),
        ('backend = "builtin"', 'backend = "cplex"', "backend"),
        ("span = 2.0", "span = -2.0", "nonnegative"),
        ("timestep = 0.1", "timestep = 2.0", "timestep"),
        ("curing = 60.0", "curing = 20.0", "curing"),
        ("pickups = [[1.5, -1.0], [-1.5, -1.0]]", "pickups = [[1.5]]", "pickups"),
        ("v_log = 0.6", "v_log = 0.6\nspeed = 2", "unknown key 'speed'"),
        ("[wall]", "[wall\n", "m.toml"),
    ],
)
def test_config_errors(old, new, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(_cfg_text(**{old: new}), "m.toml")


def test_missing_section():
    text = _cfg_text(**{"[brick]\nfull_width = 0.5\nheight = 0.1\nthickness = 0.1\n": ""})
    with pytest.raises(ConfigError, match=r"missing required section \[brick\]"):
        parse_config(text, "m.toml")


def test_stl_path_relative_to_config(tmp_path):
    (tmp_path / "w.stl").write_bytes(box_stl(1.0, 0.2, 0.2))
    text = _cfg_text(**{"length = 0.5\nheight = 0.1\nthickness = 0.2": 'stl_path = "w.stl"'})
    (tmp_path / "m.toml").write_text(text)
    assert len(load_config(tmp_path / "m.toml").plan().bricks) == 5
    (tmp_path / "w.stl").write_bytes(b"garbage")
    with pytest.raises(ConfigError, match="stl_path"):
        load_config(tmp_path / "m.toml")


def test_config_resolution(monkeypatch, tmp_path):
    monkeypatch.delenv("MASONRY_SCHED_CONFIG", raising=False)
    assert resolve_path(None) == Path("mission.toml")
    monkeypatch.setenv("MASONRY_SCHED_CONFIG", str(FIVE))
    assert resolve_path(None) == FIVE
    assert resolve_path(str(ONE)) == ONE


def test_env_var_drives_cli(monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("MASONRY_SCHED_CONFIG", str(FIVE))
    code, out, _ = _run(capsys, "plan", "--out", str(tmp_path))
    assert code == 0 and "5 bricks" in out


def test_missing_config_is_input_error(tmp_path, capsys):
    code, _, err = _run(capsys, "plan", "--config", str(tmp_path / "nope.toml"), "--out", str(tmp_path))
    assert code == 3 and "nope.toml" in err


def test_bad_override_is_input_error(tmp_path, capsys):
    code, _, _ = _run(capsys, "schedule", "--config", str(ONE), "--out", str(tmp_path), "--gap", "-1")
    assert code == 3


# files


def test_plan_json_round_trip(five_plan):
    from masonry_sched.wallplan import compute_conflicts

    conf = compute_conflicts(five_plan, 0.8)
    d = plan_to_dict(five_plan, conf)
    plan, conf2 = plan_from_dict(json.loads(json.dumps(d)))
    assert plan == five_plan and conf2 == conf


def test_schedule_json_round_trip(five_plan):
    from masonry_sched.wallplan import compute_conflicts

    s = greedy_schedule(five_plan, compute_conflicts(five_plan, 0.8), mission_problem())
    d = schedule_to_dict(s, 30.0, {"status": "Optimal", "best_bound": float("inf")})
    back, meta = schedule_from_dict(json.loads(json.dumps(d)))
    assert back.brick_assignments == s.brick_assignments
    assert back.adhesion_order == s.adhesion_order
    assert back.brick_starts == pytest.approx(s.brick_starts, abs=1e-9)
    assert back.objective_breakdown.j == pytest.approx(s.objective_breakdown.j, abs=1e-9)
    assert meta["best_bound"] == "inf"


# commands


@pytest.fixture(scope="module")
def five_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("five")
    codes = run_pipeline(FIVE, out)
    return out, codes


def test_pipeline_exit_codes(five_run):
    _, codes = five_run
    assert codes == [0] * 6


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_golden_files(name, tmp_path, five_run):
    if name == "five_brick":
        out = five_run[0]
    else:
        out = tmp_path
        assert run_pipeline(FIXTURES[name], out) == [0] * 6
    for f in FILES:
        assert (out / f).read_bytes() == (GOLDEN / name / f).read_bytes(), f


def test_positions_are_byte_deterministic(five_run, tmp_path, capsys):
    out, _ = five_run
    sched = str(out / "schedule.json")
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert _run(capsys, "simulate", sched, "--config", str(FIVE), "--out", str(d))[0] == 0
    assert (a / "positions.csv").read_bytes() == (b / "positions.csv").read_bytes()
    rows = (a / "positions.csv").read_text().splitlines()
    steps = len((a / "min_distance.csv").read_text().splitlines()) - 1
    assert len(rows) == 3 * steps + 1


def test_tampered_schedule_names_family(five_run, tmp_path, capsys):
    out, _ = five_run
    d = json.loads((out / "schedule.json").read_text())
    d["bricks"][2]["start"] = 0.0  # a top brick placed before its mortar
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(d))
    code, text, _ = _run(capsys, "validate", str(bad), "--config", str(FIVE), "--out", str(tmp_path))
    assert code == 1
    assert "Precedence" in text
    rep = json.loads((tmp_path / "validation.json").read_text())
    assert not rep["passed"] and "Precedence" in rep["families"]
    code, _, err = _run(capsys, "simulate", str(bad), "--config", str(FIVE), "--out", str(tmp_path))
    assert code == 1 and "validate" in err


def test_empty_schedule_simulates_to_empty_trace(tmp_path, capsys):
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"bricks": [], "adhesions": [], "adhesion_order": [], "makespan": 0.0, "objective": None}))
    code, _, _ = _run(capsys, "simulate", str(empty), "--config", str(FIVE), "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "positions.csv").read_text() == "t,uav,x,y,z\n"
    assert (tmp_path / "events.log").read_text() == ""


def test_malformed_schedule_is_input_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert _run(capsys, "validate", str(bad), "--config", str(FIVE), "--out", str(tmp_path))[0] == 3
    assert _run(capsys, "validate", str(tmp_path / "missing.json"), "--config", str(FIVE), "--out", str(tmp_path))[0] == 3


def test_schedule_for_another_wall_is_input_error(five_run, tmp_path, capsys):
    out, _ = five_run
    code, _, _ = _run(capsys, "validate", str(out / "schedule.json"), "--config", str(CONFIGS / "full_wall.toml"), "--out", str(tmp_path))
    assert code == 3


def test_infeasible_instance_exit_code(tmp_path, capsys):
    text = FIVE.read_text().replace("curing = 60.0", "curing = 40.0")
    cfg = tmp_path / "m.toml"
    cfg.write_text(text)
    code, _, err = _run(capsys, "schedule", "--config", str(cfg), "--out", str(tmp_path))
    assert code == 2 and "curing" in err


def test_kinematic_exit_code(tmp_path, capsys):
    text = ONE.read_text().replace("brick = 30.0", "brick = 10.0").replace("curing = 60.0", "curing = 20.0")
    cfg = tmp_path / "m.toml"
    cfg.write_text(text)
    assert _run(capsys, "schedule", "--config", str(cfg), "--out", str(tmp_path))[0] == 0
    code, _, err = _run(capsys, "simulate", str(tmp_path / "schedule.json"), "--config", str(cfg), "--out", str(tmp_path))
    assert code == 4 and "kinematic" in err


def test_export_backend_writes_mps(tmp_path, capsys):
    code, out, _ = _run(capsys, "schedule", "--backend", "export", "--config", str(ONE), "--out", str(tmp_path))
    assert code == 0 and (tmp_path / "model.mps").exists() and not (tmp_path / "schedule.json").exists()


def test_import_sol_round_trip(tmp_path, capsys):
    from masonry_sched.solver.pipeline import prepare
    from masonry_sched.solver.solution import write_solution

    cfg = load_config(FIVE)
    plan = cfg.plan()
    from masonry_sched.wallplan import compute_conflicts

    prep = prepare(plan, compute_conflicts(plan, 0.8), cfg.problem())
    sol = tmp_path / "greedy.sol"
    write_solution(prep.incumbent, sol, prep.model)
    code, out, _ = _run(capsys, "import-sol", str(sol), "--config", str(FIVE), "--out", str(tmp_path))
    assert code == 0 and "violations = 0" in out
    s, meta = read_schedule(tmp_path / "schedule.json")
    assert meta["status"] == "Imported" and meta["backend"] == "external"
    assert s.objective_breakdown.j == pytest.approx(prep.greedy.objective_breakdown.j, rel=1e-9)
    # a feasible-looking file that breaks a constraint is reported as invalid
    lines = sol.read_text().splitlines()
    lines = [l if not l.startswith("SB_2 ") else "SB_2 0.0" for l in lines]
    sol.write_text("\n".join(lines) + "\n")
    assert _run(capsys, "import-sol", str(sol), "--config", str(FIVE), "--out", str(tmp_path))[0] == 1
    sol.write_text("x_0_0 0.5\n")
    assert _run(capsys, "import-sol", str(sol), "--config", str(FIVE), "--out", str(tmp_path))[0] == 3


def test_report_without_trace_simulates(five_run, tmp_path, capsys):
    out, _ = five_run
    code, text, _ = _run(capsys, "report", str(out / "schedule.json"), "--config", str(FIVE), "--out", str(tmp_path))
    assert code == 0
    assert "with both UAVs in the construction zone" in text
    assert (tmp_path / "report.txt").read_text() == text


def test_module_entry_point(tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "masonry_sched", "plan", "--config", str(ONE), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
        env={**os.environ, "PYTHONHASHSEED": "1"},
    )
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "plan.json").read_bytes() == (GOLDEN / "one_brick" / "plan.json").read_bytes()


def test_help_lists_commands(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--help"])
    assert e.value.code == 0
    text = capsys.readouterr().out
    for c in ("plan", "schedule", "export-mps", "import-sol", "validate", "simulate", "report"):
        assert c in text
