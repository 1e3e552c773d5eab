import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from masonry_sched.model import BINARY, CONTINUOUS, INTEGER, MilpModel
from masonry_sched.solver.bb import solution_from_values
from masonry_sched.solver.mps import MPSError, export_mps, mps_text, parse_mps, read_mps
from masonry_sched.solver.pipeline import prepare
from masonry_sched.solver.solution import (
    InconsistentSolutionError,
    SolutionFormatError,
    extract_schedule,
    import_solution,
    write_solution,
)
from masonry_sched.validator import check_schedule
from masonry_sched.wallplan import compute_conflicts

from conftest import mission_problem, wall


def _same_model(a: MilpModel, b: MilpModel):
    assert [(c.name, c.lb, c.ub, c.kind) for c in a.columns] == [(c.name, c.lb, c.ub, c.kind) for c in b.columns]
    assert [(r.name, r.sense, r.rhs) for r in a.rows] == [(r.name, r.sense, r.rhs) for r in b.rows]
    for ra, rb in zip(a.rows, b.rows):
        assert {j: v for j, v in ra.coefs.items() if v} == rb.coefs
    assert {j: v for j, v in a.objective.items() if v} == {j: v for j, v in b.objective.items() if v}
    assert a.obj_constant == b.obj_constant


@pytest.fixture(scope="module")
def five_prep(five_plan):
    return prepare(five_plan, compute_conflicts(five_plan, 0.8), mission_problem())


def test_single_brick_mps():
    plan = wall(0.5, 0.1)
    prep = prepare(plan, compute_conflicts(plan, 0.8), mission_problem())
    text = mps_text(prep.model)
    back = parse_mps(text)
    # two robots: one assignment binary per robot
    assert sorted(c.name for c in back.columns) == ["Cmax", "SB_0", "x_0_0", "x_0_1"]
    assert sorted(r.name for r in back.rows) == ["assign_0", "mspan_0"]


def test_single_robot_single_brick_mps():
    from masonry_sched.model import ScheduleProblem

    plan = wall(0.5, 0.1)
    prep = prepare(plan, compute_conflicts(plan, 0.8), ScheduleProblem(1, [(1.0, -1.0)]))
    text = mps_text(prep.model)
    back = parse_mps(text)
    assert back.n_cols == 3 and back.n_rows == 2
    assert text.count("'INTORG'") == 1 and text.count("'INTEND'") == 1
    assert text.startswith("NAME ") and text.rstrip().endswith("ENDATA")
    _same_model(prep.model, back)


def test_five_brick_round_trip(five_prep, tmp_path):
    path = tmp_path / "m.mps"
    n = export_mps(five_prep.model, path)
    assert n == path.stat().st_size
    _same_model(five_prep.model, read_mps(path))
    buf = io.StringIO()
    export_mps(five_prep.model, buf)
    assert buf.getvalue() == path.read_text()


def test_export_is_byte_stable(five_plan):
    a = mps_text(prepare(five_plan, compute_conflicts(five_plan, 0.8), mission_problem()).model)
    b = mps_text(prepare(five_plan, compute_conflicts(five_plan, 0.8), mission_problem()).model)
    assert a == b


def _random_model(rng):
    m = MilpModel("rnd")
    n = int(rng.integers(1, 6))
    for j in range(n):
        kind = str(rng.choice([BINARY, INTEGER, CONTINUOUS]))
        if kind == BINARY:
            lb, ub = 0.0, 1.0
        else:
            lb = float(rng.choice([0.0, -math.inf, -2.5, 3.0]))
            ub = float(rng.choice([math.inf, 7.0, lb if math.isfinite(lb) else 1.0]))
            ub = max(ub, lb) if math.isfinite(lb) else ub
        m.add_column(f"c{j}", lb, ub, kind)
        if rng.random() < 0.7:
            m.add_objective(j, float(rng.normal()))
    for k in range(int(rng.integers(0, 5))):
        terms = [(j, float(rng.normal())) for j in range(n) if rng.random() < 0.6]
        m.add_row(f"row_{k}", terms, str(rng.choice(["<=", ">=", "="])), float(rng.normal() * 10))
    m.obj_constant = float(rng.choice([0.0, 1.25]))
    return m


@settings(max_examples=80)
@given(st.integers(0, 2**32 - 1))
def test_mps_round_trip_property(seed):
    m = _random_model(np.random.default_rng(seed))
    _same_model(m, parse_mps(mps_text(m)))


def test_parse_mps_errors():
    with pytest.raises(MPSError):
        parse_mps("NAME x\nROWS\n N OBJ\n L r1\nCOLUMNS\n x r2 1\nENDATA\n")
    with pytest.raises(MPSError):
        parse_mps("NAME x\nROWS\n Q r1\nENDATA\n")


def test_mps_readable_by_highs(five_prep, tmp_path):
    highspy = pytest.importorskip("highspy")
    path = tmp_path / "m.mps"
    export_mps(five_prep.model, path)
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    assert h.readModel(str(path)) == highspy.HighsStatus.kOk
    assert h.getNumCol() == five_prep.model.n_cols and h.getNumRow() == five_prep.model.n_rows
    h.setOptionValue("time_limit", 120.0)
    h.run()
    assert h.getInfo().objective_function_value == pytest.approx(395.7922789379193, rel=1e-6)


# solution files


def test_solution_round_trip(five_prep, five_plan, tmp_path):
    path = tmp_path / "sol.txt"
    write_solution(five_prep.incumbent, path, five_prep.model)
    sol = import_solution(path, five_prep.index, five_prep.model)
    assert sol.values == five_prep.incumbent.values
    assert sol.objective == pytest.approx(five_prep.incumbent.objective)
    s = extract_schedule(sol, five_prep.index, five_plan, five_prep.problem)
    assert check_schedule(s, five_plan, compute_conflicts(five_plan, 0.8), five_prep.problem).passed
    assert s.objective_breakdown.j == pytest.approx(five_prep.greedy.objective_breakdown.j)


def test_import_without_model(five_prep):
    text = "".join(f"{k} {v!r}\n" for k, v in five_prep.incumbent.values.items())
    sol = import_solution(text, five_prep.index)
    assert sol.values == five_prep.incumbent.values and math.isnan(sol.objective)


def test_import_empty_file(five_prep):
    with pytest.raises(SolutionFormatError, match="missing continuous"):
        import_solution("", five_prep.index, five_prep.model)
    plan = wall(0.5, 0.1)
    empty = prepare(plan, compute_conflicts(plan, 0.8), mission_problem())
    with pytest.raises(SolutionFormatError):
        import_solution("# nothing\n", empty.index, empty.model)


def test_import_nonintegral_binary(five_prep):
    vals = dict(five_prep.incumbent.values)
    vals["x_0_0"] = 0.4999
    text = "".join(f"{k} {v!r}\n" for k, v in vals.items())
    with pytest.raises(SolutionFormatError, match="x_0_0"):
        import_solution(text, five_prep.index, five_prep.model)


def test_import_snaps_near_integers(five_prep):
    vals = dict(five_prep.incumbent.values)
    vals["x_0_0"] += 5e-7
    text = "".join(f"{k} {v!r}\n" for k, v in vals.items())
    sol = import_solution(text, five_prep.index, five_prep.model)
    assert sol["x_0_0"] in (0.0, 1.0)


def test_import_unknown_name_warns(five_prep):
    text = "".join(f"{k} {v!r}\n" for k, v in five_prep.incumbent.values.items()) + "bogus 1\n"
    sol = import_solution(text, five_prep.index, five_prep.model)
    assert len(sol.warnings) == 1 and "bogus" in sol.warnings[0]


@pytest.mark.parametrize("line", ["SB_0", "SB_0 abc", "SB_0 nan"])
def test_import_bad_lines(five_prep, line):
    with pytest.raises(SolutionFormatError, match="line 1"):
        import_solution(line + "\n", five_prep.index, five_prep.model)


def test_absent_binaries_default_to_zero(five_prep):
    text = "".join(f"{k} {v!r}\n" for k, v in five_prep.incumbent.values.items() if v != 0.0 or k[0].isupper() or k.startswith(("SA", "dA", "tA")))
    sol = import_solution(text, five_prep.index, five_prep.model)
    assert sol.values == five_prep.incumbent.values


def test_extract_schedule_example(five_prep, five_plan):
    s = extract_schedule(five_prep.incumbent, five_prep.index, five_plan, five_prep.problem)
    g = five_prep.greedy
    assert s.brick_assignments == g.brick_assignments
    assert s.adhesion_order == g.adhesion_order
    assert s.brick_starts == pytest.approx(g.brick_starts)
    assert s.makespan == pytest.approx(g.makespan)


def test_extract_rejects_double_assignment(five_prep, five_plan):
    vals = dict(five_prep.incumbent.values)
    vals["x_0_0"] = vals["x_0_1"] = 1.0
    with pytest.raises(InconsistentSolutionError, match="brick 0"):
        extract_schedule(solution_from_values(five_prep.model, vals), five_prep.index, five_plan, five_prep.problem)


def test_extract_rejects_bad_ranks(five_prep, five_plan):
    vals = dict(five_prep.incumbent.values)
    vals["r_0"] = vals["r_1"]
    with pytest.raises(InconsistentSolutionError, match="ranks"):
        extract_schedule(solution_from_values(five_prep.model, vals), five_prep.index, five_plan, five_prep.problem)
