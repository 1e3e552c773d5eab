"""Mixed-integer formulation of the brick/mortar UAV scheduling problem.

The model is kept solver-agnostic: ``MilpModel`` is a plain list of columns,
rows and objective coefficients. ``build_model`` allocates every variable
family up front and then calls one ``emit_*`` function per constraint family.

Column names: ``SB_<i>``, ``SA_<j>``, ``dA_<j>``, ``tA_<j>``, ``x_<i>_<k>``,
``alpha_<k>_<i>_<j>``, ``beta_<i>_<j>``, ``gammaB_<i>_<j>``,
``gammaBA_<i>_<j>``, ``o_<i>_<j>``, ``s_<i>``, ``r_<i>``, ``Cmax``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .schedule import Schedule
from .wallplan import AdhesionTask, BrickTask, ConflictSets, WallPlan, task_distance

INF = math.inf
CONTINUOUS, BINARY, INTEGER = "C", "B", "I"
LE, EQ, GE = "<=", "=", ">="


@dataclass(frozen=True)
class Weights:
    span: float = 2.0
    brick_log: float = 4.0
    cur: float = 0.2
    adh_log: float = 5.0

    def __post_init__(self):
        if min(self.span, self.brick_log, self.cur, self.adh_log) < 0:
            raise ValueError("objective weights must be nonnegative")


@dataclass
class ScheduleProblem:
    n_robots: int
    pickup_points: tuple
    d_brick: float = 30.0
    d_spray: float = 7.0
    d_cure: float = 60.0
    v_log: float = 0.6
    r_c: float = 0.8
    weights: Weights = field(default_factory=Weights)
    big_m_time: float | None = None
    big_m_rank: float | None = None
    cure_from_end: bool = False

    def __post_init__(self):
        self.pickup_points = tuple(tuple(float(c) for c in p) for p in self.pickup_points)

    def validate(self, plan: WallPlan | None = None) -> None:
        if self.n_robots < 1:
            raise ValueError("at least one brick robot is required")
        if len(self.pickup_points) != self.n_robots:
            raise ValueError("need exactly one pickup point per brick robot")
        for name in ("d_brick", "d_spray", "d_cure", "v_log", "r_c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.d_cure > self.d_brick:
            raise ValueError("curing time must exceed the brick task duration")
        if plan is None:
            return
        if self.big_m_time is None or self.big_m_rank is None:
            raise ValueError("big-M constants are unset; see choose_big_m")
        durations = [self.d_brick] + ([self.d_cure] if math.isfinite(self.d_cure) else [])
        longest = max(durations + [self.d_spray + t for t in _max_travel(plan, self)])
        if not self.big_m_time > longest:
            raise ValueError(f"big_m_time {self.big_m_time} must exceed every task duration ({longest})")
        if self.big_m_rank < len(plan.adhesions):
            raise ValueError("big_m_rank must be at least the number of adhesion tasks")


def _max_travel(plan: WallPlan, prob: ScheduleProblem):
    ads = plan.adhesions
    if len(ads) < 2:
        return [0.0]
    return [max(adhesion_distance(a, b) for a in ads for b in ads) / prob.v_log]


def pickup_distance(brick: BrickTask, pickup, wall_length: float) -> float:
    """Ground-plane distance from a pickup point to the brick (wall on y = 0, centred at x = 0)."""
    x = brick.center[0] - wall_length / 2.0
    return math.hypot(x - pickup[0], pickup[1])


def adhesion_distance(a: AdhesionTask, b: AdhesionTask) -> float:
    return task_distance(a.center, b.center)


@dataclass
class Column:
    name: str
    lb: float = 0.0
    ub: float = INF
    kind: str = CONTINUOUS


@dataclass
class Row:
    name: str
    coefs: dict  # column index -> coefficient
    sense: str
    rhs: float


class MilpModel:
    """Minimisation MILP: columns, linear rows and a linear objective."""

    def __init__(self, name: str = "masonry"):
        self.name = name
        self.columns: list[Column] = []
        self.rows: list[Row] = []
        self.objective: dict[int, float] = {}
        self.obj_constant = 0.0
        self._col_ids: dict[str, int] = {}
        self._row_names: set[str] = set()

    def add_column(self, name, lb=0.0, ub=INF, kind=CONTINUOUS) -> int:
        if name in self._col_ids:
            raise ValueError(f"duplicate column {name}")
        if kind == BINARY:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        self._col_ids[name] = len(self.columns)
        self.columns.append(Column(name, float(lb), float(ub), kind))
        return len(self.columns) - 1

    def add_row(self, name, terms, sense, rhs) -> int:
        if name in self._row_names:
            raise ValueError(f"duplicate row {name}")
        if sense not in (LE, EQ, GE):
            raise ValueError(f"bad sense {sense!r}")
        coefs: dict[int, float] = {}
        for col, val in terms:
            if not 0 <= col < len(self.columns):
                raise IndexError(f"row {name} references unknown column {col}")
            coefs[col] = coefs.get(col, 0.0) + float(val)
        self._row_names.add(name)
        self.rows.append(Row(name, coefs, sense, float(rhs)))
        return len(self.rows) - 1

    def add_objective(self, col: int, coef: float) -> None:
        self.objective[col] = self.objective.get(col, 0.0) + float(coef)

    def col_id(self, name: str) -> int:
        return self._col_ids[name]

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def count_kind(self, kind: str) -> int:
        return sum(c.kind == kind for c in self.columns)

    def rows_in_family(self, family: str) -> list[Row]:
        return [r for r in self.rows if r.name.split("_", 1)[0] == family]

    def to_arrays(self):
        """Dense arrays ``(A, row_lo, row_hi, c, col_lo, col_hi, is_int)``."""
        n, m = self.n_cols, self.n_rows
        A = np.zeros((m, n))
        lo = np.full(m, -INF)
        hi = np.full(m, INF)
        for i, row in enumerate(self.rows):
            for j, v in row.coefs.items():
                A[i, j] = v
            if row.sense in (GE, EQ):
                lo[i] = row.rhs
            if row.sense in (LE, EQ):
                hi[i] = row.rhs
        c = np.zeros(n)
        for j, v in self.objective.items():
            c[j] = v
        col_lo = np.array([col.lb for col in self.columns], dtype=float)
        col_hi = np.array([col.ub for col in self.columns], dtype=float)
        is_int = np.array([col.kind != CONTINUOUS for col in self.columns], dtype=bool)
        return A, lo, hi, c, col_lo, col_hi, is_int

    def vector(self, values: dict) -> np.ndarray:
        return np.array([float(values.get(c.name, 0.0)) for c in self.columns])

    def evaluate_objective(self, values: dict) -> float:
        x = self.vector(values)
        return self.obj_constant + sum(coef * x[j] for j, coef in self.objective.items())

    def violations(self, values: dict, tol: float = 1e-6) -> list[tuple[str, float]]:
        """Rows and column bounds broken by ``values`` (name, amount)."""
        x = self.vector(values)
        out = []
        for j, col in enumerate(self.columns):
            if x[j] < col.lb - tol or x[j] > col.ub + tol:
                out.append((col.name, x[j]))
            elif col.kind != CONTINUOUS and abs(x[j] - round(x[j])) > tol:
                out.append((col.name, x[j]))
        for row in self.rows:
            act = sum(v * x[j] for j, v in row.coefs.items())
            scale = tol * max(1.0, abs(row.rhs))
            if row.sense in (LE, EQ) and act > row.rhs + scale:
                out.append((row.name, act - row.rhs))
            if row.sense in (GE, EQ) and act < row.rhs - scale:
                out.append((row.name, act - row.rhs))
        return out


@dataclass
class VarIndex:
    SB: dict = field(default_factory=dict)
    SA: dict = field(default_factory=dict)
    dA: dict = field(default_factory=dict)
    tA: dict = field(default_factory=dict)
    x: dict = field(default_factory=dict)  # (brick, robot)
    alpha: dict = field(default_factory=dict)  # (robot, i, j)
    beta: dict = field(default_factory=dict)  # (i, j), i < j
    gammaB: dict = field(default_factory=dict)  # (i, j), i < j
    gammaBA: dict = field(default_factory=dict)  # (brick, adhesion)
    o: dict = field(default_factory=dict)  # (i, j), i != j
    s: dict = field(default_factory=dict)
    r: dict = field(default_factory=dict)
    cmax: int | None = None
    n_robots: int = 0

    FAMILIES = ("SB", "SA", "dA", "tA", "x", "alpha", "beta", "gammaB", "gammaBA", "o", "s", "r")

    def all_columns(self) -> list[int]:
        cols = [c for fam in self.FAMILIES for c in getattr(self, fam).values()]
        if self.cmax is not None:
            cols.append(self.cmax)
        return cols

    def beta_value(self, i: int, j: int, values) -> float:
        """Order indicator for any ordered pair, using 1 - beta_{j,i} when i > j."""
        if i < j:
            return values[self.beta[(i, j)]]
        return 1.0 - values[self.beta[(j, i)]]


class _Builder:
    def __init__(self, plan: WallPlan, conflicts: ConflictSets, prob: ScheduleProblem):
        self.plan = plan
        self.conflicts = conflicts
        self.prob = prob
        self.m = MilpModel()
        self.idx = VarIndex(n_robots=prob.n_robots)
        self.nb = len(plan.bricks)
        self.na = len(plan.adhesions)
        self.big_m = float(prob.big_m_time)
        self.big_m_rank = float(prob.big_m_rank)


def _allocate(b: _Builder) -> None:
    m, idx, nb, na = b.m, b.idx, b.nb, b.na
    robots = range(b.prob.n_robots)
    for i in range(nb):
        idx.SB[i] = m.add_column(f"SB_{i}")
    for j in range(na):
        idx.SA[j] = m.add_column(f"SA_{j}")
    for j in range(na):
        idx.dA[j] = m.add_column(f"dA_{j}")
    for j in range(na):
        idx.tA[j] = m.add_column(f"tA_{j}")
    if nb:
        idx.cmax = m.add_column("Cmax")
    for i in range(nb):
        for k in robots:
            idx.x[(i, k)] = m.add_column(f"x_{i}_{k}", kind=BINARY)
    for k in robots:
        for i in range(nb):
            for j in range(nb):
                if i != j:
                    idx.alpha[(k, i, j)] = m.add_column(f"alpha_{k}_{i}_{j}", kind=BINARY)
    for i in range(na):
        for j in range(i + 1, na):
            idx.beta[(i, j)] = m.add_column(f"beta_{i}_{j}", kind=BINARY)
    for i, j in sorted(b.conflicts.brick_brick):
        idx.gammaB[(i, j)] = m.add_column(f"gammaB_{i}_{j}", kind=BINARY)
    for i, j in sorted(b.conflicts.brick_adhesion):
        idx.gammaBA[(i, j)] = m.add_column(f"gammaBA_{i}_{j}", kind=BINARY)
    for i in range(na):
        for j in range(na):
            if i != j:
                idx.o[(i, j)] = m.add_column(f"o_{i}_{j}", kind=BINARY)
    for i in range(na):
        idx.s[i] = m.add_column(f"s_{i}", kind=BINARY)
    for i in range(na):
        idx.r[i] = m.add_column(f"r_{i}", kind=INTEGER)


def emit_start_bounds(b: _Builder) -> None:
    for col in list(b.idx.SB.values()) + list(b.idx.SA.values()):
        b.m.columns[col].lb = 0.0


def emit_assignment(b: _Builder) -> None:
    for i in range(b.nb):
        terms = [(b.idx.x[(i, k)], 1.0) for k in range(b.prob.n_robots)]
        b.m.add_row(f"assign_{i}", terms, EQ, 1.0)


def emit_brick_ordering(b: _Builder) -> None:
    m, idx, M, dB = b.m, b.idx, b.big_m, b.prob.d_brick
    for k in range(b.prob.n_robots):
        for i in range(b.nb):
            for j in range(b.nb):
                if i == j:
                    continue
                a = idx.alpha[(k, i, j)]
                # S_i + dB <= S_j + M (1 - alpha)
                m.add_row(
                    f"border_{k}_{i}_{j}",
                    [(idx.SB[i], 1.0), (idx.SB[j], -1.0), (a, M)],
                    LE,
                    M - dB,
                )
        for i in range(b.nb):
            for j in range(i + 1, b.nb):
                pair = [(idx.alpha[(k, i, j)], 1.0), (idx.alpha[(k, j, i)], 1.0)]
                xi, xj = idx.x[(i, k)], idx.x[(j, k)]
                m.add_row(f"alphaub1_{k}_{i}_{j}", pair + [(xi, -1.0)], LE, 0.0)
                m.add_row(f"alphaub2_{k}_{i}_{j}", pair + [(xj, -1.0)], LE, 0.0)
                m.add_row(f"alphalb_{k}_{i}_{j}", pair + [(xi, -1.0), (xj, -1.0)], GE, -1.0)


def emit_adhesion_ordering(b: _Builder) -> None:
    m, idx, M = b.m, b.idx, b.big_m
    for i in range(b.na):
        for j in range(i + 1, b.na):
            beta = idx.beta[(i, j)]
            # E_i <= S_j + M (1 - beta)
            m.add_row(
                f"aorder1_{i}_{j}",
                [(idx.SA[i], 1.0), (idx.dA[i], 1.0), (idx.SA[j], -1.0), (beta, M)],
                LE,
                M,
            )
            # E_j <= S_i + M beta
            m.add_row(
                f"aorder2_{i}_{j}",
                [(idx.SA[j], 1.0), (idx.dA[j], 1.0), (idx.SA[i], -1.0), (beta, -M)],
                LE,
                0.0,
            )


def emit_precedence(b: _Builder) -> None:
    m, idx, dB = b.m, b.idx, b.prob.d_brick
    for a, br in sorted(b.plan.precedence_ab):
        m.add_row(
            f"precAB_{a}_{br}",
            [(idx.SA[a], 1.0), (idx.dA[a], 1.0), (idx.SB[br], -1.0)],
            LE,
            0.0,
        )
    for br, a in sorted(b.plan.precedence_ba):
        m.add_row(f"precBA_{br}_{a}", [(idx.SB[br], 1.0), (idx.SA[a], -1.0)], LE, -dB)


def emit_conflicts(b: _Builder) -> None:
    m, idx, M, dB = b.m, b.idx, b.big_m, b.prob.d_brick
    for (i, j), g in sorted(idx.gammaB.items()):
        m.add_row(f"conflB1_{i}_{j}", [(idx.SB[i], 1.0), (idx.SB[j], -1.0), (g, M)], LE, M - dB)
        m.add_row(f"conflB2_{i}_{j}", [(idx.SB[j], 1.0), (idx.SB[i], -1.0), (g, -M)], LE, -dB)
    for (i, j), g in sorted(idx.gammaBA.items()):
        m.add_row(f"conflBA1_{i}_{j}", [(idx.SB[i], 1.0), (idx.SA[j], -1.0), (g, M)], LE, M - dB)
        m.add_row(
            f"conflBA2_{i}_{j}",
            [(idx.SA[j], 1.0), (idx.dA[j], 1.0), (idx.SB[i], -1.0), (g, -M)],
            LE,
            0.0,
        )


def emit_curing(b: _Builder) -> None:
    m, idx, p = b.m, b.idx, b.prob
    if not math.isfinite(p.d_cure):
        return  # no curing limit
    for a in b.plan.adhesions:
        for br in b.plan.ancestors(a.id):
            terms = [(idx.SB[br], 1.0), (idx.SA[a.id], -1.0)]
            if p.cure_from_end:
                terms.append((idx.dA[a.id], -1.0))
            m.add_row(f"cure_{a.id}_{br}", terms, LE, p.d_cure - p.d_brick)


def emit_ranking_successors(b: _Builder) -> None:
    m, idx, na, Mr = b.m, b.idx, b.na, b.big_m_rank
    for i in range(na):
        # r_i = sum_{j<i} beta_{j,i} + sum_{j>i} (1 - beta_{i,j})
        terms = [(idx.r[i], 1.0)]
        terms += [(idx.beta[(j, i)], -1.0) for j in range(i)]
        terms += [(idx.beta[(i, j)], 1.0) for j in range(i + 1, na)]
        m.add_row(f"rank_{i}", terms, EQ, float(na - 1 - i))
    for i in range(na):
        for j in range(na):
            if i == j:
                continue
            o = idx.o[(i, j)]
            diff = [(idx.r[j], 1.0), (idx.r[i], -1.0)]
            m.add_row(f"succub_{i}_{j}", diff + [(o, Mr)], LE, 1.0 + Mr)
            m.add_row(f"succlb_{i}_{j}", diff + [(o, -Mr)], GE, 1.0 - Mr)
    for i in range(na):
        terms = [(idx.o[(i, j)], 1.0) for j in range(na) if j != i] + [(idx.s[i], 1.0)]
        m.add_row(f"succsum_{i}", terms, EQ, 1.0)
    if na:
        m.add_row("last", [(idx.s[i], 1.0) for i in range(na)], EQ, 1.0)


def emit_logistics_duration(b: _Builder) -> None:
    m, idx, p, ads = b.m, b.idx, b.prob, b.plan.adhesions
    for i in range(b.na):
        terms = [(idx.tA[i], 1.0)]
        terms += [
            (idx.o[(i, j)], -adhesion_distance(ads[i], ads[j]) / p.v_log)
            for j in range(b.na)
            if j != i
        ]
        m.add_row(f"logtime_{i}", terms, EQ, 0.0)
        m.add_row(f"adhdur_{i}", [(idx.dA[i], 1.0), (idx.tA[i], -1.0)], EQ, p.d_spray)


def emit_makespan_and_objective(b: _Builder) -> None:
    m, idx, p, plan = b.m, b.idx, b.prob, b.plan
    w = p.weights
    for i in range(b.nb):
        m.add_row(f"mspan_{i}", [(idx.SB[i], 1.0), (idx.cmax, -1.0)], LE, -p.d_brick)
    if idx.cmax is not None:
        m.add_objective(idx.cmax, w.span)
    for (i, k), col in idx.x.items():
        dist = pickup_distance(plan.bricks[i], p.pickup_points[k], plan.wall_length)
        m.add_objective(col, w.brick_log * dist)
    for a in plan.adhesions:
        for br in plan.ancestors(a.id):
            m.add_objective(idx.SB[br], w.cur)
            m.add_objective(idx.SA[a.id], -w.cur)
            m.add_objective(idx.dA[a.id], -w.cur)
    for (i, j), col in idx.o.items():
        dist = adhesion_distance(plan.adhesions[i], plan.adhesions[j])
        m.add_objective(col, w.adh_log * dist)
    m.objective = {j: v for j, v in m.objective.items() if v != 0.0}


def build_model(plan: WallPlan, conflicts: ConflictSets, prob: ScheduleProblem):
    """Return ``(MilpModel, VarIndex)`` for the instance."""
    prob.validate(plan)
    b = _Builder(plan, conflicts, prob)
    _allocate(b)
    emit_start_bounds(b)
    emit_assignment(b)
    emit_brick_ordering(b)
    emit_adhesion_ordering(b)
    emit_precedence(b)
    emit_conflicts(b)
    emit_curing(b)
    emit_ranking_successors(b)
    emit_logistics_duration(b)
    emit_makespan_and_objective(b)
    return b.m, b.idx


def choose_big_m(plan: WallPlan, prob: ScheduleProblem, incumbent_makespan: float):
    cure = prob.d_cure if math.isfinite(prob.d_cure) else prob.d_brick
    return 2.0 * incumbent_makespan + cure, float(len(plan.adhesions) + 1)


def encode_schedule(
    s: Schedule, index: VarIndex, model: MilpModel, plan: WallPlan, prob: ScheduleProblem
) -> dict:
    """Model values (by column name) that represent a concrete schedule."""
    dB = prob.d_brick
    vals = np.zeros(model.n_cols)
    for i, col in index.SB.items():
        vals[col] = s.brick_starts[i]
    for j, col in index.SA.items():
        vals[col] = s.adhesion_starts[j]
    order = list(s.adhesion_order)
    succ = {order[p]: order[p + 1] for p in range(len(order) - 1)}
    rank = {a: p for p, a in enumerate(order)}
    for j in index.dA:
        t = 0.0
        if j in succ:
            t = adhesion_distance(plan.adhesions[j], plan.adhesions[succ[j]]) / prob.v_log
        vals[index.tA[j]] = t
        vals[index.dA[j]] = prob.d_spray + t
    if index.cmax is not None:
        vals[index.cmax] = max(s.brick_starts[i] + dB for i in index.SB)
    for (i, k), col in index.x.items():
        vals[col] = 1.0 if s.brick_assignments[i] == k else 0.0
    for (k, i, j), col in index.alpha.items():
        same = s.brick_assignments[i] == k and s.brick_assignments[j] == k
        before = (s.brick_starts[i], i) < (s.brick_starts[j], j)
        vals[col] = 1.0 if same and before else 0.0
    for (i, j), col in index.beta.items():
        vals[col] = 1.0 if rank[i] < rank[j] else 0.0
    for (i, j), col in index.gammaB.items():
        vals[col] = 1.0 if (s.brick_starts[i], i) < (s.brick_starts[j], j) else 0.0
    for (i, j), col in index.gammaBA.items():
        vals[col] = 1.0 if s.brick_starts[i] + dB <= s.adhesion_starts[j] + 1e-9 else 0.0
    for (i, j), col in index.o.items():
        vals[col] = 1.0 if succ.get(i) == j else 0.0
    for i, col in index.s.items():
        vals[col] = 1.0 if i not in succ else 0.0
    for i, col in index.r.items():
        vals[col] = float(rank[i])
    return {c.name: float(vals[j]) for j, c in enumerate(model.columns)}
