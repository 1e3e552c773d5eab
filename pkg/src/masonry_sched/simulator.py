"""Kinematic replay of a schedule as a multi-UAV mission.

UAV ids: brick robots are ``0 .. N-1``, the mortar UAV is ``N``. The workspace
frame has the wall on ``y = 0`` spanning ``x`` in ``[-L/2, L/2]`` with ``z``
up; pickups and homes are on the ground (``z = 0``) in front of the wall.

Each brick task fills its window ``[S, S + d^B]`` with a round trip from the
pickup point: take off, cruise to above the placement point, hover
(stabilise plus whatever time is left over), descend, place, ascend, cruise
back and land. Phases near the wall are flagged as construction-zone phases.

The mortar UAV sweeps each interval centre -> start -> end -> centre during
``d_spray`` and then crosses to the next interval centre during the logistics
tail. Idle gaps are spent backed off from the wall at ``standoff``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .model import ScheduleProblem
from .schedule import Schedule
from .wallplan import WallPlan

EPS = 1e-9


class KinematicError(RuntimeError):
    """Motion at the configured speeds does not fit into the scheduled window."""


class PhaseKind(str, Enum):
    IDLE = "Idle"
    TAKEOFF = "Takeoff"
    CRUISE = "Cruise"
    DESCEND = "Descend"
    PLACE = "Place"
    ASCEND = "Ascend"
    SPRAY = "Spray"
    HOVER = "Hover"


@dataclass(frozen=True)
class Phase:
    kind: PhaseKind
    start: float
    end: float
    p0: tuple
    p1: tuple
    construction: bool = False
    task: str = ""  # "B3", "A7" or "" for transfers

    @property
    def duration(self) -> float:
        return self.end - self.start

    def position(self, t: float) -> np.ndarray:
        a, b = np.asarray(self.p0, float), np.asarray(self.p1, float)
        if self.end - self.start <= EPS:
            return b
        u = min(1.0, max(0.0, (t - self.start) / (self.end - self.start)))
        return a + (b - a) * u

    def shifted(self, dt: float) -> "Phase":
        return replace(self, start=self.start + dt, end=self.end + dt)


@dataclass
class SimConfig:
    h_cruise: float = 2.0
    v_travel: float | None = None  # defaults to the problem's v_log
    v_vertical: float = 0.5
    stabilize_pause: float = 1.0
    timestep: float = 0.1
    home_positions: dict = field(default_factory=dict)  # uav id -> (x, y)
    clearance: float = 0.8
    standoff: float = 1.0

    def validate(self):
        if self.v_travel is not None and not self.v_travel > 0:
            raise ValueError("v_travel must be positive")
        if not self.v_vertical > 0:
            raise ValueError("v_vertical must be positive")
        if not 0 < self.timestep <= 0.5:
            raise ValueError("timestep must lie in (0, 0.5]")
        if self.h_cruise <= 0 or self.stabilize_pause < 0 or self.standoff < 0:
            raise ValueError("h_cruise must be positive, stabilize_pause and standoff nonnegative")


@dataclass
class UavTimeline:
    uav: int
    phases: list
    home: tuple

    def position(self, t: float) -> np.ndarray:
        ph = self.phase_at(t)
        if ph is None:
            return np.array(self.home, float)
        return ph.position(t)

    def phase_at(self, t: float):
        """Phase covering ``t`` (later phase wins at a boundary); None outside all phases."""
        if not self.phases:
            return None
        lo, hi = 0, len(self.phases)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.phases[mid].start <= t + EPS:
                lo = mid + 1
            else:
                hi = mid
        k = lo - 1
        if k < 0:
            return None
        ph = self.phases[k]
        if t > ph.end + EPS:
            return None
        # skip zero-length phases at the boundary
        while k + 1 < len(self.phases) and self.phases[k + 1].start <= t + EPS and self.phases[k].end <= t + EPS:
            k += 1
        return self.phases[k]

    @property
    def end(self) -> float:
        return self.phases[-1].end if self.phases else 0.0


@dataclass
class SimTrace:
    times: np.ndarray
    positions: np.ndarray  # (steps, uavs, 3)
    construction: np.ndarray  # (steps, uavs) bool
    events: list  # (time, uav, description)
    min_distance: np.ndarray  # per step, all pairs
    min_distance_construction: np.ndarray  # per step, pairs with both UAVs in the construction zone
    curing: list = field(default_factory=list)

    @property
    def n_uavs(self) -> int:
        return self.positions.shape[1]

    def positions_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "uav", "x", "y", "z"])
        for i, t in enumerate(self.times):
            for u in range(self.n_uavs):
                x, y, z = self.positions[i, u]
                w.writerow([_fmt(t), u, _fmt(x), _fmt(y), _fmt(z)])
        return buf.getvalue()

    def min_distance_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "dmin"])
        for t, d in zip(self.times, self.min_distance):
            w.writerow([_fmt(t), _fmt(d)])
        return buf.getvalue()

    def events_log(self) -> str:
        return "".join(f"{_fmt(t)} uav{u} {desc}\n" for t, u, desc in self.events)


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    s = f"{v:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _dist(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a, float) - np.asarray(b, float)))


class _Builder:
    def __init__(self, uav: int, home):
        self.uav = uav
        self.home = (float(home[0]), float(home[1]), 0.0)
        self.phases: list[Phase] = []
        self.t = 0.0
        self.pos = self.home

    def go(self, kind, dur, to, construction=False, task=""):
        to = tuple(float(c) for c in to)
        if dur < -EPS:
            raise KinematicError(f"uav{self.uav}: negative {kind.value} duration for {task or 'transfer'}")
        dur = max(dur, 0.0)
        self.phases.append(Phase(kind, self.t, self.t + dur, self.pos, to, construction, task))
        self.t += dur
        self.pos = to

    def idle_until(self, t):
        if t < self.t - 1e-6:
            raise KinematicError(f"uav{self.uav}: needs until {self.t:.3f} s but next task starts at {t:.3f} s")
        if t > self.t + EPS:
            kind = PhaseKind.IDLE if self.pos[2] <= EPS else PhaseKind.HOVER
            self.go(kind, t - self.t, self.pos)
        self.t = max(self.t, t)


def _brick_timeline(uav, s: Schedule, plan: WallPlan, prob: ScheduleProblem, cfg: SimConfig, v_t, home):
    b = _Builder(uav, home)
    half = plan.wall_length / 2.0
    h, vv = cfg.h_cruise, cfg.v_vertical
    pick = prob.pickup_points[uav]
    P0 = (pick[0], pick[1], 0.0)
    Ph = (pick[0], pick[1], h)
    mine = sorted((i for i, k in s.brick_assignments.items() if k == uav), key=lambda i: (s.brick_starts[i], i))
    if mine and _dist(b.home, P0) > EPS:
        # reposition from home to the pickup before the first task
        first = s.brick_starts[mine[0]]
        dur = 2 * h / vv + _dist(b.home[:2], P0[:2]) / v_t
        b.idle_until(first - dur)
        b.go(PhaseKind.TAKEOFF, h / vv, (b.home[0], b.home[1], h))
        b.go(PhaseKind.CRUISE, _dist(b.home[:2], P0[:2]) / v_t, Ph)
        b.go(PhaseKind.DESCEND, h / vv, P0)
    for i in mine:
        brick = plan.bricks[i]
        cx, cz = brick.center
        W = (cx - half, 0.0, cz)
        Wh = (cx - half, 0.0, h)
        tag = f"B{i}"
        S = s.brick_starts[i]
        b.idle_until(S)
        t_up = h / vv
        t_cruise = _dist(P0[:2], W[:2]) / v_t
        t_wall = (h - cz) / vv
        fixed = 2 * t_up + 2 * t_cruise + 2 * t_wall + cfg.stabilize_pause
        hover = prob.d_brick - fixed
        if hover < cfg.stabilize_pause - 1e-9:
            raise KinematicError(
                f"{tag}: round trip needs {fixed + cfg.stabilize_pause:.3f} s, window is {prob.d_brick} s"
            )
        b.go(PhaseKind.TAKEOFF, t_up, Ph, task=tag)
        b.go(PhaseKind.CRUISE, t_cruise, Wh, task=tag)
        b.go(PhaseKind.HOVER, hover, Wh, True, tag)
        b.go(PhaseKind.DESCEND, t_wall, W, True, tag)
        b.go(PhaseKind.PLACE, cfg.stabilize_pause, W, True, tag)
        b.go(PhaseKind.ASCEND, t_wall, Wh, True, tag)
        b.go(PhaseKind.CRUISE, t_cruise, Ph, task=tag)
        b.go(PhaseKind.DESCEND, t_up, P0, task=tag)
        b.t = S + prob.d_brick  # remove float drift
    if mine and _dist(b.home, P0) > EPS:
        b.go(PhaseKind.TAKEOFF, h / vv, Ph)
        b.go(PhaseKind.CRUISE, _dist(b.home[:2], P0[:2]) / v_t, (b.home[0], b.home[1], h))
        b.go(PhaseKind.DESCEND, h / vv, b.home)
    return UavTimeline(uav, b.phases, b.home)


def _adhesion_timeline(uav, s: Schedule, plan: WallPlan, prob: ScheduleProblem, cfg: SimConfig, v_t, home):
    b = _Builder(uav, home)
    half = plan.wall_length / 2.0
    vv = cfg.v_vertical
    order = list(s.adhesion_order)
    if not order:
        return UavTimeline(uav, [], b.home)

    def centre(j):
        a = plan.adhesions[j]
        return (a.center[0] - half, 0.0, a.z)

    first = centre(order[0])
    lift = (b.home[0], b.home[1], first[2])
    t_lift = first[2] / vv
    t_in = _dist(lift, first) / v_t
    b.idle_until(s.adhesion_starts[order[0]] - t_lift - t_in)
    b.go(PhaseKind.TAKEOFF, t_lift, lift)
    b.go(PhaseKind.CRUISE, t_in, first)
    for p, j in enumerate(order):
        a = plan.adhesions[j]
        tag = f"A{j}"
        S = s.adhesion_starts[j]
        C = centre(j)
        if abs(b.t - S) > 1e-6 or _dist(b.pos, C) > 1e-6:
            raise KinematicError(f"{tag}: mortar UAV not at the interval centre at {S:.3f} s")
        b.t = S
        x0, x1 = a.x_start - half, a.x_end - half
        leg = a.width / 2.0
        seg = prob.d_spray * leg / (2 * a.width)
        b.go(PhaseKind.SPRAY, seg, (x0, 0.0, a.z), True, tag)
        b.go(PhaseKind.SPRAY, 2 * seg, (x1, 0.0, a.z), True, tag)
        b.go(PhaseKind.SPRAY, seg, C, True, tag)
        b.t = S + prob.d_spray
        if p + 1 == len(order):
            break
        nxt = order[p + 1]
        N = centre(nxt)
        tail = s.adhesion_durations[j] - prob.d_spray
        b.go(PhaseKind.CRUISE, tail, N, task=tag)
        gap = s.adhesion_starts[nxt] - b.t
        if gap > EPS:
            out = min(cfg.standoff / v_t, gap / 2.0)
            back = (N[0], -out * v_t, N[2])
            b.go(PhaseKind.CRUISE, out, back)
            b.go(PhaseKind.HOVER, gap - 2 * out, back)
            b.go(PhaseKind.CRUISE, out, N)
        b.t = s.adhesion_starts[nxt] if gap > -1e-6 else b.t
    last = b.pos
    t_out = _dist(last, (b.home[0], b.home[1], last[2])) / v_t
    b.go(PhaseKind.CRUISE, t_out, (b.home[0], b.home[1], last[2]))
    b.go(PhaseKind.DESCEND, last[2] / vv, b.home)
    return UavTimeline(uav, b.phases, b.home)


def plan_timelines(s: Schedule, plan: WallPlan, prob: ScheduleProblem, cfg: SimConfig) -> list:
    """One timeline per brick UAV plus one for the mortar UAV (id ``n_robots``)."""
    cfg.validate()
    v_t = cfg.v_travel if cfg.v_travel is not None else prob.v_log
    out = []
    for k in range(prob.n_robots):
        home = cfg.home_positions.get(k, prob.pickup_points[k])
        out.append(_brick_timeline(k, s, plan, prob, cfg, v_t, home))
    home = cfg.home_positions.get(prob.n_robots, (0.0, -1.0))
    out.append(_adhesion_timeline(prob.n_robots, s, plan, prob, cfg, v_t, home))
    return out


def _pair_min(pa: Phase, pb: Phase, dt: float) -> float:
    lo, hi = max(pa.start, pb.start), min(pa.end, pb.end)
    if hi < lo:
        return math.inf
    n = max(2, int(math.ceil((hi - lo) / dt)) + 1)
    ts = np.linspace(lo, hi, n)
    a0, a1 = np.asarray(pa.p0, float), np.asarray(pa.p1, float)
    b0, b1 = np.asarray(pb.p0, float), np.asarray(pb.p1, float)
    ua = np.clip((ts - pa.start) / max(pa.duration, EPS), 0, 1)[:, None]
    ub = np.clip((ts - pb.start) / max(pb.duration, EPS), 0, 1)[:, None]
    return float(np.min(np.linalg.norm(a0 + (a1 - a0) * ua - (b0 + (b1 - b0) * ub), axis=1)))


def _absorber(phases: list, k: int, pause: float) -> tuple[int, float]:
    """Phase that pays for delaying cruise ``k``, and how much it can pay.

    Walks forward over non-construction phases to the first hover/idle. A
    return leg may therefore push the landing and the next takeoff later,
    paid by the next wall hover, which keeps at least ``pause``. Running off
    the end of the timeline gives unlimited slack; hitting a construction
    phase first gives none. Returns (index, slack).
    """
    for j in range(k + 1, len(phases)):
        ph = phases[j]
        if ph.kind in (PhaseKind.HOVER, PhaseKind.IDLE):
            return j, max(ph.duration - (pause if ph.construction else 0.0), 0.0)
        if ph.construction:
            return j, 0.0
    return len(phases), math.inf


def _delay_cruise(phases: list, k: int, delay: float, j: int) -> list:
    """Hold in place for ``delay`` before cruise ``k``; phases up to ``j`` move, ``j`` starts later."""
    ph = phases[k]
    hold = Phase(PhaseKind.HOVER, ph.start, ph.start + delay, ph.p0, ph.p0, False, ph.task)
    moved = [p.shifted(delay) for p in phases[k:j]]
    rest = phases[j:]
    if rest:
        rest = [replace(rest[0], start=rest[0].start + delay)] + rest[1:]
    return phases[:k] + [hold] + moved + rest


def _clashes(cur: Phase, resolved: list, clearance: float, dt: float) -> bool:
    for other in resolved:
        for q in other.phases:
            if q.kind != PhaseKind.CRUISE or q.end < cur.start or q.start > cur.end:
                continue
            if _pair_min(cur, q, dt) < clearance:
                return True
    return False


def resolve_logistics_conflicts(timelines: list, cfg: SimConfig) -> list:
    """Priority-delay separation of cruise legs.

    UAVs are handled in id order. A cruise leg that passes within
    ``cfg.clearance`` of a cruise leg of an earlier UAV is held by
    ``10 * timestep`` at a time until it is clear. The time comes out of the
    next hover/idle: the wall hover of the same brick for an outbound leg,
    the ground idle or the next wall hover for a return leg. Descend, place,
    ascend and spray phases are never moved.
    """
    step = 10 * cfg.timestep
    dt = cfg.timestep
    resolved: list[UavTimeline] = []
    for tl in timelines:
        phases = list(tl.phases)
        k = 0
        while k < len(phases):
            ph = phases[k]
            if ph.kind != PhaseKind.CRUISE or ph.duration <= EPS or not _clashes(ph, resolved, cfg.clearance, dt):
                k += 1
                continue
            j, slack = _absorber(phases, k, cfg.stabilize_pause)
            base = phases
            inserted = 0
            while True:
                inserted += 1
                delay = inserted * step
                if inserted > 1000 or delay > slack + EPS:
                    raise KinematicError(
                        f"uav{tl.uav}: cruise {ph.task or 'transfer'} at {ph.start:.3f} s cannot be separated "
                        f"within {slack:.3f} s of slack"
                    )
                phases = _delay_cruise(base, k, delay, j)
                if not _clashes(phases[k + 1], resolved, cfg.clearance, dt):
                    break
            k += 2
        resolved.append(UavTimeline(tl.uav, phases, tl.home))
    return resolved


def run_mission(timelines: list, cfg: SimConfig) -> SimTrace:
    """Sample every timeline on a fixed grid and record clearances and phase events."""
    dt = cfg.timestep
    T = max((tl.end for tl in timelines), default=0.0)
    n = int(math.floor(T / dt + 1e-9)) + 1 if timelines else 0
    times = np.round(np.arange(n) * dt, 9)
    U = len(timelines)
    pos = np.zeros((n, U, 3))
    cz = np.zeros((n, U), dtype=bool)
    for u, tl in enumerate(timelines):
        for i, t in enumerate(times):
            ph = tl.phase_at(t)
            if ph is None:
                pos[i, u] = tl.home
            else:
                pos[i, u] = ph.position(t)
                cz[i, u] = ph.construction
    dmin = np.full(n, math.inf)
    dmin_cz = np.full(n, math.inf)
    for a in range(U):
        for b in range(a + 1, U):
            d = np.linalg.norm(pos[:, a] - pos[:, b], axis=1)
            dmin = np.minimum(dmin, d)
            both = cz[:, a] & cz[:, b]
            dmin_cz = np.where(both, np.minimum(dmin_cz, d), dmin_cz)
    events = []
    for tl in timelines:
        for ph in tl.phases:
            what = ph.kind.value + (f" {ph.task}" if ph.task else "")
            events.append((round(ph.start, 9), tl.uav, f"start {what}"))
        for k, ph in enumerate(tl.phases):
            nxt = tl.phases[k + 1] if k + 1 < len(tl.phases) else None
            if ph.task and (nxt is None or nxt.task != ph.task):
                events.append((round(ph.end, 9), tl.uav, f"complete {ph.task}"))
    events.sort(key=lambda e: (e[0], e[1], e[2]))
    return SimTrace(times, pos, cz, events, dmin, dmin_cz)


def simulate(s: Schedule, plan: WallPlan, prob: ScheduleProblem, cfg: SimConfig) -> SimTrace:
    from .validator import curing_report

    tls = resolve_logistics_conflicts(plan_timelines(s, plan, prob, cfg), cfg)
    trace = run_mission(tls, cfg)
    trace.curing = curing_report(s, plan, prob)
    return trace
