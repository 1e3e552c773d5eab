"""Running-bond wall layout, adhesion tasks, dependency graph and conflict sets.

Coordinates in this module live in the wall elevation plane: ``x`` runs along
the wall starting at its left end (0 .. length), ``z`` is up from the wall
base. Consumers that need the workspace frame (wall centred on the origin)
subtract ``WallPlan.wall_length / 2`` from ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

# Relative slack used when checking that the wall is a whole number of bricks.
_MODULAR_TOL = 1e-9
_DIST_TOL = 1e-12


class DimensionError(ValueError):
    """The wall cannot be tiled with the given bricks."""


class Kind(str, Enum):
    FULL = "Full"
    HALF = "Half"


@dataclass(frozen=True)
class BrickSpec:
    full_width: float
    height: float
    thickness: float

    def __post_init__(self):
        for name in ("full_width", "height", "thickness"):
            if not getattr(self, name) > 0:
                raise DimensionError(f"brick {name} must be positive")

    @property
    def half_width(self) -> float:
        return self.full_width / 2.0


@dataclass(frozen=True)
class WallSpec:
    length: float
    height: float
    width: float

    def __post_init__(self):
        for name in ("length", "height", "width"):
            if not getattr(self, name) > 0:
                raise DimensionError(f"wall {name} must be positive")


@dataclass(frozen=True)
class BrickTask:
    id: int
    kind: Kind
    row: int
    x_start: float
    x_end: float
    z_base: float
    height: float

    @property
    def width(self) -> float:
        return self.x_end - self.x_start

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_start + self.x_end), self.z_base + 0.5 * self.height)


@dataclass(frozen=True)
class AdhesionTask:
    id: int
    x_start: float
    width: float
    z: float
    top_brick: int
    bottom_brick: int

    @property
    def x_end(self) -> float:
        return self.x_start + self.width

    @property
    def center(self) -> tuple[float, float]:
        return (self.x_start + 0.5 * self.width, self.z)


def brick_node(i: int) -> tuple[str, int]:
    return ("B", i)


def adhesion_node(j: int) -> tuple[str, int]:
    return ("A", j)


@dataclass(frozen=True)
class DependencyGraph:
    """Directed "rests on" graph: ``top brick -> adhesion -> bottom brick``.

    An edge ``(u, v)`` means ``u`` can only start after ``v`` has finished.
    Nodes are ``("B", id)`` / ``("A", id)`` tuples.
    """

    edges: frozenset = frozenset()

    def successors(self, node) -> list:
        return sorted(v for (u, v) in self.edges if u == node)

    def predecessors(self, node) -> list:
        return sorted(u for (u, v) in self.edges if v == node)

    def nodes(self) -> set:
        out = set()
        for u, v in self.edges:
            out.add(u)
            out.add(v)
        return out

    def reachable(self) -> dict:
        """Map every node to the set of nodes reachable from it (excluding itself)."""
        adj: dict = {}
        for u, v in self.edges:
            adj.setdefault(u, []).append(v)
        closure = {}
        for start in self.nodes():
            seen = set()
            stack = list(adj.get(start, ()))
            while stack:
                n = stack.pop()
                if n in seen:
                    continue
                seen.add(n)
                stack.extend(adj.get(n, ()))
            closure[start] = seen
        return closure

    def connected(self, a, b, closure: dict | None = None) -> bool:
        closure = self.reachable() if closure is None else closure
        return b in closure.get(a, ()) or a in closure.get(b, ())

    def is_acyclic(self) -> bool:
        closure = self.reachable()
        return all(n not in reach for n, reach in closure.items())


@dataclass(frozen=True)
class ConflictSets:
    brick_brick: frozenset = frozenset()  # sorted (i, j) pairs with i < j
    brick_adhesion: frozenset = frozenset()  # (brick id, adhesion id)

    def bricks_conflict(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.brick_brick

    def brick_adhesion_conflict(self, b: int, a: int) -> bool:
        return (b, a) in self.brick_adhesion


@dataclass(frozen=True)
class WallPlan:
    bricks: tuple
    adhesions: tuple
    graph: DependencyGraph
    wall_length: float = 0.0

    @property
    def precedence_ab(self) -> frozenset:
        """(adhesion, brick) pairs: the adhesion must finish before the brick starts."""
        return frozenset(
            (v[1], u[1]) for (u, v) in self.graph.edges if u[0] == "B" and v[0] == "A"
        )

    @property
    def precedence_ba(self) -> frozenset:
        """(brick, adhesion) pairs: the brick must finish before the adhesion starts."""
        return frozenset(
            (v[1], u[1]) for (u, v) in self.graph.edges if u[0] == "A" and v[0] == "B"
        )

    def ancestors(self, adhesion_id: int) -> list[int]:
        """Brick ids whose placement is gated by the curing of this adhesion."""
        return [n[1] for n in self.graph.predecessors(adhesion_node(adhesion_id)) if n[0] == "B"]

    def adhesions_under(self, brick_id: int) -> list[int]:
        return [a.id for a in self.adhesions if a.top_brick == brick_id]

    @property
    def n_rows(self) -> int:
        return 1 + max((b.row for b in self.bricks), default=-1)


def _whole_multiple(total: float, unit: float, what: str) -> int:
    ratio = total / unit
    n = round(ratio)
    if n < 1 or abs(ratio - n) > _MODULAR_TOL * max(1.0, ratio):
        raise DimensionError(
            f"wall {what} {total} is not a whole multiple of brick {what} {unit}"
        )
    return n


def generate_layout(wall: WallSpec, brick: BrickSpec) -> list[BrickTask]:
    """Lay bricks in running bond, bottom row first, ids row-major from 0.

    Even rows hold ``length / full_width`` full bricks flush with both ends;
    odd rows start and finish with a half brick and hold one full brick fewer.
    """
    n_cols = _whole_multiple(wall.length, brick.full_width, "length")
    n_rows = _whole_multiple(wall.height, brick.height, "height")
    w, hw, h = brick.full_width, brick.half_width, brick.height

    bricks: list[BrickTask] = []
    for row in range(n_rows):
        z = row * h
        if row % 2 == 0:
            spans = [(Kind.FULL, c * w, (c + 1) * w) for c in range(n_cols)]
        else:
            spans = [(Kind.HALF, 0.0, hw)]
            spans += [(Kind.FULL, hw + c * w, hw + (c + 1) * w) for c in range(n_cols - 1)]
            spans.append((Kind.HALF, wall.length - hw, wall.length))
        for kind, x0, x1 in spans:
            bricks.append(BrickTask(len(bricks), kind, row, x0, x1, z, h))
    return bricks


def horizontal_overlap(top: BrickTask, bottom: BrickTask):
    """Return ``(start, width)`` of the shared x-interval, or None when it is empty."""
    start = max(top.x_start, bottom.x_start)
    end = min(top.x_end, bottom.x_end)
    width = end - start
    if width <= _MODULAR_TOL * max(1.0, abs(end)):
        return None
    return start, width


def compute_dependencies(bricks: Iterable[BrickTask]):
    bricks = sorted(bricks, key=lambda b: b.id)
    edges = set()
    adhesions: list[AdhesionTask] = []
    for top in bricks:
        for bottom in bricks:
            if top.row != bottom.row + 1:
                continue
            ov = horizontal_overlap(top, bottom)
            if ov is None:
                continue
            start, width = ov
            ad = AdhesionTask(len(adhesions), start, width, top.z_base, top.id, bottom.id)
            adhesions.append(ad)
            edges.add((brick_node(top.id), adhesion_node(ad.id)))
            edges.add((adhesion_node(ad.id), brick_node(bottom.id)))
    return DependencyGraph(frozenset(edges)), adhesions


def build_plan(wall: WallSpec, brick: BrickSpec) -> WallPlan:
    bricks = generate_layout(wall, brick)
    graph, adhesions = compute_dependencies(bricks)
    return WallPlan(tuple(bricks), tuple(adhesions), graph, wall.length)


def plan_from_bricks(bricks: Iterable[BrickTask], wall_length: float | None = None) -> WallPlan:
    """Build a plan from an arbitrary brick subset, renumbering ids densely by old id."""
    bricks = sorted(bricks, key=lambda b: b.id)
    renum = [
        BrickTask(i, b.kind, b.row, b.x_start, b.x_end, b.z_base, b.height)
        for i, b in enumerate(bricks)
    ]
    if wall_length is None:
        wall_length = max((b.x_end for b in renum), default=0.0)
    graph, adhesions = compute_dependencies(renum)
    return WallPlan(tuple(renum), tuple(adhesions), graph, wall_length)


def task_distance(p: tuple[float, float], q: tuple[float, float]) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


def compute_conflicts(plan: WallPlan, r_c: float) -> ConflictSets:
    if not r_c > 0:
        raise ValueError("clearance radius must be positive")
    closure = plan.graph.reachable()
    bb = set()
    ba = set()
    bricks = plan.bricks
    for i, bi in enumerate(bricks):
        for bj in bricks[i + 1:]:
            if task_distance(bi.center, bj.center) > r_c + _DIST_TOL:
                continue
            if plan.graph.connected(brick_node(bi.id), brick_node(bj.id), closure):
                continue
            bb.add((min(bi.id, bj.id), max(bi.id, bj.id)))
    for b in bricks:
        for a in plan.adhesions:
            if task_distance(b.center, a.center) > r_c + _DIST_TOL:
                continue
            if plan.graph.connected(brick_node(b.id), adhesion_node(a.id), closure):
                continue
            ba.add((b.id, a.id))
    return ConflictSets(frozenset(bb), frozenset(ba))


def raw_conflicts(plan: WallPlan, r_c: float) -> ConflictSets:
    """Distance-only conflict sets, before dependent pairs are pruned."""
    bb = {
        (bi.id, bj.id)
        for i, bi in enumerate(plan.bricks)
        for bj in plan.bricks[i + 1:]
        if task_distance(bi.center, bj.center) <= r_c + _DIST_TOL
    }
    ba = {
        (b.id, a.id)
        for b in plan.bricks
        for a in plan.adhesions
        if task_distance(b.center, a.center) <= r_c + _DIST_TOL
    }
    return ConflictSets(frozenset(bb), frozenset(ba))


def brick_count(n_rows: int, n_cols: int) -> int:
    """Closed-form brick count of a running-bond wall."""
    return math.ceil(n_rows / 2) * n_cols + (n_rows // 2) * (n_cols + 1)
