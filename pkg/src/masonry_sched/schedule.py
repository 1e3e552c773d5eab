"""Schedule record shared by the solver, validator and simulator."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class ObjectiveBreakdown:
    c_max: float
    j_brick_log: float
    j_cur: float
    j_adh_log: float
    j: float

    def as_dict(self) -> dict:
        return {
            "c_max": self.c_max,
            "j_brick_log": self.j_brick_log,
            "j_cur": self.j_cur,
            "j_adh_log": self.j_adh_log,
            "j": self.j,
        }


@dataclass
class Schedule:
    brick_assignments: dict  # brick id -> robot index
    brick_starts: dict  # brick id -> seconds
    adhesion_starts: dict  # adhesion id -> seconds
    adhesion_durations: dict  # adhesion id -> seconds
    adhesion_order: list  # adhesion ids in execution order
    makespan: float = 0.0
    objective_breakdown: ObjectiveBreakdown | None = None

    def brick_end(self, i: int, d_brick: float) -> float:
        return self.brick_starts[i] + d_brick

    def adhesion_end(self, j: int) -> float:
        return self.adhesion_starts[j] + self.adhesion_durations[j]

    def copy(self) -> "Schedule":
        return Schedule(
            dict(self.brick_assignments),
            dict(self.brick_starts),
            dict(self.adhesion_starts),
            dict(self.adhesion_durations),
            list(self.adhesion_order),
            self.makespan,
            self.objective_breakdown,
        )
