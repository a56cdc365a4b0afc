import math

import pydantic

from . import base


class EvalThresholds(base.Base):
    goal_pos: float = pydantic.Field(default=0.04, gt=0)
    goal_ang_deg: float = pydantic.Field(default=20.0, gt=0)
    grasp_pos: float = pydantic.Field(default=0.02, gt=0)
    grasp_ang_deg: float = pydantic.Field(default=15.0, gt=0)
    overlap_ratio: float = pydantic.Field(default=0.5, gt=0)
    sparc_smooth: float = pydantic.Field(default=-1.6, lt=0)
    sample_rate: float = pydantic.Field(default=10.0, gt=0)

    @property
    def goal_ang(self) -> float:
        return math.radians(self.goal_ang_deg)

    @property
    def grasp_ang(self) -> float:
        return math.radians(self.grasp_ang_deg)


class Collision(base.Base):
    any: bool
    max_depth: float


class SparcResult(base.Base):
    value: float
    degenerate: bool = False


class EvalReport(base.Base):
    success: bool
    pos_error: float
    ang_error: float
    collision: Collision
    joint_violation_rate: float
    sparc_config: float
    sparc_ee: float
    smooth: bool
    solve_time: float = 0.0
    overlap: float | None = None

    @pydantic.model_validator(mode='after')
    def validate_success(self) -> 'EvalReport':
        if self.success and (self.collision.any or self.joint_violation_rate > 0):
            raise ValueError('A successful trajectory cannot collide or violate joint limits')

        return self


class BenchmarkRow(base.Base):
    """One planner run on one task; metric fields are empty when the planner failed."""
    task_id: str
    planner: str
    seed: int
    success: bool
    pos_error: float | None = None
    ang_error: float | None = None
    collision_any: bool | None = None
    max_depth: float | None = None
    joint_violation_rate: float | None = None
    sparc_config: float | None = None
    sparc_ee: float | None = None
    solve_time_s: float = 0.0

    @property
    def scored(self) -> bool:
        return self.collision_any is not None

    @classmethod
    def from_report(cls, task_id: str, planner: str, seed: int, report: EvalReport) -> 'BenchmarkRow':
        return cls(
            task_id=task_id,
            planner=planner,
            seed=seed,
            success=report.success,
            pos_error=report.pos_error,
            ang_error=report.ang_error,
            collision_any=report.collision.any,
            max_depth=report.collision.max_depth,
            joint_violation_rate=report.joint_violation_rate,
            sparc_config=report.sparc_config,
            sparc_ee=report.sparc_ee,
            solve_time_s=report.solve_time
        )


class AggregateRow(base.Base):
    planner: str
    tasks: int
    success_pct: float
    collision_pct: float | None
    mean_depth: float | None
    median_depth: float | None
    mean_sparc_config: float | None
    mean_sparc_ee: float | None
    joint_violation_pct: float | None
    smooth_pct: float | None
    mean_solve_time_s: float


ROW_COLUMNS = list(BenchmarkRow.model_fields)
AGGREGATE_COLUMNS = list(AggregateRow.model_fields)
