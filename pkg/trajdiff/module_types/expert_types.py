import math

import pydantic

from . import base, objective_types


class ExpertConfig(base.Base):
    restarts: int = pydantic.Field(default=8, gt=0)
    descent_steps: int = pydantic.Field(default=400, gt=0)
    step_size: float = pydantic.Field(default=2e-3, gt=0)
    min_step_size: float = pydantic.Field(default=1e-9, gt=0)
    goal_ik_attempts: int = pydantic.Field(default=50, gt=0)
    ik_iterations: int = pydantic.Field(default=100, gt=0)
    ik_damping: float = pydantic.Field(default=0.05, gt=0)
    ik_tolerance: float = pydantic.Field(default=1e-3, gt=0)
    restart_noise: float = pydantic.Field(default=0.3, ge=0)
    horizon: int = pydantic.Field(default=50, ge=3)
    max_penetration: float = pydantic.Field(default=0.0, ge=0)
    goal_pos: float = pydantic.Field(default=0.04, ge=0)
    goal_ang_deg: float = pydantic.Field(default=20.0, ge=0)
    relative_tolerance: float = pydantic.Field(default=1e-7, ge=0)
    weights: objective_types.CostWeights = objective_types.CostWeights(lambda_smoothness=1.0)

    @property
    def goal_ang(self) -> float:
        return math.radians(self.goal_ang_deg)
