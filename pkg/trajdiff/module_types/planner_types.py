import typing

import numpy as np
import pydantic

from . import base, objective_types, scene_types

PlannerName = typing.Literal['guided', 'unguided', 'langevin']
PLANNER_NAMES: tuple[PlannerName, ...] = typing.get_args(PlannerName)


class GuidanceConfig(base.Base):
    weights: objective_types.CostWeights = objective_types.CostWeights()
    energy: objective_types.TaskEnergy | None = None
    extra_steps: int = pydantic.Field(default=10, ge=0)
    guidance_enabled: bool = True
    gradient_limit: float = pydantic.Field(default=10.0, gt=0)
    seed: int = 0


class LangevinConfig(base.Base):
    steps: int = pydantic.Field(default=50, ge=1)
    alpha_start: float = pydantic.Field(default=0.1, ge=0)
    alpha_end: float = pydantic.Field(default=0.005, ge=0)
    seed: int = 0

    @pydantic.model_validator(mode='after')
    def validate_alphas(self) -> 'LangevinConfig':
        if not 0 < self.alpha_end <= self.alpha_start:
            raise ValueError('Langevin step sizes need 0 < alpha_end <= alpha_start')

        return self

    @property
    def alphas(self) -> np.ndarray:
        """Geometric decay from alpha_start to alpha_end over the iteration budget."""
        if self.steps == 1:
            return np.array([self.alpha_start])

        return np.geomspace(self.alpha_start, self.alpha_end, self.steps)


class PlannerConfig(base.Base):
    checkpoint: str
    scene_file: str
    task: scene_types.TaskSpec | None = None
    weights: objective_types.CostWeights = objective_types.CostWeights()
    K: int = pydantic.Field(default=10, ge=0)
    guidance_enabled: bool = True
    seed: int = 0


class StepDiagnostic(base.Base):
    step: int
    t: int
    phi: float
    e: float
    c_collision: float
    c_smoothness: float
    c_limit: float


class PlanDiagnostics(base.Base):
    steps: list[StepDiagnostic] = []
    wall_time_s: float = 0.0


class PlanResult(base.ArrayBase):
    trajectory: np.ndarray
    diagnostics: PlanDiagnostics
