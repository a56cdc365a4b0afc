import typing

import numpy as np
import pydantic

from . import base, robot_types

EnergyKind = typing.Literal['goal_reach', 'place', 'grasp_surrogate']
TermName = typing.Literal['e', 'c_collision', 'c_smoothness', 'c_limit']
TERM_NAMES: tuple[TermName, ...] = typing.get_args(TermName)


class CostWeights(base.Base):
    lambda_collision: float = pydantic.Field(default=1.0, ge=0)
    lambda_smoothness: float = pydantic.Field(default=0.1, ge=0)
    lambda_limit: float = pydantic.Field(default=1.0, ge=0)
    energy_weight: float = pydantic.Field(default=1.0, ge=0)
    epsilon_c: float = pydantic.Field(default=0.03, gt=0)
    epsilon_l: float = pydantic.Field(default=0.02, ge=0)

    @classmethod
    def zero(cls) -> 'CostWeights':
        return cls(lambda_collision=0.0, lambda_smoothness=0.0, lambda_limit=0.0, energy_weight=0.0)

    def scale_of(self, term: TermName) -> float:
        return {
            'e': self.energy_weight,
            'c_collision': self.lambda_collision,
            'c_smoothness': self.lambda_smoothness,
            'c_limit': self.lambda_limit
        }[term]


class GraspSettings(base.Base):
    temperature: float = pydantic.Field(default=20.0, gt=0)
    angle_weight: float = pydantic.Field(default=0.1, ge=0)


class TaskEnergy(base.Base, frozen=True):
    kind: EnergyKind
    goal_points: list[robot_types.Point] | None = None
    object_points: list[robot_types.Point] | None = None
    target_area_points: list[robot_types.Point] | None = None
    grasp_offset: robot_types.Pose2 | None = None
    grasp_candidates: list[robot_types.Pose2] | None = None
    temperature: float = pydantic.Field(default=20.0, gt=0)
    angle_weight: float = pydantic.Field(default=0.1, ge=0)

    @pydantic.model_validator(mode='after')
    def validate_payload(self) -> 'TaskEnergy':
        if self.kind == 'goal_reach' and not self.goal_points:
            raise ValueError('goal_reach energy needs goal points')

        if self.kind == 'place' and (not self.object_points or not self.target_area_points or self.grasp_offset is None):
            raise ValueError('place energy needs object points, target area points and a grasp offset')

        if self.kind == 'grasp_surrogate' and not self.grasp_candidates:
            raise ValueError('grasp energy needs at least one candidate')

        return self


class ObjectiveReport(base.ArrayBase):
    total: float
    terms: dict[TermName, float]
    gradient: np.ndarray
    gradient_unclipped: np.ndarray
