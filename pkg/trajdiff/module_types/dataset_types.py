import typing

import numpy as np
import pydantic

from . import base, robot_types, scene_types

Split = typing.Literal['train', 'test', 'unseen']


class DatasetRecord(base.Base):
    task_id: str
    scene_file: str
    scene_seed: int
    task_index: int = 0
    task_type: scene_types.TaskType
    q0: list[float]
    trajectory: list[list[float]]
    goal: dict[str, typing.Any]
    split: Split = 'train'

    @pydantic.model_validator(mode='after')
    def validate_trajectory(self) -> 'DatasetRecord':
        if len(self.trajectory) < 2 or any(len(row) != len(self.q0) for row in self.trajectory):
            raise ValueError(f'Trajectory of {self.task_id} must have H >= 2 rows of length {len(self.q0)}')

        return self

    @property
    def array(self) -> robot_types.Trajectory:
        return np.asarray(self.trajectory, dtype=np.float64)

    @property
    def point_seed(self) -> int:
        return self.scene_seed * 1000 + self.task_index

    def task(self) -> scene_types.TaskSpec:
        return scene_types.TaskSpec(start=self.q0, **self.goal)


class SplitCounts(base.Base):
    train: int = 0
    test: int = 0
    unseen: int = 0


class Manifest(base.Base):
    seeds: list[int]
    tasks_per_scene: int
    task_type: scene_types.TaskType
    solved: int
    discarded: int
    split: SplitCounts
    discarded_tasks: list[str] = []


class TrainingExample(base.ArrayBase):
    """Start-frame trajectory paired with its conditioning point features."""
    trajectory: np.ndarray
    features: np.ndarray
