import math

import numpy as np
import numpy.typing as npt
import pydantic

from . import base

Config = npt.NDArray[np.float64]
Trajectory = npt.NDArray[np.float64]
Point = tuple[float, float]

UNBOUNDED = 1e9


class Pose2(base.Base, frozen=True):
    position: Point
    heading: float

    @pydantic.field_validator('position', 'heading')
    def validate_finite(cls, value):
        values = value if isinstance(value, tuple) else (value,)

        if not all(math.isfinite(v) for v in values):
            raise ValueError(f'Pose must be finite - {value}')

        return value

    @property
    def array(self) -> npt.NDArray[np.float64]:
        return np.array([self.position[0], self.position[1], self.heading])

    @classmethod
    def from_array(cls, values: npt.ArrayLike) -> 'Pose2':
        x, y, heading = (float(v) for v in values)
        return cls(position=(x, y), heading=heading)

    def transform(self, points: npt.ArrayLike) -> npt.NDArray[np.float64]:
        """Maps points expressed in this pose's frame into the parent frame."""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        c, s = math.cos(self.heading), math.sin(self.heading)
        rotation = np.array([[c, -s], [s, c]])
        return points @ rotation.T + np.asarray(self.position)

    def compose(self, other: 'Pose2') -> 'Pose2':
        position = self.transform([other.position])[0]
        return Pose2(position=(float(position[0]), float(position[1])), heading=self.heading + other.heading)

    def inverse(self) -> 'Pose2':
        c, s = math.cos(self.heading), math.sin(self.heading)
        x, y = self.position
        return Pose2(position=(-c * x - s * y, s * x - c * y), heading=-self.heading)


class RobotModel(base.Base, frozen=True):
    link_lengths: list[float]
    base_radius: float
    joint_lower: list[float]
    joint_upper: list[float]
    surface_template: list[list[Point]]
    gripper_template: list[Point]

    @pydantic.model_validator(mode='after')
    def validate_model(self) -> 'RobotModel':
        if not self.link_lengths or any(length <= 0 for length in self.link_lengths):
            raise ValueError('Link lengths must all be positive')

        if self.base_radius <= 0:
            raise ValueError('Base radius must be positive')

        if len(self.joint_lower) != self.dof or len(self.joint_upper) != self.dof:
            raise ValueError(f'Joint limits must have {self.dof} entries')

        if any(lower >= upper for lower, upper in zip(self.joint_lower, self.joint_upper)):
            raise ValueError('Joint lower limits must be below upper limits')

        if len(self.surface_template) != 1 + len(self.link_lengths):
            raise ValueError('Surface template needs one point list for the base and one per link')

        if not self.gripper_template:
            raise ValueError('Gripper template must not be empty')

        return self

    @property
    def dof(self) -> int:
        return 3 + len(self.link_lengths)

    @property
    def lower(self) -> npt.NDArray[np.float64]:
        return np.asarray(self.joint_lower, dtype=np.float64)

    @property
    def upper(self) -> npt.NDArray[np.float64]:
        return np.asarray(self.joint_upper, dtype=np.float64)

    @property
    def surface_local(self) -> npt.NDArray[np.float64]:
        return np.concatenate([np.asarray(body, dtype=np.float64).reshape(-1, 2) for body in self.surface_template])

    @property
    def surface_bodies(self) -> npt.NDArray[np.int64]:
        """Body index per surface point: 0 is the base, j is arm link j."""
        return np.concatenate([np.full(len(body), index) for index, body in enumerate(self.surface_template)])

    @property
    def gripper_local(self) -> npt.NDArray[np.float64]:
        return np.asarray(self.gripper_template, dtype=np.float64).reshape(-1, 2)
