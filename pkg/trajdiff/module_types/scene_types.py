import typing

import numpy as np
import pydantic

from . import base, robot_types

TaskType = typing.Literal['goal_reach', 'place', 'grasp']
PointClass = typing.Literal['scene', 'target_object', 'target_area', 'goal']
POINT_CLASSES: tuple[PointClass, ...] = typing.get_args(PointClass)


class OccupancyGrid(base.ArrayBase):
    resolution: float
    origin: robot_types.Point
    width: int
    height: int
    cells: np.ndarray

    @pydantic.model_validator(mode='after')
    def validate_grid(self) -> 'OccupancyGrid':
        if self.resolution <= 0:
            raise ValueError('Grid resolution must be positive')

        if self.width < 2 or self.height < 2:
            raise ValueError('Grid must be at least 2x2 cells')

        if self.cells.shape != (self.height, self.width) or self.cells.dtype != np.bool_:
            raise ValueError(f'Cells must be a ({self.height}, {self.width}) boolean array')

        return self

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(x_min, x_max, y_min, y_max) of the mapped area in metres."""
        x0, y0 = self.origin
        return x0, x0 + self.width * self.resolution, y0, y0 + self.height * self.resolution

    def cell_centers(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        x = self.origin[0] + (np.asarray(cols) + 0.5) * self.resolution
        y = self.origin[1] + (np.asarray(rows) + 0.5) * self.resolution
        return np.stack([x, y], axis=-1)

    def cell_of(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(row, col) of the cell containing each point, clamped into the grid."""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        cols = np.floor((points[:, 0] - self.origin[0]) / self.resolution).astype(int)
        rows = np.floor((points[:, 1] - self.origin[1]) / self.resolution).astype(int)
        return np.clip(rows, 0, self.height - 1), np.clip(cols, 0, self.width - 1)


class SceneSdf(base.ArrayBase):
    grid: OccupancyGrid
    distances: np.ndarray


class ScenePoints(base.ArrayBase):
    points: np.ndarray
    labels: np.ndarray
    padded: bool = False

    def of_class(self, point_class: PointClass) -> np.ndarray:
        return self.points[self.labels == POINT_CLASSES.index(point_class)]

    @property
    def features(self) -> np.ndarray:
        """(x, y, one-hot class) per point."""
        one_hot = np.eye(len(POINT_CLASSES))[self.labels]
        return np.concatenate([self.points, one_hot], axis=1)


class TargetObject(base.Base, frozen=True):
    center: robot_types.Point
    radius: float = pydantic.Field(gt=0)


class TaskSpec(base.Base, frozen=True):
    start: list[float]
    task_type: TaskType
    goal_pose: robot_types.Pose2 | None = None
    target_area_polygon: list[robot_types.Point] | None = None
    grasp_candidates: list[robot_types.Pose2] | None = None
    object_half_extents: tuple[float, float] | None = None
    grasp_offset: robot_types.Pose2 | None = None
    target_object: TargetObject | None = None

    @pydantic.model_validator(mode='after')
    def validate_payload(self) -> 'TaskSpec':
        if not all(np.isfinite(self.start)):
            raise ValueError('Start configuration must be finite')

        if self.task_type == 'goal_reach' and self.goal_pose is None:
            raise ValueError('goal_reach tasks need a goal_pose')

        if self.task_type == 'place' and (
                not self.target_area_polygon or len(self.target_area_polygon) != 4
                or self.object_half_extents is None or self.grasp_offset is None
        ):
            raise ValueError('place tasks need a 4-corner target_area_polygon, object_half_extents and grasp_offset')

        if self.task_type == 'grasp' and not self.grasp_candidates:
            raise ValueError('grasp tasks need at least one grasp candidate')

        return self

    @property
    def start_config(self) -> np.ndarray:
        return np.asarray(self.start, dtype=np.float64)

    @property
    def target_area_pose(self) -> robot_types.Pose2:
        """Pose of the placement footprint: polygon centre, heading along the first edge."""
        corners = np.asarray(self.target_area_polygon)
        center = corners.mean(axis=0)
        edge = corners[1] - corners[0]
        return robot_types.Pose2(position=(float(center[0]), float(center[1])), heading=float(np.arctan2(edge[1], edge[0])))


class SceneGeneratorSpec(base.Base):
    room_size: float = pydantic.Field(default=6.0, gt=0)
    resolution: float = pydantic.Field(default=0.05, gt=0)
    min_obstacles: int = pydantic.Field(default=3, ge=0)
    max_obstacles: int = pydantic.Field(default=8, ge=0)
    min_obstacle_size: float = pydantic.Field(default=0.15, gt=0)
    max_obstacle_size: float = pydantic.Field(default=0.6, gt=0)
    start_clearance: float = pydantic.Field(default=0.8, ge=0)
    goal_clearance: float = pydantic.Field(default=0.1, ge=0)
    min_travel: float = pydantic.Field(default=1.0, ge=0)
    task_type: TaskType = 'goal_reach'
    max_attempts: int = pydantic.Field(default=100, gt=0)

    @pydantic.model_validator(mode='after')
    def validate_bounds(self) -> 'SceneGeneratorSpec':
        if self.min_obstacles > self.max_obstacles:
            raise ValueError('min_obstacles must not exceed max_obstacles')

        if self.min_obstacle_size > self.max_obstacle_size:
            raise ValueError('min_obstacle_size must not exceed max_obstacle_size')

        if self.room_size < 10 * self.resolution:
            raise ValueError('Room must span at least 10 cells')

        return self


class Obstacle(base.Base, frozen=True):
    shape: typing.Literal['rectangle', 'circle']
    center: robot_types.Point
    half_extents: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.0

    def covers(self, points: np.ndarray) -> np.ndarray:
        offsets = np.abs(np.asarray(points) - np.asarray(self.center))

        if self.shape == 'circle':
            return np.hypot(offsets[..., 0], offsets[..., 1]) <= self.radius

        return (offsets[..., 0] <= self.half_extents[0]) & (offsets[..., 1] <= self.half_extents[1])


class Scene(base.ArrayBase):
    grid: OccupancyGrid
    task: TaskSpec
    obstacles: list[Obstacle] = []
