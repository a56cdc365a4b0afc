import logging

import numpy as np
import numpy.typing as npt
from scipy import ndimage

from . import kinematics
from .module_types import robot_types, scene_types

SENTINEL_DISTANCE = 1e6
FAR_POINT = (50.0, 50.0)
SCENE_POINT_COUNT = 512
TASK_POINT_COUNT = 64

logger = logging.getLogger('trajdiff.scene')


class SceneError(Exception):
    pass


def build_sdf(grid: scene_types.OccupancyGrid) -> scene_types.SceneSdf:
    occupied = grid.cells

    if not occupied.any():
        distances = np.full(occupied.shape, SENTINEL_DISTANCE)

    elif occupied.all():
        distances = np.full(occupied.shape, -SENTINEL_DISTANCE)

    else:
        outside = ndimage.distance_transform_edt(~occupied)
        inside = ndimage.distance_transform_edt(occupied)
        distances = (outside - inside) * grid.resolution

    return scene_types.SceneSdf(grid=grid, distances=distances)


def query_sdf_batch(
        sdf: scene_types.SceneSdf,
        points: npt.ArrayLike
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """
    Bilinear interpolation between cell centres.

    Returns values (N,) in metres and exact gradients (N, 2) of the bilinear surface. Points beyond the
    outermost cell centres take the clamped edge value and a zero gradient.
    """
    grid = sdf.grid
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    u = (points[:, 0] - grid.origin[0]) / grid.resolution - 0.5
    v = (points[:, 1] - grid.origin[1]) / grid.resolution - 0.5
    outside = (u < 0) | (u > grid.width - 1) | (v < 0) | (v > grid.height - 1)

    u = np.clip(u, 0, grid.width - 1)
    v = np.clip(v, 0, grid.height - 1)
    # Shared patch edges belong to the lower-index patch.
    col = np.clip(np.ceil(u).astype(int) - 1, 0, grid.width - 2)
    row = np.clip(np.ceil(v).astype(int) - 1, 0, grid.height - 2)
    fu = u - col
    fv = v - row

    d00 = sdf.distances[row, col]
    d01 = sdf.distances[row, col + 1]
    d10 = sdf.distances[row + 1, col]
    d11 = sdf.distances[row + 1, col + 1]

    values = (1 - fv) * ((1 - fu) * d00 + fu * d01) + fv * ((1 - fu) * d10 + fu * d11)
    gradients = np.stack([
        (1 - fv) * (d01 - d00) + fv * (d11 - d10),
        (1 - fu) * (d10 - d00) + fu * (d11 - d01)
    ], axis=-1) / grid.resolution
    gradients[outside] = 0.0

    return values, gradients


def query_sdf(sdf: scene_types.SceneSdf, p: npt.ArrayLike) -> tuple[float, npt.NDArray[np.float64]]:
    values, gradients = query_sdf_batch(sdf, p)
    return float(values[0]), gradients[0]


def boundary_points(grid: scene_types.OccupancyGrid) -> npt.NDArray[np.float64]:
    """Midpoints of every edge shared by an occupied cell and a free 4-neighbour, in row-major order."""
    occupied = grid.cells
    found = []

    for d_row, d_col in ((0, 1), (1, 0)):
        first = occupied[:occupied.shape[0] - d_row, :occupied.shape[1] - d_col]
        second = occupied[d_row:, d_col:]
        rows, cols = np.nonzero(first != second)
        centers = grid.cell_centers(rows, cols)
        found.append(centers + 0.5 * grid.resolution * np.array([d_col, d_row]))

    points = np.concatenate(found)
    order = np.lexsort((points[:, 0], points[:, 1]))

    return points[order]


def task_world_points(
        model: robot_types.RobotModel,
        task: scene_types.TaskSpec,
        rng: np.random.Generator,
        count: int = TASK_POINT_COUNT
) -> tuple[npt.NDArray[np.float64], scene_types.PointClass]:
    if task.task_type == 'goal_reach':
        template = model.gripper_local[np.arange(count) % len(model.gripper_local)]
        return task.goal_pose.transform(template), 'goal'

    if task.task_type == 'place':
        half = np.asarray(task.object_half_extents)
        local = rng.uniform(-half, half, size=(count, 2))
        return task.target_area_pose.transform(local), 'target_area'

    if task.target_object is not None:
        angles = 2 * np.pi * np.arange(count) / count
        circle = task.target_object.radius * np.stack([np.cos(angles), np.sin(angles)], axis=-1)
        return circle + np.asarray(task.target_object.center), 'target_object'

    positions = np.array([candidate.position for candidate in task.grasp_candidates])
    return positions[np.arange(count) % len(positions)], 'target_object'


def to_base_frame(points: npt.ArrayLike, start: npt.ArrayLike) -> npt.NDArray[np.float64]:
    start = np.asarray(start, dtype=np.float64)
    return (np.asarray(points, dtype=np.float64) - start[:2]) @ kinematics.rotation(start[2])


def sample_scene_points(
        sdf: scene_types.SceneSdf,
        task: scene_types.TaskSpec,
        seed: int,
        model: robot_types.RobotModel,
        scene_count: int = SCENE_POINT_COUNT,
        task_count: int = TASK_POINT_COUNT
) -> scene_types.ScenePoints:
    rng = np.random.default_rng(seed)
    candidates = boundary_points(sdf.grid)
    padded = len(candidates) == 0

    if padded:
        logger.warning('Scene has no obstacle boundary - padding with the far sentinel point')
        scene_points = np.tile(np.asarray(FAR_POINT), (scene_count, 1))

    else:
        chosen = rng.choice(len(candidates), size=scene_count, replace=len(candidates) < scene_count)
        scene_points = to_base_frame(candidates[chosen], task.start)

    world_task_points, task_class = task_world_points(model, task, rng, task_count)

    return scene_types.ScenePoints(
        points=np.concatenate([scene_points, to_base_frame(world_task_points, task.start)]),
        labels=np.concatenate([
            np.full(scene_count, scene_types.POINT_CLASSES.index('scene')),
            np.full(task_count, scene_types.POINT_CLASSES.index(task_class))
        ]),
        padded=padded
    )
