"""
Planar mobile manipulator: a disc base (x, y, yaw) carrying a serial arm of revolute joints.

Frames are indexed 0 for the base, j for arm link j (origin at joint j) and n + 1 for the end effector
(origin at the arm tip). Every function accepts a single configuration of length d or a stack of them.
"""
import numpy as np
import numpy.typing as npt

from .module_types import base, robot_types


class DimensionError(ValueError):
    pass


class PointJacobians(base.ArrayBase):
    surface: np.ndarray
    gripper: np.ndarray


def as_configs(model: robot_types.RobotModel, q: npt.ArrayLike) -> npt.NDArray[np.float64]:
    configs = np.asarray(q, dtype=np.float64)

    if configs.ndim == 0 or configs.shape[-1] != model.dof:
        raise DimensionError(f'Expected configurations of length {model.dof}, got shape {configs.shape}')

    return configs


def frame_chain(
        model: robot_types.RobotModel,
        q: npt.ArrayLike
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Returns frame origins (..., n + 2, 2) and headings (..., n + 2)."""
    configs = as_configs(model, q)
    lengths = np.asarray(model.link_lengths)
    base_position = configs[..., :2]
    angles = np.cumsum(configs[..., 2:], axis=-1)

    steps = lengths[:, None] * np.stack([np.cos(angles[..., 1:]), np.sin(angles[..., 1:])], axis=-1)
    offsets = np.concatenate([np.zeros_like(steps[..., :1, :]), np.cumsum(steps, axis=-2)], axis=-2)
    joints = base_position[..., None, :] + offsets

    origins = np.concatenate([base_position[..., None, :], joints], axis=-2)
    headings = np.concatenate([angles, angles[..., -1:]], axis=-1)

    return origins, headings


def attached_points(
        model: robot_types.RobotModel,
        q: npt.ArrayLike,
        frames: npt.NDArray[np.int64],
        local: npt.NDArray[np.float64]
) -> npt.NDArray[np.float64]:
    origins, headings = frame_chain(model, q)
    heading = headings[..., frames]
    c, s = np.cos(heading), np.sin(heading)
    x = origins[..., frames, 0] + c * local[:, 0] - s * local[:, 1]
    y = origins[..., frames, 1] + s * local[:, 0] + c * local[:, 1]

    return np.stack([x, y], axis=-1)


def attached_jacobians(
        model: robot_types.RobotModel,
        q: npt.ArrayLike,
        frames: npt.NDArray[np.int64],
        local: npt.NDArray[np.float64]
) -> npt.NDArray[np.float64]:
    """d(point)/dq for points rigidly attached to the given frames, shape (..., P, 2, d)."""
    configs = as_configs(model, q)
    n_links = len(model.link_lengths)
    origins, _ = frame_chain(model, configs)
    points = attached_points(model, configs, frames, local)

    jacobians = np.zeros(points.shape[:-1] + (2, model.dof))
    jacobians[..., 0, 0] = 1.0
    jacobians[..., 1, 1] = 1.0

    # Pivot 0 (base centre) drives the yaw column, pivot k drives arm joint k.
    reach = np.minimum(frames, n_links)

    for column in range(n_links + 1):
        lever = points - origins[..., column:column + 1, :]
        active = (reach >= column).astype(np.float64)
        jacobians[..., 0, 2 + column] = -lever[..., 1] * active
        jacobians[..., 1, 2 + column] = lever[..., 0] * active

    return jacobians


def _surface_frames(model: robot_types.RobotModel) -> npt.NDArray[np.int64]:
    return model.surface_bodies


def _end_effector_frames(model: robot_types.RobotModel, count: int) -> npt.NDArray[np.int64]:
    return np.full(count, len(model.link_lengths) + 1)


def fk_end_effector(model: robot_types.RobotModel, q: npt.ArrayLike) -> robot_types.Pose2:
    configs = as_configs(model, q)

    if configs.ndim != 1:
        raise DimensionError('fk_end_effector expects a single configuration')

    return robot_types.Pose2.from_array(end_effector_poses(model, configs))


def end_effector_poses(model: robot_types.RobotModel, q: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """(x, y, heading) of the end effector, shape (..., 3)."""
    origins, headings = frame_chain(model, q)
    return np.concatenate([origins[..., -1, :], headings[..., -1:]], axis=-1)


def end_effector_jacobian(model: robot_types.RobotModel, q: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Rows: d(x)/dq, d(y)/dq, d(heading)/dq, shape (..., 3, d)."""
    configs = as_configs(model, q)
    tip = attached_jacobians(model, configs, _end_effector_frames(model, 1), np.zeros((1, 2)))[..., 0, :, :]
    heading = np.zeros(tip.shape[:-2] + (1, model.dof))
    heading[..., 0, 2:] = 1.0

    return np.concatenate([tip, heading], axis=-2)


def fk_surface_points(model: robot_types.RobotModel, q: npt.ArrayLike) -> npt.NDArray[np.float64]:
    return attached_points(model, q, _surface_frames(model), model.surface_local)


def fk_gripper_points(model: robot_types.RobotModel, q: npt.ArrayLike) -> npt.NDArray[np.float64]:
    return end_effector_points(model, q, model.gripper_local)


def end_effector_points(
        model: robot_types.RobotModel,
        q: npt.ArrayLike,
        local: npt.ArrayLike
) -> npt.NDArray[np.float64]:
    local = np.asarray(local, dtype=np.float64).reshape(-1, 2)
    return attached_points(model, q, _end_effector_frames(model, len(local)), local)


def end_effector_point_jacobians(
        model: robot_types.RobotModel,
        q: npt.ArrayLike,
        local: npt.ArrayLike
) -> npt.NDArray[np.float64]:
    local = np.asarray(local, dtype=np.float64).reshape(-1, 2)
    return attached_jacobians(model, q, _end_effector_frames(model, len(local)), local)


def surface_jacobians(model: robot_types.RobotModel, q: npt.ArrayLike) -> npt.NDArray[np.float64]:
    return attached_jacobians(model, q, _surface_frames(model), model.surface_local)


def jacobian_points(model: robot_types.RobotModel, q: npt.ArrayLike) -> PointJacobians:
    return PointJacobians(
        surface=surface_jacobians(model, q),
        gripper=end_effector_point_jacobians(model, q, model.gripper_local)
    )


def joint_violation_amount(
        model: robot_types.RobotModel,
        q: npt.ArrayLike,
        margin: float = 0.0
) -> npt.NDArray[np.float64]:
    if margin < 0:
        raise ValueError('Joint limit margin must be non-negative')

    configs = as_configs(model, q)
    lower = model.lower + margin
    upper = model.upper - margin

    return np.maximum(lower - configs, 0.0) + np.maximum(configs - upper, 0.0)


def rotation(angle: float) -> npt.NDArray[np.float64]:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def to_start_frame(trajectory: npt.ArrayLike, start: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Expresses base coordinates relative to the start pose; arm joints are unchanged."""
    local = np.array(trajectory, dtype=np.float64)
    start = np.asarray(start, dtype=np.float64)
    local[..., :2] = (local[..., :2] - start[:2]) @ rotation(start[2])
    local[..., 2] = local[..., 2] - start[2]

    return local


def from_start_frame(trajectory: npt.ArrayLike, start: npt.ArrayLike) -> npt.NDArray[np.float64]:
    world = np.array(trajectory, dtype=np.float64)
    start = np.asarray(start, dtype=np.float64)
    world[..., :2] = world[..., :2] @ rotation(start[2]).T + start[:2]
    world[..., 2] = world[..., 2] + start[2]

    return world


def gradient_to_start_frame(gradient: npt.ArrayLike, start: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Chain rule through from_start_frame: world-frame gradients become start-frame gradients."""
    local = np.array(gradient, dtype=np.float64)
    local[..., :2] = local[..., :2] @ rotation(np.asarray(start, dtype=np.float64)[2])

    return local
