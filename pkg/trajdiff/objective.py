"""
Task energies and physical-constraint costs over whole trajectories.

Every term returns (value, gradient) with the gradient shaped like the trajectory. The guidance objective
is the negated weighted sum phi = -(energy_weight * e + sum lambda_i * c_i), so larger is better.
"""
import functools
import logging

import numpy as np
import numpy.typing as npt
from scipy import special

from . import kinematics, scene
from .module_types import objective_types, robot_types, scene_types

GRADIENT_LIMIT = 10.0
OBJECT_GRID = 5

TermResult = tuple[float, npt.NDArray[np.float64]]


class ObjectiveError(Exception):

    def __init__(self, term: str, message: str | None = None):
        self.term = term
        super().__init__(message or f'Objective term {term} is not finite')


def finite_term(term: objective_types.TermName):
    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs) -> TermResult:
            value, gradient = func(*args, **kwargs)

            if not np.isfinite(value) or not np.all(np.isfinite(gradient)):
                raise ObjectiveError(term)

            return value, gradient

        return wrapper

    return decorator


def as_trajectory(model: robot_types.RobotModel, trajectory: npt.ArrayLike) -> npt.NDArray[np.float64]:
    trajectory = kinematics.as_configs(model, trajectory)

    if trajectory.ndim != 2 or len(trajectory) < 2:
        raise kinematics.DimensionError(f'Trajectory must be an H x {model.dof} matrix with H >= 2')

    return trajectory


def collision_hinge(
        distances: npt.NDArray[np.float64],
        epsilon_c: float
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """Penetration hinge on signed distance and its derivative."""
    inside = distances < 0
    margin = (distances >= 0) & (distances <= epsilon_c)

    values = np.where(inside, -distances + 0.5 * epsilon_c, 0.0)
    values = np.where(margin, (distances - epsilon_c) ** 2 / (2 * epsilon_c), values)
    slopes = np.where(inside, -1.0, 0.0)
    slopes = np.where(margin, (distances - epsilon_c) / epsilon_c, slopes)

    return values, slopes


@finite_term('c_collision')
def cost_collision(
        model: robot_types.RobotModel,
        sdf: scene_types.SceneSdf,
        trajectory: npt.ArrayLike,
        epsilon_c: float
) -> TermResult:
    if epsilon_c <= 0:
        raise ValueError('Collision margin must be positive')

    trajectory = as_trajectory(model, trajectory)
    points = kinematics.fk_surface_points(model, trajectory)
    distances, directions = scene.query_sdf_batch(sdf, points.reshape(-1, 2))
    values, slopes = collision_hinge(distances, epsilon_c)

    horizon, count = points.shape[:2]
    touched = slopes.reshape(horizon, count) != 0
    gradient = np.zeros_like(trajectory)

    if touched.any():
        rows = touched.any(axis=1)
        jacobians = kinematics.surface_jacobians(model, trajectory[rows])
        point_gradients = (slopes[:, None] * directions).reshape(horizon, count, 2)[rows]
        gradient[rows] = np.einsum('hni,hnid->hd', point_gradients, jacobians)

    return float(values.sum()), gradient


@finite_term('c_smoothness')
def cost_smoothness(trajectory: npt.ArrayLike) -> TermResult:
    trajectory = np.asarray(trajectory, dtype=np.float64)

    if trajectory.ndim != 2 or len(trajectory) < 3:
        raise ValueError('Smoothness needs a trajectory with at least 3 steps')

    acceleration = trajectory[2:] - 2 * trajectory[1:-1] + trajectory[:-2]
    gradient = np.zeros_like(trajectory)
    gradient[2:] += 2 * acceleration
    gradient[1:-1] -= 4 * acceleration
    gradient[:-2] += 2 * acceleration

    return float(np.sum(acceleration ** 2)), gradient


@finite_term('c_limit')
def cost_joint_limits(model: robot_types.RobotModel, trajectory: npt.ArrayLike, epsilon_l: float) -> TermResult:
    if epsilon_l < 0:
        raise ValueError('Joint limit margin must be non-negative')

    trajectory = as_trajectory(model, trajectory)
    below = np.maximum(model.lower + epsilon_l - trajectory, 0.0)
    above = np.maximum(trajectory - (model.upper - epsilon_l), 0.0)

    return float(np.sum(below ** 2 + above ** 2)), 2 * (above - below)


def chamfer(
        p: npt.ArrayLike,
        q: npt.ArrayLike
) -> tuple[float, npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """
    Symmetric squared chamfer distance and its gradients w.r.t. both clouds.

    Nearest-neighbour ties resolve to the lowest index.
    """
    p = np.asarray(p, dtype=np.float64).reshape(-1, 2)
    q = np.asarray(q, dtype=np.float64).reshape(-1, 2)

    if len(p) == 0 or len(q) == 0:
        raise ValueError('Chamfer distance needs two non-empty point sets')

    squared = np.sum((p[:, None, :] - q[None, :, :]) ** 2, axis=-1)
    nearest_q = np.argmin(squared, axis=1)
    nearest_p = np.argmin(squared, axis=0)
    value = squared[np.arange(len(p)), nearest_q].sum() + squared[nearest_p, np.arange(len(q))].sum()

    grad_p = 2 * (p - q[nearest_q])
    grad_q = 2 * (q - p[nearest_p])
    np.add.at(grad_q, nearest_q, 2 * (q[nearest_q] - p))
    np.add.at(grad_p, nearest_p, 2 * (p[nearest_p] - q))

    return float(value), grad_p, grad_q


def _final_row_gradient(trajectory: npt.NDArray[np.float64], row: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    gradient = np.zeros_like(trajectory)
    gradient[-1] = row
    return gradient


def _end_effector_chamfer(
        model: robot_types.RobotModel,
        trajectory: npt.NDArray[np.float64],
        local: npt.NDArray[np.float64],
        target: npt.ArrayLike
) -> TermResult:
    final = trajectory[-1]
    points = kinematics.end_effector_points(model, final, local)
    value, grad_points, _ = chamfer(points, target)
    jacobians = kinematics.end_effector_point_jacobians(model, final, local)

    return value, _final_row_gradient(trajectory, np.einsum('pi,pid->d', grad_points, jacobians))


def energy_goal_reach(model: robot_types.RobotModel, trajectory: npt.ArrayLike, goal_points: npt.ArrayLike) -> TermResult:
    trajectory = as_trajectory(model, trajectory)
    return _end_effector_chamfer(model, trajectory, model.gripper_local, goal_points)


def energy_place(
        model: robot_types.RobotModel,
        trajectory: npt.ArrayLike,
        object_points: npt.ArrayLike,
        target_area_points: npt.ArrayLike,
        grasp_offset: robot_types.Pose2
) -> TermResult:
    """Chamfer between the held object's footprint and the target area, object carried at grasp_offset."""
    trajectory = as_trajectory(model, trajectory)
    return _end_effector_chamfer(model, trajectory, grasp_offset.transform(object_points), target_area_points)


def wrap_angle(angle: npt.ArrayLike) -> npt.NDArray[np.float64]:
    return (np.asarray(angle, dtype=np.float64) + np.pi) % (2 * np.pi) - np.pi


def energy_grasp_surrogate(
        model: robot_types.RobotModel,
        trajectory: npt.ArrayLike,
        grasp_candidates: list[robot_types.Pose2],
        temperature: float,
        angle_weight: float
) -> TermResult:
    """
    Smooth minimum over candidate grasp poses of position error squared plus weighted heading error squared.

    The soft minimum sits below the hard minimum by at most log(n) / temperature. It is clamped at zero
    with a zero gradient there, so the energy never goes negative.
    """
    if not grasp_candidates:
        raise ValueError('Grasp energy needs at least one candidate')

    if temperature <= 0:
        raise ValueError('Grasp temperature must be positive')

    trajectory = as_trajectory(model, trajectory)
    pose = kinematics.end_effector_poses(model, trajectory[-1])
    candidates = np.array([candidate.array for candidate in grasp_candidates])

    offsets = pose[:2] - candidates[:, :2]
    heading_errors = wrap_angle(pose[2] - candidates[:, 2])
    distances = np.sum(offsets ** 2, axis=1) + angle_weight * heading_errors ** 2

    value = -special.logsumexp(-temperature * distances) / temperature

    if value <= 0:
        return 0.0, np.zeros_like(trajectory)

    weights = special.softmax(-temperature * distances)
    pose_gradient = np.concatenate([
        2 * weights @ offsets,
        [2 * angle_weight * weights @ heading_errors]
    ])
    row = pose_gradient @ kinematics.end_effector_jacobian(model, trajectory[-1])

    return float(value), _final_row_gradient(trajectory, row)


@finite_term('e')
def evaluate_energy(
        model: robot_types.RobotModel,
        trajectory: npt.ArrayLike,
        energy: objective_types.TaskEnergy | None
) -> TermResult:
    if energy is None:
        return 0.0, np.zeros_like(as_trajectory(model, trajectory))

    if energy.kind == 'goal_reach':
        return energy_goal_reach(model, trajectory, energy.goal_points)

    if energy.kind == 'place':
        return energy_place(model, trajectory, energy.object_points, energy.target_area_points, energy.grasp_offset)

    return energy_grasp_surrogate(
        model, trajectory, energy.grasp_candidates, energy.temperature, energy.angle_weight
    )


def evaluate_objective(
        model: robot_types.RobotModel,
        sdf: scene_types.SceneSdf,
        trajectory: npt.ArrayLike,
        energy: objective_types.TaskEnergy | None,
        weights: objective_types.CostWeights,
        gradient_limit: float = GRADIENT_LIMIT
) -> objective_types.ObjectiveReport:
    trajectory = as_trajectory(model, trajectory)
    results = {
        'e': evaluate_energy(model, trajectory, energy),
        'c_collision': cost_collision(model, sdf, trajectory, weights.epsilon_c),
        'c_smoothness': cost_smoothness(trajectory),
        'c_limit': cost_joint_limits(model, trajectory, weights.epsilon_l)
    }

    total = 0.0
    gradient = np.zeros_like(trajectory)

    for term, (value, term_gradient) in results.items():
        scale = weights.scale_of(term)
        total -= scale * value
        gradient -= scale * term_gradient

    if not np.isfinite(total) or not np.all(np.isfinite(gradient)):
        raise ObjectiveError('phi')

    return objective_types.ObjectiveReport(
        total=total,
        terms={term: value for term, (value, _) in results.items()},
        gradient=np.clip(gradient, -gradient_limit, gradient_limit),
        gradient_unclipped=gradient
    )


def object_grid(half_extents: tuple[float, float], count: int = OBJECT_GRID) -> npt.NDArray[np.float64]:
    """Footprint sample points of a rectangular object in its own frame."""
    xs = np.linspace(-half_extents[0], half_extents[0], count)
    ys = np.linspace(-half_extents[1], half_extents[1], count)
    grid_x, grid_y = np.meshgrid(xs, ys)
    return np.stack([grid_x.ravel(), grid_y.ravel()], axis=-1)


def _points(values: npt.NDArray[np.float64]) -> list[robot_types.Point]:
    return [(float(x), float(y)) for x, y in values]


def task_energy(
        model: robot_types.RobotModel,
        task: scene_types.TaskSpec,
        grasp: objective_types.GraspSettings | None = None
) -> objective_types.TaskEnergy:
    grasp = grasp or objective_types.GraspSettings()

    if task.task_type == 'goal_reach':
        return objective_types.TaskEnergy(
            kind='goal_reach',
            goal_points=_points(task.goal_pose.transform(model.gripper_local))
        )

    if task.task_type == 'place':
        footprint = object_grid(task.object_half_extents)
        return objective_types.TaskEnergy(
            kind='place',
            object_points=_points(footprint),
            target_area_points=_points(task.target_area_pose.transform(footprint)),
            grasp_offset=task.grasp_offset
        )

    return objective_types.TaskEnergy(
        kind='grasp_surrogate',
        grasp_candidates=task.grasp_candidates,
        temperature=grasp.temperature,
        angle_weight=grasp.angle_weight
    )


class Objective:
    """Objective bound to one robot, scene and task; callable on trajectories."""

    def __init__(
            self,
            model: robot_types.RobotModel,
            sdf: scene_types.SceneSdf,
            energy: objective_types.TaskEnergy | None,
            weights: objective_types.CostWeights,
            gradient_limit: float = GRADIENT_LIMIT
    ):
        self.model = model
        self.sdf = sdf
        self.energy = energy
        self.weights = weights
        self.gradient_limit = gradient_limit
        self.__logger = logging.getLogger('trajdiff.Objective')

    def __call__(self, trajectory: npt.ArrayLike) -> objective_types.ObjectiveReport:
        report = evaluate_objective(self.model, self.sdf, trajectory, self.energy, self.weights, self.gradient_limit)
        self.__logger.debug(f'phi={report.total:.6f} terms={report.terms}')
        return report

    def costs_only(self) -> 'Objective':
        return Objective(self.model, self.sdf, None, self.weights, self.gradient_limit)
