"""
Demonstration solver: damped least squares for a goal configuration, then covariant gradient descent on
collision, smoothness and joint-limit costs with both endpoints frozen.
"""
import logging

import backoff
import numpy as np
import numpy.typing as npt
from scipy import linalg

from . import kinematics, objective, scene
from .module_types import expert_types, robot_types, scene_types


class UnreachableGoalError(Exception):
    pass


class PlanningFailure(Exception):
    pass


class IkAttemptFailed(Exception):
    pass


def straight_line(q_start: npt.ArrayLike, q_goal: npt.ArrayLike, horizon: int) -> npt.NDArray[np.float64]:
    fractions = np.linspace(0.0, 1.0, horizon)[:, None]
    q_start = np.asarray(q_start, dtype=np.float64)
    return q_start + fractions * (np.asarray(q_goal, dtype=np.float64) - q_start)


def unwrap_goal(q_start: npt.ArrayLike, q_goal: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Moves the goal base yaw to the 2 pi branch closest to the start yaw."""
    q_goal = np.array(q_goal, dtype=np.float64)
    q_goal[2] = q_start[2] + objective.wrap_angle(q_goal[2] - q_start[2])
    return q_goal


def pose_errors(model: robot_types.RobotModel, q: npt.ArrayLike, goal: robot_types.Pose2) -> tuple[float, float]:
    pose = kinematics.end_effector_poses(model, q)
    return (
        float(np.hypot(*(pose[:2] - np.asarray(goal.position)))),
        float(abs(objective.wrap_angle(pose[2] - goal.heading)))
    )


def max_penetration(model: robot_types.RobotModel, sdf: scene_types.SceneSdf, trajectory: npt.ArrayLike) -> float:
    points = kinematics.fk_surface_points(model, trajectory)
    distances, _ = scene.query_sdf_batch(sdf, points.reshape(-1, 2))
    return float(max(-distances.min(), 0.0))


def smoothing_metric(horizon: int) -> tuple:
    """Cholesky factor of K^T K for the first-difference operator over interior steps."""
    interior = horizon - 2
    metric = 2 * np.eye(interior) - np.eye(interior, k=1) - np.eye(interior, k=-1)
    return linalg.cho_factor(metric)


class ExpertSolver:

    def __init__(
            self,
            model: robot_types.RobotModel,
            sdf: scene_types.SceneSdf,
            config: expert_types.ExpertConfig | None = None
    ):
        self.__model = model
        self.__sdf = sdf
        self.__config = config or expert_types.ExpertConfig()
        self.__costs = objective.Objective(model, sdf, None, self.__config.weights)
        self.__metric = smoothing_metric(self.__config.horizon)
        self.__logger = logging.getLogger('trajdiff.ExpertSolver')

    def __is_feasible(self, q: npt.NDArray[np.float64]) -> bool:
        weights = self.__config.weights
        points = kinematics.fk_surface_points(self.__model, q)
        distances, _ = scene.query_sdf_batch(self.__sdf, points)
        gripper, _ = scene.query_sdf_batch(self.__sdf, kinematics.fk_gripper_points(self.__model, q))
        violation = kinematics.joint_violation_amount(self.__model, q, weights.epsilon_l)

        return bool(distances.min() >= weights.epsilon_c and gripper.min() >= 0 and not violation.any())

    def __ik_seed(self, rng: np.random.Generator, goal: robot_types.Pose2) -> npt.NDArray[np.float64]:
        reach = sum(self.__model.link_lengths)
        distance = rng.uniform(0.3 * reach, 0.95 * reach)
        bearing = rng.uniform(-np.pi, np.pi)
        base = np.asarray(goal.position) - distance * np.array([np.cos(bearing), np.sin(bearing)])
        arm = rng.uniform(self.__model.lower[3:] / 2, self.__model.upper[3:] / 2)

        return np.concatenate([base, [rng.uniform(-np.pi, np.pi)], arm])

    def __ik_attempt(self, rng: np.random.Generator, goal: robot_types.Pose2) -> npt.NDArray[np.float64]:
        config = self.__config
        margin = config.weights.epsilon_l
        q = self.__ik_seed(rng, goal)
        target = goal.array

        for _ in range(config.ik_iterations):
            pose = kinematics.end_effector_poses(self.__model, q)
            error = np.concatenate([target[:2] - pose[:2], [objective.wrap_angle(target[2] - pose[2])]])

            if np.linalg.norm(error) <= config.ik_tolerance:
                break

            jacobian = kinematics.end_effector_jacobian(self.__model, q)
            damped = jacobian @ jacobian.T + config.ik_damping ** 2 * np.eye(3)
            q = q + jacobian.T @ np.linalg.solve(damped, error)
            q[3:] = np.clip(q[3:], self.__model.lower[3:] + margin, self.__model.upper[3:] - margin)

        position_error, heading_error = pose_errors(self.__model, q, goal)

        if position_error > config.ik_tolerance or heading_error > config.ik_tolerance:
            raise IkAttemptFailed('Damped least squares did not converge')

        if not self.__is_feasible(q):
            raise IkAttemptFailed('Goal configuration collides or violates limits')

        return q

    def solve_goal_config(self, goal: robot_types.Pose2, seed: int) -> npt.NDArray[np.float64]:
        rng = np.random.default_rng(seed)

        @backoff.on_exception(
            backoff.constant,
            IkAttemptFailed,
            max_tries=self.__config.goal_ik_attempts,
            interval=0,
            jitter=None,
            logger=None
        )
        def attempt() -> npt.NDArray[np.float64]:
            return self.__ik_attempt(rng, goal)

        try:
            return attempt()

        except IkAttemptFailed as e:
            raise UnreachableGoalError(
                f'No feasible configuration for goal {goal.array} after {self.__config.goal_ik_attempts} attempts'
            ) from e

    def __cost(self, trajectory: npt.NDArray[np.float64]) -> tuple[float, npt.NDArray[np.float64]]:
        report = self.__costs(trajectory)
        return -report.total, -report.gradient_unclipped

    def descend(self, trajectory: npt.NDArray[np.float64]) -> tuple[npt.NDArray[np.float64], list[float]]:
        """Covariant descent with backtracking; returns the final trajectory and every accepted cost."""
        config = self.__config
        trajectory = trajectory.copy()
        value, gradient = self.__cost(trajectory)
        accepted = [value]
        step = config.step_size

        for iteration in range(config.descent_steps):
            direction = linalg.cho_solve(self.__metric, gradient[1:-1])
            step = min(2 * step, config.step_size)

            while step >= config.min_step_size:
                candidate = trajectory.copy()
                candidate[1:-1] -= step * direction
                candidate_value, candidate_gradient = self.__cost(candidate)

                if candidate_value <= value:
                    break

                step /= 2

            else:
                self.__logger.debug(f'Line search exhausted at iteration {iteration}, cost {value:.6g}')
                break

            improvement = value - candidate_value
            trajectory, value, gradient = candidate, candidate_value, candidate_gradient
            accepted.append(value)

            if improvement <= config.relative_tolerance * max(value, 1.0):
                break

        return trajectory, accepted

    def __restart(self, rng: np.random.Generator, line: npt.NDArray[np.float64], index: int) -> npt.NDArray[np.float64]:
        if index == 0:
            return line.copy()

        bump = np.sin(np.linspace(0.0, np.pi, len(line)))[:, None]
        offsets = rng.normal(0.0, self.__config.restart_noise, size=line.shape[1])
        return line + bump * offsets

    def __acceptable(self, trajectory: npt.NDArray[np.float64], goal: robot_types.Pose2 | None) -> bool:
        config = self.__config

        if max_penetration(self.__model, self.__sdf, trajectory) > config.max_penetration:
            return False

        if kinematics.joint_violation_amount(self.__model, trajectory).any():
            return False

        if goal is None:
            return True

        position_error, heading_error = pose_errors(self.__model, trajectory[-1], goal)
        return position_error <= config.goal_pos and heading_error <= config.goal_ang

    def optimize_trajectory(
            self,
            q_start: npt.ArrayLike,
            q_goal: npt.ArrayLike,
            seed: int = 0,
            goal: robot_types.Pose2 | None = None
    ) -> npt.NDArray[np.float64]:
        rng = np.random.default_rng(seed)
        line = straight_line(q_start, q_goal, self.__config.horizon)
        best, best_value = None, None

        for index in range(self.__config.restarts):
            trajectory, accepted = self.descend(self.__restart(rng, line, index))

            if not self.__acceptable(trajectory, goal):
                self.__logger.debug(f'Restart {index} rejected at cost {accepted[-1]:.6g}')
                continue

            if best_value is None or accepted[-1] < best_value:
                best, best_value = trajectory, accepted[-1]

        if best is None:
            raise PlanningFailure(f'None of {self.__config.restarts} restarts met the acceptance thresholds')

        return best

    def goal_pose(self, task: scene_types.TaskSpec) -> list[robot_types.Pose2]:
        """End-effector poses that complete the task, in the order they should be tried."""
        if task.task_type == 'goal_reach':
            return [task.goal_pose]

        if task.task_type == 'place':
            return [task.target_area_pose.compose(task.grasp_offset.inverse())]

        start = np.asarray(task.start[:2])
        return sorted(task.grasp_candidates, key=lambda pose: float(np.hypot(*(np.asarray(pose.position) - start))))

    def solve(self, task: scene_types.TaskSpec, seed: int) -> npt.NDArray[np.float64]:
        """Full demonstration for a task: goal configuration then trajectory."""
        q_start = task.start_config

        for goal in self.goal_pose(task):
            try:
                q_goal = unwrap_goal(q_start, self.solve_goal_config(goal, seed))

            except UnreachableGoalError as e:
                self.__logger.debug(str(e))
                continue

            trajectory = self.optimize_trajectory(q_start, q_goal, seed, goal)
            trajectory[0] = q_start
            return trajectory

        raise UnreachableGoalError('No task goal pose has a feasible configuration')


def solve_goal_config(
        model: robot_types.RobotModel,
        sdf: scene_types.SceneSdf,
        goal: robot_types.Pose2,
        seed: int,
        config: expert_types.ExpertConfig | None = None
) -> npt.NDArray[np.float64]:
    return ExpertSolver(model, sdf, config).solve_goal_config(goal, seed)


def optimize_trajectory(
        model: robot_types.RobotModel,
        sdf: scene_types.SceneSdf,
        q_start: npt.ArrayLike,
        q_goal: npt.ArrayLike,
        config: expert_types.ExpertConfig | None = None,
        seed: int = 0
) -> npt.NDArray[np.float64]:
    return ExpertSolver(model, sdf, config).optimize_trajectory(q_start, q_goal, seed)
