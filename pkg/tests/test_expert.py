import numpy as np
import pytest

from trajdiff import expert, kinematics, scene
from trajdiff.module_types import expert_types, robot_types, scene_types

from .conftest import room_grid


@pytest.fixture
def empty_sdf():
    return scene.build_sdf(room_grid())


@pytest.fixture
def config() -> expert_types.ExpertConfig:
    return expert_types.ExpertConfig(restarts=2, descent_steps=60, horizon=12, goal_ik_attempts=20)


def test_straight_line_endpoints():
    line = expert.straight_line([0.0, 1.0], [2.0, 3.0], 5)

    assert line.shape == (5, 2)
    assert np.allclose(line[0], [0, 1]) and np.allclose(line[-1], [2, 3])
    assert np.allclose(np.diff(line, axis=0), 0.5)


def test_goal_yaw_is_unwrapped_toward_the_start():
    goal = expert.unwrap_goal([0, 0, 3.0, 0, 0, 0], [1, 1, -3.0, 0, 0, 0])
    assert goal[2] == pytest.approx(2 * np.pi - 3.0)


def test_goal_config_reaches_the_pose(robot, empty_sdf, config):
    goal = robot_types.Pose2(position=(2.0, 2.0), heading=0.3)
    q = expert.solve_goal_config(robot, empty_sdf, goal, seed=0, config=config)
    position_error, heading_error = expert.pose_errors(robot, q, goal)

    assert position_error <= config.ik_tolerance and heading_error <= config.ik_tolerance
    assert not kinematics.joint_violation_amount(robot, q).any()
    assert expert.max_penetration(robot, empty_sdf, q[None]) == 0.0


def test_goal_inside_an_obstacle_is_unreachable(robot, sdf, config):
    goal = robot_types.Pose2(position=(2.0, 2.0), heading=0.0)

    with pytest.raises(expert.UnreachableGoalError):
        expert.solve_goal_config(robot, sdf, goal, seed=0, config=config.model_copy(update={'goal_ik_attempts': 3}))


def test_descent_never_increases_cost(robot, sdf, config):
    solver = expert.ExpertSolver(robot, sdf, config)
    line = expert.straight_line([0.8, 1.2, 0, 0.3, 0, 0], [3.2, 2.8, 0.5, -0.3, 0.2, 0], config.horizon)
    trajectory, accepted = solver.descend(line)

    assert np.all(np.diff(accepted) <= 0)
    assert np.array_equal(trajectory[0], line[0]) and np.array_equal(trajectory[-1], line[-1])


def test_optimized_trajectory_is_acceptable(robot, empty_sdf, config):
    q_start = np.array([1.2, 1.2, 0.0, 0.2, 0.1, 0.0])
    q_goal = np.array([2.5, 2.0, 0.8, -0.4, 0.5, 0.2])
    trajectory = expert.optimize_trajectory(robot, empty_sdf, q_start, q_goal, config)

    assert trajectory.shape == (config.horizon, robot.dof)
    assert np.allclose(trajectory[0], q_start) and np.allclose(trajectory[-1], q_goal)
    assert expert.max_penetration(robot, empty_sdf, trajectory) == 0.0


def test_start_inside_an_obstacle_fails(robot, sdf, config):
    with pytest.raises(expert.PlanningFailure):
        expert.optimize_trajectory(robot, sdf, [2.0, 2.0, 0, 0, 0, 0], [1.0, 1.0, 0, 0, 0, 0], config)


def test_solve_goal_task(robot, empty_sdf, config):
    # Everything the arm can reach from either end stays clear of the walls.
    task = scene_types.TaskSpec(
        start=[1.6, 1.6, 0.3, 0.2, -0.4, 0.1],
        task_type='goal_reach',
        goal_pose=robot_types.Pose2(position=(2.0, 2.0), heading=0.5)
    )
    trajectory = expert.ExpertSolver(robot, empty_sdf, config).solve(task, seed=1)
    position_error, heading_error = expert.pose_errors(robot, trajectory[-1], task.goal_pose)

    assert np.array_equal(trajectory[0], task.start_config)
    assert position_error <= config.goal_pos and heading_error <= config.goal_ang
