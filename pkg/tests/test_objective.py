import numpy as np
import pytest

from trajdiff import kinematics, objective
from trajdiff.module_types import objective_types, robot_types, scene_types

from .conftest import central_difference, relative_error, room_grid

CASES = 100


@pytest.fixture
def plane_sdf() -> scene_types.SceneSdf:
    # Signed distance to the line x = 1: bilinear interpolation reproduces it exactly, with no seams.
    grid = room_grid()
    centres = grid.cell_centers(*np.indices(grid.cells.shape))
    return scene_types.SceneSdf(grid=grid, distances=centres[..., 0] - 1.0)


def random_trajectory(rng: np.random.Generator, horizon: int = 5) -> np.ndarray:
    base = np.array([1.2, 2.0, 0.0]) + rng.normal(scale=[0.15, 0.3, 1.0], size=(horizon, 3))
    arm = rng.uniform(-2.5, 2.5, size=(horizon, 3))
    return np.concatenate([base, arm], axis=1)


def test_smoothness_value_and_gradient():
    rng = np.random.default_rng(0)

    for _ in range(CASES):
        trajectory = rng.normal(size=(6, 4))
        value, gradient = objective.cost_smoothness(trajectory)
        acceleration = trajectory[2:] - 2 * trajectory[1:-1] + trajectory[:-2]

        assert value == pytest.approx(np.sum(acceleration ** 2))
        numeric = central_difference(lambda x: objective.cost_smoothness(x)[0], trajectory)
        assert relative_error(gradient, numeric) < 1e-6


def test_smoothness_of_a_line_is_zero():
    trajectory = np.linspace(0, 1, 10)[:, None] * np.ones((1, 6))
    assert objective.cost_smoothness(trajectory)[0] == pytest.approx(0.0)


def test_smoothness_needs_three_steps():
    with pytest.raises(ValueError):
        objective.cost_smoothness(np.zeros((2, 6)))


def test_joint_limit_gradient(robot):
    rng = np.random.default_rng(1)

    for _ in range(CASES):
        trajectory = random_trajectory(rng)
        trajectory[:, 3:] *= 1.3
        value, gradient = objective.cost_joint_limits(robot, trajectory, 0.02)
        numeric = central_difference(lambda x: objective.cost_joint_limits(robot, x, 0.02)[0], trajectory)

        assert value >= 0
        assert np.allclose(gradient, numeric, atol=1e-6)


def test_collision_hinge_is_continuous_at_both_knots():
    epsilon = 0.03
    values, slopes = objective.collision_hinge(np.array([-1e-9, 0.0, epsilon, epsilon + 1e-9]), epsilon)

    assert values[0] == pytest.approx(values[1]) == pytest.approx(0.5 * epsilon)
    assert values[2] == pytest.approx(0.0) and values[3] == 0.0
    assert slopes[0] == slopes[1] == -1.0


def test_collision_gradient(robot, plane_sdf):
    rng = np.random.default_rng(2)
    touched = 0

    for _ in range(CASES):
        trajectory = random_trajectory(rng)
        value, gradient = objective.cost_collision(robot, plane_sdf, trajectory, 0.03)
        numeric = central_difference(lambda x: objective.cost_collision(robot, plane_sdf, x, 0.03)[0], trajectory)
        touched += value > 0

        assert relative_error(gradient, numeric) < 1e-3

    assert touched > CASES // 2


def test_collision_free_trajectory_costs_nothing(robot, sdf):
    trajectory = np.tile([0.8, 0.8, 0.0, 0.0, 0.0, 0.0], (4, 1))
    value, gradient = objective.cost_collision(robot, sdf, trajectory, 0.03)

    assert value == 0.0
    assert np.all(gradient == 0)


def test_chamfer_gradients():
    rng = np.random.default_rng(3)

    for _ in range(CASES):
        p, q = rng.normal(size=(7, 2)), rng.normal(size=(5, 2))
        value, grad_p, grad_q = objective.chamfer(p, q)

        assert relative_error(grad_p, central_difference(lambda x: objective.chamfer(x, q)[0], p)) < 1e-3
        assert relative_error(grad_q, central_difference(lambda x: objective.chamfer(p, x)[0], q)) < 1e-3


def test_chamfer_of_identical_clouds_is_zero():
    p = np.random.default_rng(4).normal(size=(6, 2))
    assert objective.chamfer(p, p)[0] == pytest.approx(0.0)


def test_goal_energy_is_zero_at_the_goal(robot):
    q = np.array([1.0, 1.0, 0.3, 0.4, -0.2, 0.6])
    goal = kinematics.fk_end_effector(robot, q)
    trajectory = np.tile(q, (3, 1))

    value, _ = objective.energy_goal_reach(robot, trajectory, goal.transform(robot.gripper_local))
    assert value == pytest.approx(0.0, abs=1e-12)


def test_goal_energy_gradient_touches_only_the_last_row(robot):
    rng = np.random.default_rng(5)
    goal_points = rng.normal(size=(8, 2)) + 1.5

    for _ in range(CASES):
        trajectory = random_trajectory(rng, horizon=3)
        value, gradient = objective.energy_goal_reach(robot, trajectory, goal_points)
        numeric = central_difference(lambda x: objective.energy_goal_reach(robot, x, goal_points)[0], trajectory)

        assert np.all(gradient[:-1] == 0)
        assert relative_error(gradient, numeric) < 1e-3


def test_place_energy_gradient(robot):
    rng = np.random.default_rng(6)
    offset = robot_types.Pose2(position=(0.11, 0.0), heading=0.0)
    footprint = objective.object_grid((0.05, 0.1))
    target = robot_types.Pose2(position=(2.0, 1.5), heading=0.4).transform(footprint)

    for _ in range(CASES):
        trajectory = random_trajectory(rng, horizon=3)
        _, gradient = objective.energy_place(robot, trajectory, footprint, target, offset)
        numeric = central_difference(
            lambda x: objective.energy_place(robot, x, footprint, target, offset)[0], trajectory
        )
        assert relative_error(gradient, numeric) < 1e-3


def test_grasp_surrogate_gradient_and_bounds(robot):
    rng = np.random.default_rng(7)
    candidates = [
        robot_types.Pose2(position=tuple(rng.uniform(0, 3, size=2)), heading=float(rng.uniform(-3, 3)))
        for _ in range(4)
    ]

    for _ in range(CASES):
        trajectory = random_trajectory(rng, horizon=3)
        value, gradient = objective.energy_grasp_surrogate(robot, trajectory, candidates, 20.0, 0.1)
        numeric = central_difference(
            lambda x: objective.energy_grasp_surrogate(robot, x, candidates, 20.0, 0.1)[0], trajectory
        )
        pose = kinematics.end_effector_poses(robot, trajectory[-1])
        hard = min(
            np.sum((pose[:2] - c.array[:2]) ** 2) + 0.1 * objective.wrap_angle(pose[2] - c.heading) ** 2
            for c in candidates
        )

        assert max(hard - np.log(len(candidates)) / 20.0, 0.0) - 1e-12 <= value <= hard + 1e-12

        if value > 1e-3:
            assert relative_error(gradient, numeric) < 1e-3


def test_grasp_surrogate_is_clamped_at_zero_on_a_candidate(robot):
    trajectory = np.zeros((3, robot.dof))
    pose = kinematics.end_effector_poses(robot, trajectory[-1])
    candidates = [robot_types.Pose2(position=(float(pose[0]), float(pose[1])), heading=float(pose[2]))] * 4

    value, gradient = objective.energy_grasp_surrogate(robot, trajectory, candidates, 20.0, 0.1)

    assert value == 0.0
    assert np.all(gradient == 0.0)


def test_combined_objective_matches_terms(robot, plane_sdf):
    rng = np.random.default_rng(8)
    energy = objective_types.TaskEnergy(kind='goal_reach', goal_points=[(2.0, 2.0), (2.1, 2.0)])
    weights = objective_types.CostWeights(lambda_collision=2.0, lambda_smoothness=0.5, lambda_limit=1.5)

    def total(x):
        return objective.evaluate_objective(robot, plane_sdf, x, energy, weights).total

    for _ in range(CASES):
        trajectory = random_trajectory(rng)
        report = objective.evaluate_objective(robot, plane_sdf, trajectory, energy, weights)
        expected = -sum(weights.scale_of(term) * report.terms[term] for term in objective_types.TERM_NAMES)

        assert report.total == pytest.approx(expected)
        assert relative_error(report.gradient_unclipped, central_difference(total, trajectory)) < 1e-3
        assert np.all(np.abs(report.gradient) <= objective.GRADIENT_LIMIT)


def test_zero_weights_give_zero_objective(robot, sdf):
    trajectory = random_trajectory(np.random.default_rng(9))
    energy = objective_types.TaskEnergy(kind='goal_reach', goal_points=[(2.0, 2.0)])
    report = objective.evaluate_objective(robot, sdf, trajectory, energy, objective_types.CostWeights.zero())

    assert report.total == 0.0
    assert np.all(report.gradient == 0)


def test_non_finite_energy_names_the_term(robot, sdf):
    energy = objective_types.TaskEnergy(kind='goal_reach', goal_points=[(float('nan'), 0.0)])

    with pytest.raises(objective.ObjectiveError) as raised:
        objective.evaluate_objective(robot, sdf, np.zeros((4, robot.dof)) + 1.0, energy, objective_types.CostWeights())

    assert raised.value.term == 'e'


def test_task_energy_kinds(robot, goal_task):
    assert objective.task_energy(robot, goal_task).kind == 'goal_reach'
    assert len(objective.task_energy(robot, goal_task).goal_points) == len(robot.gripper_template)
