import numpy as np
import pytest

from trajdiff import kinematics

from .conftest import central_jacobian


def random_configs(count: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.concatenate([
        rng.uniform(-2, 2, size=(count, 2)),
        rng.uniform(-np.pi, np.pi, size=(count, 1)),
        rng.uniform(-2.5, 2.5, size=(count, 3))
    ], axis=1)


def test_zero_config_base_points_on_circle(robot):
    points = kinematics.fk_surface_points(robot, np.zeros(robot.dof))
    base = points[robot.surface_bodies == 0]

    assert np.allclose(np.hypot(base[:, 0], base[:, 1]), robot.base_radius)


def test_zero_config_end_effector_at_full_reach(robot):
    pose = kinematics.fk_end_effector(robot, np.zeros(robot.dof))

    assert pose.position == pytest.approx((sum(robot.link_lengths), 0.0))
    assert pose.heading == pytest.approx(0.0)


def test_translation_shifts_every_point(robot):
    q = np.zeros(robot.dof)
    shifted = q.copy()
    shifted[:2] = (1.0, 2.0)

    offset = kinematics.fk_surface_points(robot, shifted) - kinematics.fk_surface_points(robot, q)
    assert np.allclose(offset, (1.0, 2.0))
    assert np.allclose(kinematics.fk_gripper_points(robot, shifted) - kinematics.fk_gripper_points(robot, q), (1.0, 2.0))


def test_wrong_length_raises(robot):
    with pytest.raises(kinematics.DimensionError):
        kinematics.fk_surface_points(robot, np.zeros(robot.dof + 1))


def test_end_effector_jacobian_matches_finite_differences(robot):
    for q in random_configs(100):
        numeric = central_jacobian(lambda x: kinematics.end_effector_poses(robot, x), q)
        assert np.allclose(kinematics.end_effector_jacobian(robot, q), numeric, atol=1e-6)


def test_surface_jacobians_match_finite_differences(robot):
    for q in random_configs(100, seed=1):
        numeric = central_jacobian(lambda x: kinematics.fk_surface_points(robot, x), q)
        assert np.allclose(kinematics.surface_jacobians(robot, q), numeric, atol=1e-6)


def test_gripper_jacobians_match_finite_differences(robot):
    for q in random_configs(100, seed=2):
        numeric = central_jacobian(lambda x: kinematics.fk_gripper_points(robot, x), q)
        assert np.allclose(kinematics.jacobian_points(robot, q).gripper, numeric, atol=1e-6)


def test_batched_points_match_single_configs(robot):
    configs = random_configs(5, seed=3)
    batched = kinematics.fk_surface_points(robot, configs)

    for q, points in zip(configs, batched):
        assert np.allclose(kinematics.fk_surface_points(robot, q), points)


def test_joint_violation_amount(robot):
    q = np.zeros(robot.dof)
    q[3] = robot.upper[3] + 0.5
    q[0] = 1e6

    amount = kinematics.joint_violation_amount(robot, q)
    assert amount[3] == pytest.approx(0.5)
    assert amount[0] == 0.0


def test_start_frame_round_trip_and_row_zero(robot):
    trajectory = random_configs(6, seed=4)
    start = trajectory[0]
    local = kinematics.to_start_frame(trajectory, start)

    assert np.allclose(local[0, :3], 0.0)
    assert np.allclose(local[:, 3:], trajectory[:, 3:])
    assert np.allclose(kinematics.from_start_frame(local, start), trajectory)


def test_start_frame_gradient_is_chain_rule(robot):
    rng = np.random.default_rng(5)
    start = random_configs(1, seed=6)[0]
    world_gradient = rng.normal(size=(4, robot.dof))
    local = rng.normal(size=(4, robot.dof))

    # d/dlocal of <world_gradient, from_start_frame(local)>
    numeric = np.zeros_like(local)
    for index in np.ndindex(local.shape):
        step = np.zeros_like(local)
        step[index] = 1e-6
        numeric[index] = (
            np.sum(world_gradient * kinematics.from_start_frame(local + step, start))
            - np.sum(world_gradient * kinematics.from_start_frame(local - step, start))
        ) / 2e-6

    assert np.allclose(kinematics.gradient_to_start_frame(world_gradient, start), numeric, atol=1e-6)


def homogeneous(angle: float, x: float = 0.0, y: float = 0.0) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, x], [s, c, y], [0.0, 0.0, 1.0]])


def test_end_effector_matches_transform_product(robot):
    for q in random_configs(50, seed=4):
        transform = homogeneous(q[2], q[0], q[1])

        for angle, length in zip(q[3:], robot.link_lengths):
            transform = transform @ homogeneous(angle) @ homogeneous(0.0, length)

        pose = kinematics.end_effector_poses(robot, q)
        assert np.allclose(pose[:2], transform[:2, 2], atol=1e-12)
        assert np.allclose([np.cos(pose[2]), np.sin(pose[2])], transform[:2, 0], atol=1e-12)


def test_yaw_rotates_the_body_about_the_base(robot):
    for q in random_configs(20, seed=5):
        turned = q.copy()
        turned[2] += 0.7
        rotation = homogeneous(0.7)[:2, :2]

        before = kinematics.fk_surface_points(robot, q) - q[:2]
        after = kinematics.fk_surface_points(robot, turned) - q[:2]
        assert np.allclose(after, before @ rotation.T, atol=1e-12)


def test_rigid_world_rotation_is_equivariant(robot):
    rotation = homogeneous(-1.1)[:2, :2]

    for q in random_configs(20, seed=6):
        moved = q.copy()
        moved[:2] = rotation @ q[:2]
        moved[2] -= 1.1

        assert np.allclose(
            kinematics.fk_surface_points(robot, moved), kinematics.fk_surface_points(robot, q) @ rotation.T, atol=1e-12
        )
        assert np.allclose(
            kinematics.fk_gripper_points(robot, moved), kinematics.fk_gripper_points(robot, q) @ rotation.T, atol=1e-12
        )
