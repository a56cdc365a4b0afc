import numpy as np
import pytest

from trajdiff import evaluation, expert, kinematics, scene
from trajdiff.module_types import eval_types, robot_types, scene_types

from .conftest import room_grid


def bell(count: int = 50) -> np.ndarray:
    # Minimum-jerk speed profile.
    s = np.linspace(0, 1, count)
    return 30 * s ** 2 * (1 - s) ** 2


@pytest.fixture
def empty_sdf():
    return scene.build_sdf(room_grid())


@pytest.fixture
def free_line() -> np.ndarray:
    return expert.straight_line([1.2, 1.2, 0.0, 0.2, 0.1, 0.0], [2.5, 2.0, 0.8, -0.4, 0.5, 0.2], 20)


def test_sparc_is_scale_invariant():
    assert evaluation.sparc(bell()).value == pytest.approx(evaluation.sparc(7.5 * bell()).value)


def test_sparc_is_non_positive():
    assert evaluation.sparc(bell()).value <= 0
    assert evaluation.sparc(np.ones(20)).value <= 0


def test_minimum_jerk_bell_is_smooth():
    assert evaluation.sparc(bell()).value < eval_types.EvalThresholds().sparc_smooth


def test_jitter_raises_sparc():
    smooth = bell()
    jittery = smooth + 0.3 * smooth.max() * (-1) ** np.arange(len(smooth))

    assert evaluation.sparc(jittery).value > evaluation.sparc(smooth).value
    assert evaluation.sparc(jittery).value > eval_types.EvalThresholds().sparc_smooth


def test_sparc_band_stops_at_nyquist():
    assert evaluation.sparc(bell(), sample_rate=10.0, cutoff=20.0).value == evaluation.sparc(
        bell(), sample_rate=10.0, cutoff=5.0
    ).value


def test_sparc_of_a_still_profile_is_degenerate():
    result = evaluation.sparc(np.zeros(10))
    assert result.value == 0.0 and result.degenerate


def test_sparc_needs_four_samples():
    with pytest.raises(ValueError):
        evaluation.sparc([1.0, 2.0, 1.0])


def test_speed_profiles(robot, free_line):
    assert evaluation.config_speeds(free_line).shape == (19,)
    assert np.allclose(evaluation.config_speeds(free_line), np.linalg.norm(free_line[1] - free_line[0]))
    assert evaluation.end_effector_speeds(robot, free_line).shape == (19,)


def test_box_overlap():
    square = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], dtype=float)

    assert evaluation.box_overlap(square, square) == pytest.approx(1.0)
    assert evaluation.box_overlap(square + 5, square) == 0.0
    assert evaluation.box_overlap(square + (0.5, 0), square) == pytest.approx(0.5)


def test_goal_reached_in_free_space(robot, empty_sdf, free_line):
    task = scene_types.TaskSpec(
        start=free_line[0].tolist(),
        task_type='goal_reach',
        goal_pose=kinematics.fk_end_effector(robot, free_line[-1])
    )
    report = evaluation.score_trajectory(robot, empty_sdf, free_line, task, solve_time=1.5)

    assert report.success
    assert report.pos_error == pytest.approx(0.0, abs=1e-12)
    assert not report.collision.any and report.collision.max_depth == 0.0
    assert report.joint_violation_rate == 0.0
    assert report.solve_time == 1.5
    assert report.smooth == (max(report.sparc_config, report.sparc_ee) < -1.6)


def test_missed_goal_fails(robot, empty_sdf, free_line):
    goal = kinematics.fk_end_effector(robot, free_line[-1])
    shifted = robot_types.Pose2(position=(goal.position[0] + 0.1, goal.position[1]), heading=goal.heading)
    task = scene_types.TaskSpec(start=free_line[0].tolist(), task_type='goal_reach', goal_pose=shifted)
    report = evaluation.score_trajectory(robot, empty_sdf, free_line, task)

    assert not report.success
    assert report.pos_error == pytest.approx(0.1)


def test_collision_fails_the_task(robot, sdf):
    trajectory = expert.straight_line([1.0, 2.0, 0, 0, 0, 0], [3.0, 2.0, 0, 0, 0, 0], 10)
    task = scene_types.TaskSpec(
        start=trajectory[0].tolist(),
        task_type='goal_reach',
        goal_pose=kinematics.fk_end_effector(robot, trajectory[-1])
    )
    report = evaluation.score_trajectory(robot, sdf, trajectory, task)

    assert report.collision.any
    assert report.collision.max_depth > 0.2
    assert not report.success


def test_joint_violation_rate(robot, empty_sdf, free_line):
    trajectory = free_line.copy()
    trajectory[5:10, 4] = robot.upper[4] + 0.1
    task = scene_types.TaskSpec(
        start=trajectory[0].tolist(),
        task_type='goal_reach',
        goal_pose=kinematics.fk_end_effector(robot, trajectory[-1])
    )
    report = evaluation.score_trajectory(robot, empty_sdf, trajectory, task)

    assert report.joint_violation_rate == pytest.approx(5 / trajectory.size)
    assert not report.success


def test_place_criterion_uses_the_carried_object(robot):
    final = np.array([1.5, 1.5, 0.2, 0.3, -0.2, 0.4])
    offset = robot_types.Pose2(position=(0.11, 0.0), heading=0.0)
    half = (0.05, 0.1)
    object_pose = kinematics.fk_end_effector(robot, final).compose(offset)
    corners = object_pose.transform(np.array(half) * np.array([(-1, -1), (1, -1), (1, 1), (-1, 1)]))
    task = scene_types.TaskSpec(
        start=final.tolist(),
        task_type='place',
        target_area_polygon=[tuple(corner) for corner in corners],
        object_half_extents=half,
        grasp_offset=offset
    )

    met, pos_error, ang_error, overlap = evaluation.task_criterion(robot, final, task, eval_types.EvalThresholds())

    assert met
    assert overlap == pytest.approx(1.0)
    assert pos_error == pytest.approx(0.0, abs=1e-12) and ang_error == pytest.approx(0.0, abs=1e-12)


def test_grasp_criterion_picks_the_best_candidate(robot):
    final = np.array([1.5, 1.5, 0.2, 0.3, -0.2, 0.4])
    reached = kinematics.fk_end_effector(robot, final)
    far = robot_types.Pose2(position=(0.0, 0.0), heading=0.0)
    task = scene_types.TaskSpec(start=final.tolist(), task_type='grasp', grasp_candidates=[far, reached])

    met, pos_error, _, overlap = evaluation.task_criterion(robot, final, task, eval_types.EvalThresholds())

    assert met and overlap is None
    assert pos_error == pytest.approx(0.0, abs=1e-12)


def test_successful_report_cannot_collide():
    with pytest.raises(ValueError):
        eval_types.EvalReport(
            success=True,
            pos_error=0.0,
            ang_error=0.0,
            collision=eval_types.Collision(any=True, max_depth=0.1),
            joint_violation_rate=0.0,
            sparc_config=-1.8,
            sparc_ee=-1.8,
            smooth=True
        )
