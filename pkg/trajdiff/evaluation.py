"""
Geometric success criteria and trajectory quality metrics.

Grasp and place success are judged from final poses alone; there is no physics rollout.
"""
import numpy as np
import numpy.typing as npt

from . import kinematics, objective, scene
from .module_types import eval_types, robot_types, scene_types

PAD_FACTOR = 4
CUTOFF_HZ = 20.0
AMPLITUDE_THRESHOLD = 0.05
SMOOTHEST = -2.0


def sparc(
        speed_profile: npt.ArrayLike,
        sample_rate: float = 10.0,
        cutoff: float = CUTOFF_HZ,
        amplitude_threshold: float = AMPLITUDE_THRESHOLD
) -> eval_types.SparcResult:
    """
    Spectral arc length smoothness of a speed profile; smaller is smoother.

    The magnitude spectrum is normalized by its DC value and truncated at the last frequency whose
    magnitude reaches the amplitude threshold. The band is capped at min(cutoff, Nyquist) since only
    the one-sided spectrum is measured. With arc length L over the unit frequency span, the score is
    -(1 + 1/L): a single monotone drop gives -2 and added jitter raises it towards -1.
    """
    profile = np.asarray(speed_profile, dtype=np.float64).ravel()

    if len(profile) < 4:
        raise ValueError('SPARC needs at least 4 samples')

    if not np.any(profile):
        return eval_types.SparcResult(value=0.0, degenerate=True)

    nfft = PAD_FACTOR * 2 ** int(np.ceil(np.log2(len(profile))))
    frequencies = np.arange(nfft) * sample_rate / nfft
    magnitudes = np.abs(np.fft.fft(profile, nfft))
    magnitudes = magnitudes / magnitudes[0]

    band = frequencies <= min(cutoff, sample_rate / 2)
    frequencies, magnitudes = frequencies[band], magnitudes[band]
    last = np.nonzero(magnitudes >= amplitude_threshold)[0][-1]
    frequencies, magnitudes = frequencies[:last + 1], magnitudes[:last + 1]

    if last == 0:
        return eval_types.SparcResult(value=SMOOTHEST)

    arc = np.sqrt((np.diff(frequencies) / (frequencies[-1] - frequencies[0])) ** 2 + np.diff(magnitudes) ** 2)
    return eval_types.SparcResult(value=-(1.0 + 1.0 / float(arc.sum())))


def config_speeds(trajectory: npt.ArrayLike) -> npt.NDArray[np.float64]:
    return np.linalg.norm(np.diff(np.asarray(trajectory, dtype=np.float64), axis=0), axis=1)


def end_effector_speeds(model: robot_types.RobotModel, trajectory: npt.ArrayLike) -> npt.NDArray[np.float64]:
    positions = kinematics.end_effector_poses(model, trajectory)[:, :2]
    return np.linalg.norm(np.diff(positions, axis=0), axis=1)


def collision_stats(
        model: robot_types.RobotModel,
        sdf: scene_types.SceneSdf,
        trajectory: npt.ArrayLike
) -> eval_types.Collision:
    points = kinematics.fk_surface_points(model, trajectory)
    distances, _ = scene.query_sdf_batch(sdf, points.reshape(-1, 2))
    deepest = float(distances.min())

    return eval_types.Collision(any=deepest < 0, max_depth=max(-deepest, 0.0))


def box_overlap(first: npt.ArrayLike, second: npt.ArrayLike) -> float:
    """Area of the intersection of the two point sets' bounding boxes over the second box's area."""
    first, second = np.asarray(first), np.asarray(second)
    low = np.maximum(first.min(axis=0), second.min(axis=0))
    high = np.minimum(first.max(axis=0), second.max(axis=0))
    intersection = float(np.prod(np.maximum(high - low, 0.0)))
    area = float(np.prod(second.max(axis=0) - second.min(axis=0)))

    return intersection / area if area > 0 else 0.0


def _pose_error(pose: npt.NDArray[np.float64], target: robot_types.Pose2) -> tuple[float, float]:
    return (
        float(np.hypot(*(pose[:2] - np.asarray(target.position)))),
        float(abs(objective.wrap_angle(pose[2] - target.heading)))
    )


def task_criterion(
        model: robot_types.RobotModel,
        final: npt.NDArray[np.float64],
        task: scene_types.TaskSpec,
        thresholds: eval_types.EvalThresholds
) -> tuple[bool, float, float, float | None]:
    """(criterion met, position error, heading error, overlap ratio) for the final configuration."""
    pose = kinematics.end_effector_poses(model, final)

    if task.task_type == 'goal_reach':
        pos_error, ang_error = _pose_error(pose, task.goal_pose)
        return pos_error <= thresholds.goal_pos and ang_error <= thresholds.goal_ang, pos_error, ang_error, None

    if task.task_type == 'place':
        half = np.asarray(task.object_half_extents)
        corners = half * np.array([(-1, -1), (1, -1), (1, 1), (-1, 1)])
        object_pose = robot_types.Pose2.from_array(pose).compose(task.grasp_offset)
        overlap = box_overlap(object_pose.transform(corners), task.target_area_polygon)
        pos_error, ang_error = _pose_error(object_pose.array, task.target_area_pose)
        return overlap >= thresholds.overlap_ratio, pos_error, ang_error, overlap

    errors = np.array([_pose_error(pose, candidate) for candidate in task.grasp_candidates])
    normalized = np.max(errors / np.array([thresholds.grasp_pos, thresholds.grasp_ang]), axis=1)
    best = int(np.argmin(normalized))
    return bool(normalized[best] <= 1.0), float(errors[best, 0]), float(errors[best, 1]), None


def score_trajectory(
        model: robot_types.RobotModel,
        sdf: scene_types.SceneSdf,
        trajectory: npt.ArrayLike,
        task: scene_types.TaskSpec,
        thresholds: eval_types.EvalThresholds | None = None,
        solve_time: float = 0.0
) -> eval_types.EvalReport:
    thresholds = thresholds or eval_types.EvalThresholds()
    trajectory = objective.as_trajectory(model, trajectory)

    met, pos_error, ang_error, overlap = task_criterion(model, trajectory[-1], task, thresholds)
    collision = collision_stats(model, sdf, trajectory)
    violation_rate = float(np.mean(kinematics.joint_violation_amount(model, trajectory) > 0))
    sparc_config = sparc(config_speeds(trajectory), thresholds.sample_rate).value
    sparc_ee = sparc(end_effector_speeds(model, trajectory), thresholds.sample_rate).value

    return eval_types.EvalReport(
        success=met and not collision.any and violation_rate == 0,
        pos_error=pos_error,
        ang_error=ang_error,
        collision=collision,
        joint_violation_rate=violation_rate,
        sparc_config=sparc_config,
        sparc_ee=sparc_ee,
        smooth=max(sparc_config, sparc_ee) < thresholds.sparc_smooth,
        solve_time=solve_time,
        overlap=overlap
    )
