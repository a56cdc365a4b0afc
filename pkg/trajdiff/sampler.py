"""
Guided reverse diffusion and the inverse Langevin baseline.

Both samplers work on normalized trajectories expressed in the robot's start frame. Objective gradients are
computed on the world-frame trajectory and pulled back through the frame change and the normalizer.
"""
import functools
import logging
import time
from typing import Callable

import numpy as np
import numpy.typing as npt

from . import denoiser as denoiser_module
from . import diffusion, kinematics, objective, scene
from .module_types import diffusion_types, objective_types, planner_types, robot_types, scene_types

GradientFn = Callable[[npt.NDArray[np.float64]], npt.NDArray[np.float64]]


class DimensionMismatchError(ValueError):
    pass


class GuidanceError(Exception):

    def __init__(self, term: str):
        self.term = term
        super().__init__(f'Guidance gradient is not finite (term {term})')


def record_wall_time(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs) -> planner_types.PlanResult:
        started = time.perf_counter()
        result = func(*args, **kwargs)
        result.diagnostics.wall_time_s = time.perf_counter() - started
        return result

    return wrapper


class GuidanceFrame:
    """Maps normalized start-frame trajectories to the world and objective gradients back."""

    def __init__(
            self,
            objective_fn: objective.Objective,
            normalizer: diffusion_types.Normalizer,
            start: npt.ArrayLike
    ):
        self.objective = objective_fn
        self.normalizer = normalizer
        self.start = np.asarray(start, dtype=np.float64)

        if self.start.shape != normalizer.minimum.shape or len(self.start) != objective_fn.model.dof:
            raise DimensionMismatchError(
                f'Start configuration of length {len(self.start)} does not match a model with '
                f'd={len(normalizer.minimum)} and a robot with d={objective_fn.model.dof}'
            )

        self.start_row = normalizer.normalize(kinematics.to_start_frame(self.start, self.start))

    def to_world(self, trajectory: npt.ArrayLike) -> npt.NDArray[np.float64]:
        return kinematics.from_start_frame(self.normalizer.denormalize(trajectory), self.start)

    def evaluate(
            self,
            trajectory: npt.ArrayLike
    ) -> tuple[objective_types.ObjectiveReport, npt.NDArray[np.float64]]:
        """
        Objective report at the world trajectory and the guidance direction in normalized coordinates.

        The clipped world gradient is rotated into the start frame and divided per dimension by the
        normalizer scale.
        """
        try:
            report = self.objective(self.to_world(trajectory))

        except objective.ObjectiveError as e:
            raise GuidanceError(e.term) from e

        gradient = kinematics.gradient_to_start_frame(report.gradient, self.start) / self.normalizer.scale

        if not np.all(np.isfinite(gradient)):
            raise GuidanceError('phi')

        return report, gradient

    def gradient(self, trajectory: npt.ArrayLike) -> npt.NDArray[np.float64]:
        return self.evaluate(trajectory)[1]


class DiffusionPlanner:

    def __init__(
            self,
            diffusion_model: diffusion.DiffusionModel,
            frame: GuidanceFrame,
            features: npt.ArrayLike
    ):
        if diffusion_model.dof != len(frame.start):
            raise DimensionMismatchError(
                f'Checkpoint has d={diffusion_model.dof} but the task start has {len(frame.start)} entries'
            )

        self.__model = diffusion_model
        self.__frame = frame
        self.__features = np.asarray(features, dtype=np.float32)
        self.__logger = logging.getLogger('trajdiff.DiffusionPlanner')

    @property
    def frame(self) -> GuidanceFrame:
        return self.__frame

    def step(
            self,
            trajectory: npt.NDArray[np.float64],
            t: int,
            cfg: planner_types.GuidanceConfig,
            rng: np.random.Generator
    ) -> tuple[npt.NDArray[np.float64], objective_types.ObjectiveReport | None]:
        schedule = self.__model.schedule
        predicted = denoiser_module.predict_noise(self.__model.denoiser, trajectory, t, self.__features)
        mean = diffusion.posterior_mean(schedule, trajectory, t, predicted)
        variance = diffusion.posterior_variance(schedule, t)
        # Drawn before guidance so guided and unguided runs share noise.
        noise = rng.standard_normal(trajectory.shape)

        report = None
        shift = np.zeros_like(mean)

        if cfg.guidance_enabled:
            report, gradient = self.__frame.evaluate(mean)
            shift = variance * gradient

        sample = mean + shift + np.sqrt(variance) * noise
        sample[0] = self.__frame.start_row

        return sample, report

    def __diagnostic(self, step: int, t: int, trajectory: npt.NDArray[np.float64]) -> planner_types.StepDiagnostic:
        report, _ = self.__frame.evaluate(trajectory)
        return planner_types.StepDiagnostic(step=step, t=t, phi=report.total, **report.terms)

    @record_wall_time
    def plan(self, cfg: planner_types.GuidanceConfig) -> planner_types.PlanResult:
        rng = np.random.default_rng(cfg.seed)
        trajectory = rng.standard_normal((self.__model.horizon, self.__model.dof))
        trajectory[0] = self.__frame.start_row

        schedule_steps = list(range(self.__model.schedule.steps, 0, -1)) + [1] * cfg.extra_steps
        diagnostics = planner_types.PlanDiagnostics()

        for step, t in enumerate(schedule_steps):
            trajectory, _ = self.step(trajectory, t, cfg, rng)

            # Unguided sampling never touches the objective.
            if cfg.guidance_enabled:
                diagnostics.steps.append(self.__diagnostic(step, t, trajectory))

        world = self.__frame.to_world(trajectory)
        world[0] = self.__frame.start

        self.__logger.info(f'Planned {len(schedule_steps)} steps, guidance={cfg.guidance_enabled}')

        if diagnostics.steps:
            self.__logger.debug(f'Final phi={diagnostics.steps[-1].phi:.4f}')

        return planner_types.PlanResult(trajectory=world, diagnostics=diagnostics)


def scene_features(
        model: diffusion.DiffusionModel,
        robot: robot_types.RobotModel,
        sdf: scene_types.SceneSdf,
        task: scene_types.TaskSpec,
        seed: int
) -> npt.NDArray[np.float32]:
    points = scene.sample_scene_points(sdf, task, seed, robot)
    return denoiser_module.point_features(points, model.point_scale)


def build_frame(
        robot: robot_types.RobotModel,
        sdf: scene_types.SceneSdf,
        task: scene_types.TaskSpec,
        normalizer: diffusion_types.Normalizer,
        weights: objective_types.CostWeights,
        grasp: objective_types.GraspSettings | None = None,
        gradient_limit: float = objective.GRADIENT_LIMIT,
        energy: objective_types.TaskEnergy | None = None
) -> GuidanceFrame:
    if len(task.start) != robot.dof:
        raise DimensionMismatchError(f'Task start has {len(task.start)} entries, robot has d={robot.dof}')

    energy = energy or objective.task_energy(robot, task, grasp)
    objective_fn = objective.Objective(robot, sdf, energy, weights, gradient_limit)

    return GuidanceFrame(objective_fn, normalizer, task.start)


def guided_step(
        planner: DiffusionPlanner,
        trajectory: npt.ArrayLike,
        t: int,
        cfg: planner_types.GuidanceConfig,
        rng: np.random.Generator
) -> npt.NDArray[np.float64]:
    trajectory = np.asarray(trajectory, dtype=np.float64)
    return planner.step(trajectory, t, cfg, rng)[0]


def plan(
        robot: robot_types.RobotModel,
        sdf: scene_types.SceneSdf,
        model: diffusion.DiffusionModel,
        task: scene_types.TaskSpec,
        cfg: planner_types.GuidanceConfig,
        grasp: objective_types.GraspSettings | None = None
) -> planner_types.PlanResult:
    frame = build_frame(robot, sdf, task, model.normalizer, cfg.weights, grasp, cfg.gradient_limit, cfg.energy)
    features = scene_features(model, robot, sdf, task, cfg.seed)
    return DiffusionPlanner(model, frame, features).plan(cfg)


def langevin_iterate(
        initial: npt.ArrayLike,
        gradient_fn: GradientFn,
        alphas: npt.ArrayLike,
        rng: np.random.Generator,
        clamp_row: npt.ArrayLike
) -> npt.NDArray[np.float64]:
    """Ascends phi with tau <- tau + alpha^2 / 2 * grad phi + alpha * z, clamping row 0 after every update."""
    trajectory = np.array(initial, dtype=np.float64)
    trajectory[0] = clamp_row

    for alpha in np.asarray(alphas, dtype=np.float64):
        noise = rng.standard_normal(trajectory.shape)
        trajectory = trajectory + 0.5 * alpha ** 2 * gradient_fn(trajectory) + alpha * noise
        trajectory[0] = clamp_row

    return trajectory


@record_wall_time
def langevin_plan(
        frame: GuidanceFrame,
        horizon: int,
        cfg: planner_types.LangevinConfig
) -> planner_types.PlanResult:
    rng = np.random.default_rng(cfg.seed)
    initial = rng.standard_normal((horizon, len(frame.start)))
    trajectory = langevin_iterate(initial, frame.gradient, cfg.alphas, rng, frame.start_row)

    report, _ = frame.evaluate(trajectory)
    world = frame.to_world(trajectory)
    world[0] = frame.start

    return planner_types.PlanResult(
        trajectory=world,
        diagnostics=planner_types.PlanDiagnostics(steps=[planner_types.StepDiagnostic(
            step=cfg.steps - 1, t=0, phi=report.total, **report.terms
        )])
    )
