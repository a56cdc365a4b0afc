import concurrent.futures
import logging
import pathlib
import statistics

import numpy as np

from . import dataset, diffusion, evaluation, files, sampler
from .module_types import base, dataset_types, eval_types, objective_types, planner_types, robot_types

LANGEVIN = 'langevin'


class BenchmarkSettings(base.Base):
    weights: objective_types.CostWeights = objective_types.CostWeights()
    grasp: objective_types.GraspSettings = objective_types.GraspSettings()
    guidance: planner_types.GuidanceConfig = planner_types.GuidanceConfig()
    langevin: planner_types.LangevinConfig = planner_types.LangevinConfig()
    langevin_steps: list[int] = []
    thresholds: eval_types.EvalThresholds = eval_types.EvalThresholds()
    timing: bool = True
    threads: int = 1


class Job(base.Base):
    record: dataset_types.DatasetRecord
    planner: str
    seed: int
    langevin_steps: int | None = None


def planner_labels(
        planners: list[planner_types.PlannerName],
        langevin_steps: list[int]
) -> list[tuple[str, planner_types.PlannerName, int | None]]:
    """(label, planner, Langevin budget); a budget sweep yields one labelled column per budget."""
    labels = []

    for name in planners:
        if name == LANGEVIN and len(langevin_steps) > 1:
            labels.extend((f'{LANGEVIN}-{steps}', name, steps) for steps in langevin_steps)

        elif name == LANGEVIN:
            labels.append((name, name, langevin_steps[0] if langevin_steps else None))

        else:
            labels.append((name, name, None))

    return labels


class Benchmark:
    """Runs each planner on each task and seed, scoring every plan with the same thresholds."""

    def __init__(
            self,
            robot: robot_types.RobotModel,
            diffusion_model: diffusion.DiffusionModel,
            dataset_path: pathlib.Path,
            settings: BenchmarkSettings
    ):
        self.__robot = robot
        self.__model = diffusion_model
        self.__cache = dataset.SceneCache(dataset_path)
        self.__settings = settings
        self.__logger = logging.getLogger('trajdiff.Benchmark')

    def __plan(self, job: Job) -> planner_types.PlanResult:
        settings = self.__settings
        task = job.record.task()
        _, sdf = self.__cache.get(job.record)

        if job.planner == LANGEVIN or job.planner.startswith(f'{LANGEVIN}-'):
            frame = sampler.build_frame(
                self.__robot, sdf, task, self.__model.normalizer, settings.weights, settings.grasp,
                settings.guidance.gradient_limit
            )
            update = {'seed': job.seed} | ({'steps': job.langevin_steps} if job.langevin_steps else {})
            return sampler.langevin_plan(frame, self.__model.horizon, settings.langevin.model_copy(update=update))

        cfg = settings.guidance.model_copy(update={
            'weights': settings.weights,
            'seed': job.seed,
            'guidance_enabled': job.planner == 'guided'
        })
        return sampler.plan(self.__robot, sdf, self.__model, task, cfg, settings.grasp)

    def __scored(self, job: Job) -> eval_types.EvalReport:
        result = self.__plan(job)

        if not np.all(np.isfinite(result.trajectory)):
            raise ValueError('planner returned a non-finite trajectory')

        _, sdf = self.__cache.get(job.record)
        return evaluation.score_trajectory(
            self.__robot,
            sdf,
            result.trajectory,
            job.record.task(),
            self.__settings.thresholds,
            result.diagnostics.wall_time_s if self.__settings.timing else 0.0
        )

    def run_job(self, job: Job) -> eval_types.BenchmarkRow:
        task_id = job.record.task_id

        try:
            report = self.__scored(job)

        except Exception as e:
            self.__logger.error(f'{job.planner} failed on task {task_id} seed {job.seed} - {e}')
            return eval_types.BenchmarkRow(task_id=task_id, planner=job.planner, seed=job.seed, success=False)

        self.__logger.info(f'{job.planner} on task {task_id} seed {job.seed}: success={report.success}')

        return eval_types.BenchmarkRow.from_report(task_id, job.planner, job.seed, report)

    def run(
            self,
            records: list[dataset_types.DatasetRecord],
            planners: list[planner_types.PlannerName],
            seeds: list[int]
    ) -> list[eval_types.BenchmarkRow]:
        jobs = [
            Job(record=record, planner=label, seed=seed, langevin_steps=steps)
            for record in records
            for label, _, steps in planner_labels(planners, self.__settings.langevin_steps)
            for seed in seeds
        ]

        # Scenes load before the pool starts so workers only read the cache.
        for record in records:
            self.__cache.get(record)

        with concurrent.futures.ThreadPoolExecutor(max_workers=self.__settings.threads) as executor:
            return list(executor.map(self.run_job, jobs))


def _mean(values: list[float]) -> float | None:
    return float(np.mean(values)) if values else None


def _pct(flags: list[bool]) -> float | None:
    return 100.0 * float(np.mean(flags)) if flags else None


def aggregate(
        rows: list[eval_types.BenchmarkRow],
        thresholds: eval_types.EvalThresholds | None = None
) -> list[eval_types.AggregateRow]:
    """Per-planner summary in first-appearance order; failure rows count against success only."""
    thresholds = thresholds or eval_types.EvalThresholds()
    planners = list(dict.fromkeys(row.planner for row in rows))
    aggregates = []

    for planner in planners:
        group = [row for row in rows if row.planner == planner]
        scored = [row for row in group if row.scored]
        depths = [row.max_depth for row in scored]

        aggregates.append(eval_types.AggregateRow(
            planner=planner,
            tasks=len(group),
            success_pct=_pct([row.success for row in group]),
            collision_pct=_pct([row.collision_any for row in scored]),
            mean_depth=_mean(depths),
            median_depth=float(statistics.median(depths)) if depths else None,
            mean_sparc_config=_mean([row.sparc_config for row in scored]),
            mean_sparc_ee=_mean([row.sparc_ee for row in scored]),
            joint_violation_pct=_pct([row.joint_violation_rate > 0 for row in scored]),
            smooth_pct=_pct([max(row.sparc_config, row.sparc_ee) < thresholds.sparc_smooth for row in scored]),
            mean_solve_time_s=float(np.mean([row.solve_time_s for row in group]))
        ))

    return aggregates


def write_results(
        out_dir: pathlib.Path,
        rows: list[eval_types.BenchmarkRow],
        aggregates: list[eval_types.AggregateRow]
) -> tuple[pathlib.Path, pathlib.Path]:
    out_dir = pathlib.Path(out_dir)
    return (
        files.benchmark_file.write_rows(out_dir / files.benchmark_file.ROWS_NAME, rows),
        files.benchmark_file.write_aggregates(out_dir / files.benchmark_file.AGGREGATE_NAME, aggregates)
    )


def run_benchmark(
        robot: robot_types.RobotModel,
        checkpoint_path: pathlib.Path,
        dataset_path: pathlib.Path,
        planners: list[planner_types.PlannerName],
        seeds: list[int],
        settings: BenchmarkSettings,
        split: dataset_types.Split | None = 'test',
        task_limit: int | None = None
) -> tuple[list[eval_types.BenchmarkRow], list[eval_types.AggregateRow]]:
    diffusion_model = files.checkpoint.read(checkpoint_path)
    records = dataset.select(files.dataset_file.read_records(dataset_path), split)[:task_limit]

    if records and diffusion_model.dof != len(records[0].q0):
        raise sampler.DimensionMismatchError(
            f'Checkpoint has d={diffusion_model.dof} but the dataset has d={len(records[0].q0)}'
        )

    rows = Benchmark(robot, diffusion_model, dataset_path, settings).run(records, planners, seeds)
    return rows, aggregate(rows, settings.thresholds)


def rescore_records(
        robot: robot_types.RobotModel,
        dataset_path: pathlib.Path,
        records: list[dataset_types.DatasetRecord],
        thresholds: eval_types.EvalThresholds
) -> list[eval_types.BenchmarkRow]:
    """Scores stored expert trajectories as the 'expert' planner."""
    cache = dataset.SceneCache(dataset_path)
    rows = []

    for record in records:
        _, sdf = cache.get(record)
        report = evaluation.score_trajectory(robot, sdf, record.array, record.task(), thresholds)
        rows.append(eval_types.BenchmarkRow.from_report(record.task_id, 'expert', 0, report))

    return rows
