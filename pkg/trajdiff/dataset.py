import concurrent.futures
import functools
import logging
import pathlib

import numpy as np

from . import denoiser as denoiser_module
from . import expert, files, kinematics, scene, scene_generator
from .module_types import dataset_types, expert_types, robot_types, scene_types

TEST_EVERY = 10


class SceneOutcome(scene_types.Scene):
    seed: int
    records: list[dataset_types.DatasetRecord] = []
    discarded: list[str] = []


class DatasetBuilder:
    """Generates scenes, solves their tasks with the expert and writes the dataset directory."""

    def __init__(
            self,
            model: robot_types.RobotModel,
            generator_spec: scene_types.SceneGeneratorSpec,
            expert_config: expert_types.ExpertConfig,
            out_dir: pathlib.Path,
            threads: int = 1
    ):
        self.__model = model
        self.__generator = scene_generator.SceneGenerator(model, generator_spec)
        self.__expert_config = expert_config
        self.__out_dir = pathlib.Path(out_dir)
        self.__threads = threads
        self.__logger = logging.getLogger('trajdiff.DatasetBuilder')

    def __tasks(self, generated: scene_types.Scene, seed: int, count: int) -> list[scene_types.TaskSpec | None]:
        tasks = [generated.task]

        for index in range(1, count):
            try:
                tasks.append(self.__generator.resample_task(generated.grid, seed * 1000 + index))

            except scene_generator.GenerationFailure as e:
                self.__logger.warning(f'Scene {seed} task {index} discarded - {e}')
                tasks.append(None)

        return tasks

    def __solve_scene(self, seed: int, tasks_per_scene: int) -> SceneOutcome | None:
        try:
            generated = self.__generator.generate(seed)

        except scene_generator.GenerationFailure as e:
            self.__logger.warning(f'Scene {seed} discarded - {e}')
            return None

        solver = expert.ExpertSolver(self.__model, scene.build_sdf(generated.grid), self.__expert_config)
        outcome = SceneOutcome(grid=generated.grid, task=generated.task, obstacles=generated.obstacles, seed=seed)

        for index, task in enumerate(self.__tasks(generated, seed, tasks_per_scene)):
            task_id = f'{seed:04d}-{index}'

            if task is None:
                outcome.discarded.append(task_id)
                continue

            try:
                trajectory = solver.solve(task, seed * 1000 + index)

            except (expert.UnreachableGoalError, expert.PlanningFailure) as e:
                self.__logger.warning(f'Task {task_id} discarded - {e}')
                outcome.discarded.append(task_id)
                continue

            outcome.records.append(dataset_types.DatasetRecord(
                task_id=task_id,
                scene_file=files.dataset_file.scene_name(seed),
                scene_seed=seed,
                task_index=index,
                task_type=task.task_type,
                q0=task.start,
                trajectory=trajectory.tolist(),
                goal=task.model_dump(mode='json', exclude_none=True, exclude={'start'})
            ))
            self.__logger.info(f'Task {task_id} solved')

        return outcome

    @staticmethod
    def assign_splits(records: list[dataset_types.DatasetRecord], unseen_seeds: set[int]) -> None:
        seen = 0

        for record in records:
            if record.scene_seed in unseen_seeds:
                record.split = 'unseen'
                continue

            record.split = 'test' if seen % TEST_EVERY == TEST_EVERY - 1 else 'train'
            seen += 1

    def build(self, seeds: list[int], tasks_per_scene: int, holdout_scenes: int = 0) -> dataset_types.Manifest:
        solve = functools.partial(self.__solve_scene, tasks_per_scene=tasks_per_scene)

        with concurrent.futures.ThreadPoolExecutor(max_workers=self.__threads) as executor:
            outcomes = list(executor.map(solve, seeds))

        records, discarded = [], []

        for seed, outcome in zip(seeds, outcomes):
            if outcome is None:
                discarded.extend(f'{seed:04d}-{index}' for index in range(tasks_per_scene))
                continue

            files.scene_file.write(self.__out_dir / files.dataset_file.scene_name(seed), outcome)
            records.extend(outcome.records)
            discarded.extend(outcome.discarded)

        self.assign_splits(records, set(seeds[len(seeds) - holdout_scenes:]) if holdout_scenes else set())
        files.dataset_file.write_records(self.__out_dir / files.dataset_file.DATASET_NAME, records)

        manifest = dataset_types.Manifest(
            seeds=list(seeds),
            tasks_per_scene=tasks_per_scene,
            task_type=self.__generator.spec.task_type,
            solved=len(records),
            discarded=len(discarded),
            split=dataset_types.SplitCounts(**{
                split: sum(record.split == split for record in records) for split in ('train', 'test', 'unseen')
            }),
            discarded_tasks=discarded
        )
        files.dataset_file.write_manifest(self.__out_dir / files.dataset_file.MANIFEST_NAME, manifest)
        self.__logger.info(f'Dataset written: {manifest.solved} solved, {manifest.discarded} discarded')

        return manifest


def generate_dataset(
        model: robot_types.RobotModel,
        seeds: list[int],
        tasks_per_scene: int,
        generator_spec: scene_types.SceneGeneratorSpec,
        expert_config: expert_types.ExpertConfig,
        out_dir: pathlib.Path,
        holdout_scenes: int = 0,
        threads: int = 1
) -> dataset_types.Manifest:
    builder = DatasetBuilder(model, generator_spec, expert_config, out_dir, threads)
    return builder.build(seeds, tasks_per_scene, holdout_scenes)


class SceneCache:
    """Loads each scene file once and keeps its SDF."""

    def __init__(self, dataset_path: pathlib.Path):
        self.__dataset_path = pathlib.Path(dataset_path)
        self.__scenes: dict[str, tuple[scene_types.Scene, scene_types.SceneSdf]] = {}

    def get(self, record: dataset_types.DatasetRecord) -> tuple[scene_types.Scene, scene_types.SceneSdf]:
        if record.scene_file not in self.__scenes:
            loaded = files.scene_file.read(files.dataset_file.resolve_scene(self.__dataset_path, record))
            self.__scenes[record.scene_file] = loaded, scene.build_sdf(loaded.grid)

        return self.__scenes[record.scene_file]


def select(
        records: list[dataset_types.DatasetRecord],
        split: dataset_types.Split | None
) -> list[dataset_types.DatasetRecord]:
    return [record for record in records if split is None or record.split == split]


def load_examples(
        dataset_path: pathlib.Path,
        model: robot_types.RobotModel,
        point_scale: float,
        split: dataset_types.Split | None = 'train'
) -> list[dataset_types.TrainingExample]:
    records = select(files.dataset_file.read_records(dataset_path), split)
    cache = SceneCache(dataset_path)
    examples = []

    for record in records:
        _, sdf = cache.get(record)
        task = record.task()
        points = scene.sample_scene_points(sdf, task, record.point_seed, model)
        examples.append(dataset_types.TrainingExample(
            trajectory=kinematics.to_start_frame(record.array, np.asarray(record.q0)),
            features=denoiser_module.point_features(points, point_scale)
        ))

    return examples
