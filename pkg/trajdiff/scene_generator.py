import logging

import numpy as np
import numpy.typing as npt
from scipy import ndimage

from . import kinematics, scene
from .module_types import robot_types, scene_types

ARM_SAMPLE_RANGE = 1.5
CONFIG_SAMPLES = 50
GRASP_CANDIDATES = 8
GRASP_STANDOFF = 0.06
OBJECT_HALF_EXTENTS = (0.05, 0.1)


class GenerationFailure(Exception):
    pass


class RejectedAttempt(Exception):
    pass


class SceneGenerator:
    """Procedural rooms with random obstacles and one task whose goal configuration is known to be feasible."""

    def __init__(self, model: robot_types.RobotModel, spec: scene_types.SceneGeneratorSpec):
        self.__model = model
        self.__spec = spec
        self.__logger = logging.getLogger('trajdiff.SceneGenerator')

    @property
    def spec(self) -> scene_types.SceneGeneratorSpec:
        return self.__spec

    def __empty_room(self) -> scene_types.OccupancyGrid:
        size = int(round(self.__spec.room_size / self.__spec.resolution))
        cells = np.zeros((size, size), dtype=bool)
        cells[[0, -1], :] = True
        cells[:, [0, -1]] = True

        return scene_types.OccupancyGrid(
            resolution=self.__spec.resolution,
            origin=(0.0, 0.0),
            width=size,
            height=size,
            cells=cells
        )

    def __sample_obstacles(self, rng: np.random.Generator) -> list[scene_types.Obstacle]:
        spec = self.__spec
        count = int(rng.integers(spec.min_obstacles, spec.max_obstacles + 1))
        obstacles = []

        for _ in range(count):
            center = rng.uniform(0, spec.room_size, size=2)
            center = (float(center[0]), float(center[1]))

            if rng.random() < 0.5:
                radius = float(rng.uniform(spec.min_obstacle_size, spec.max_obstacle_size))
                obstacles.append(scene_types.Obstacle(shape='circle', center=center, radius=radius))

            else:
                half = rng.uniform(spec.min_obstacle_size, spec.max_obstacle_size, size=2)
                obstacles.append(scene_types.Obstacle(
                    shape='rectangle',
                    center=center,
                    half_extents=(float(half[0]), float(half[1]))
                ))

        return obstacles

    def __rasterize(
            self,
            room: scene_types.OccupancyGrid,
            obstacles: list[scene_types.Obstacle],
            start_position: npt.NDArray[np.float64]
    ) -> scene_types.OccupancyGrid:
        rows, cols = np.indices(room.cells.shape)
        centers = room.cell_centers(rows, cols)
        cells = room.cells.copy()

        for obstacle in obstacles:
            cells |= obstacle.covers(centers)

        start_region = np.hypot(*(centers - start_position).transpose(2, 0, 1)) <= self.__spec.start_clearance
        cells &= ~start_region
        cells[[0, -1], :] = True
        cells[:, [0, -1]] = True

        return room.model_copy(update={'cells': cells})

    def __sample_config(
            self,
            rng: np.random.Generator,
            position: npt.NDArray[np.float64] | None = None
    ) -> npt.NDArray[np.float64]:
        if position is None:
            position = rng.uniform(self.__model.base_radius, self.__spec.room_size - self.__model.base_radius, size=2)

        yaw = rng.uniform(-np.pi, np.pi)
        arm = rng.uniform(-ARM_SAMPLE_RANGE, ARM_SAMPLE_RANGE, size=len(self.__model.link_lengths))

        return np.concatenate([position, [yaw], arm])

    def __is_clear(self, sdf: scene_types.SceneSdf, q: npt.NDArray[np.float64]) -> bool:
        points = np.concatenate([
            kinematics.fk_surface_points(self.__model, q),
            kinematics.fk_gripper_points(self.__model, q)
        ])
        distances, _ = scene.query_sdf_batch(sdf, points)

        return bool(distances.min() >= self.__spec.goal_clearance)

    def __clear_config(
            self,
            rng: np.random.Generator,
            sdf: scene_types.SceneSdf,
            position: npt.NDArray[np.float64] | None = None
    ) -> npt.NDArray[np.float64]:
        for _ in range(CONFIG_SAMPLES):
            q = self.__sample_config(rng, position)

            if self.__is_clear(sdf, q):
                return q

        raise RejectedAttempt('No collision-free configuration found')

    def __goal_config(
            self,
            rng: np.random.Generator,
            sdf: scene_types.SceneSdf,
            start: npt.NDArray[np.float64]
    ) -> npt.NDArray[np.float64]:
        for _ in range(CONFIG_SAMPLES):
            q = self.__sample_config(rng)

            if np.hypot(*(q[:2] - start[:2])) >= self.__spec.min_travel and self.__is_clear(sdf, q):
                return q

        raise RejectedAttempt('No collision-free goal configuration found')

    def __check_connected(
            self,
            sdf: scene_types.SceneSdf,
            start: npt.NDArray[np.float64],
            goal: npt.NDArray[np.float64]
    ) -> None:
        # Cells where the base disc fits, 4-connected.
        free = sdf.distances >= self.__model.base_radius
        labels, _ = ndimage.label(free)
        rows, cols = sdf.grid.cell_of(np.stack([start[:2], goal[:2]]))
        start_label, goal_label = labels[rows, cols]

        if start_label == 0 or start_label != goal_label:
            raise RejectedAttempt('Start and goal are not connected')

    def __task(
            self,
            rng: np.random.Generator,
            sdf: scene_types.SceneSdf,
            start: npt.NDArray[np.float64],
            goal: npt.NDArray[np.float64]
    ) -> scene_types.TaskSpec:
        goal_pose = kinematics.fk_end_effector(self.__model, goal)
        start_values = [float(v) for v in start]

        if self.__spec.task_type == 'goal_reach':
            return scene_types.TaskSpec(start=start_values, task_type='goal_reach', goal_pose=goal_pose)

        if self.__spec.task_type == 'place':
            half = OBJECT_HALF_EXTENTS
            grasp_offset = robot_types.Pose2(position=(GRASP_STANDOFF + half[0], 0.0), heading=0.0)
            corners = goal_pose.compose(grasp_offset).transform(
                [(-half[0], -half[1]), (half[0], -half[1]), (half[0], half[1]), (-half[0], half[1])]
            )
            distances, _ = scene.query_sdf_batch(sdf, corners)

            if distances.min() < 0:
                raise RejectedAttempt('Target area overlaps an obstacle')

            return scene_types.TaskSpec(
                start=start_values,
                task_type='place',
                goal_pose=goal_pose,
                target_area_polygon=[(float(x), float(y)) for x, y in corners],
                object_half_extents=half,
                grasp_offset=grasp_offset
            )

        return self.__grasp_task(rng, sdf, start_values, goal_pose)

    def __grasp_task(
            self,
            rng: np.random.Generator,
            sdf: scene_types.SceneSdf,
            start: list[float],
            goal_pose: robot_types.Pose2
    ) -> scene_types.TaskSpec:
        radius = float(rng.uniform(0.04, 0.08))
        center = goal_pose.transform([(GRASP_STANDOFF + radius, 0.0)])[0]

        if scene.query_sdf(sdf, center)[0] < radius:
            raise RejectedAttempt('Target object overlaps an obstacle')

        # The first candidate is the feasible goal pose; the rest ring the object.
        candidates = [goal_pose]
        approach = goal_pose.heading + np.pi

        for k in range(1, GRASP_CANDIDATES):
            angle = approach + 2 * np.pi * k / GRASP_CANDIDATES
            position = center + (GRASP_STANDOFF + radius) * np.array([np.cos(angle), np.sin(angle)])

            if scene.query_sdf(sdf, position)[0] >= self.__spec.goal_clearance:
                candidates.append(robot_types.Pose2(
                    position=(float(position[0]), float(position[1])),
                    heading=float(angle + np.pi)
                ))

        return scene_types.TaskSpec(
            start=start,
            task_type='grasp',
            goal_pose=goal_pose,
            grasp_candidates=candidates,
            target_object=scene_types.TargetObject(center=(float(center[0]), float(center[1])), radius=radius)
        )

    def __attempt(self, rng: np.random.Generator) -> scene_types.Scene:
        room = self.__empty_room()
        obstacles = self.__sample_obstacles(rng)
        start_position = rng.uniform(
            self.__spec.start_clearance,
            self.__spec.room_size - self.__spec.start_clearance,
            size=2
        )
        grid = self.__rasterize(room, obstacles, start_position)
        sdf = scene.build_sdf(grid)

        return scene_types.Scene(grid=grid, task=self.__sample_task(rng, sdf, start_position), obstacles=obstacles)

    def __sample_task(
            self,
            rng: np.random.Generator,
            sdf: scene_types.SceneSdf,
            start_position: npt.NDArray[np.float64] | None = None
    ) -> scene_types.TaskSpec:
        start = self.__clear_config(rng, sdf, start_position)
        goal = self.__goal_config(rng, sdf, start)
        self.__check_connected(sdf, start, goal)

        return self.__task(rng, sdf, start, goal)

    def generate(self, seed: int) -> scene_types.Scene:
        rng = np.random.default_rng(seed)

        for attempt in range(self.__spec.max_attempts):
            try:
                generated = self.__attempt(rng)

            except RejectedAttempt as e:
                self.__logger.debug(f'Seed {seed} attempt {attempt} rejected - {e}')
                continue

            self.__logger.info(f'Generated scene for seed {seed} after {attempt + 1} attempts')
            return generated

        raise GenerationFailure(f'No valid scene for seed {seed} after {self.__spec.max_attempts} attempts')

    def resample_task(self, grid: scene_types.OccupancyGrid, seed: int) -> scene_types.TaskSpec:
        """Another task in an existing room, start anywhere collision-free."""
        rng = np.random.default_rng(seed)
        sdf = scene.build_sdf(grid)

        for attempt in range(self.__spec.max_attempts):
            try:
                return self.__sample_task(rng, sdf)

            except RejectedAttempt as e:
                self.__logger.debug(f'Task seed {seed} attempt {attempt} rejected - {e}')

        raise GenerationFailure(f'No valid task for seed {seed} after {self.__spec.max_attempts} attempts')


def generate_scene(
        seed: int,
        spec: scene_types.SceneGeneratorSpec,
        model: robot_types.RobotModel
) -> scene_types.Scene:
    return SceneGenerator(model, spec).generate(seed)
