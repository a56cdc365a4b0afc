import numpy as np
import pytest
import torch

from trajdiff import denoiser, diffusion, expert, files, scene
from trajdiff.module_types import dataset_types, diffusion_types, robot_types, scene_types
from trajdiff.resources import defaults


def central_difference(func, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Numerical gradient of a scalar function of an array."""
    x = np.asarray(x, dtype=np.float64)
    gradient = np.zeros_like(x)

    for index in np.ndindex(x.shape):
        step = np.zeros_like(x)
        step[index] = h
        gradient[index] = (func(x + step) - func(x - step)) / (2 * h)

    return gradient


def central_jacobian(func, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Numerical Jacobian with the input dimension last."""
    x = np.asarray(x, dtype=np.float64)
    columns = []

    for k in range(len(x)):
        step = np.zeros_like(x)
        step[k] = h
        columns.append((np.asarray(func(x + step)) - np.asarray(func(x - step))) / (2 * h))

    return np.stack(columns, axis=-1)


def relative_error(actual: np.ndarray, expected: np.ndarray) -> float:
    return float(np.linalg.norm(actual - expected) / max(np.linalg.norm(expected), 1e-8))


def room_grid(size: int = 80, resolution: float = 0.05, block: tuple[slice, slice] | None = None) -> scene_types.OccupancyGrid:
    cells = np.zeros((size, size), dtype=bool)
    cells[[0, -1], :] = True
    cells[:, [0, -1]] = True

    if block is not None:
        cells[block] = True

    return scene_types.OccupancyGrid(resolution=resolution, origin=(0.0, 0.0), width=size, height=size, cells=cells)


@pytest.fixture
def robot() -> robot_types.RobotModel:
    return defaults.default_robot()


@pytest.fixture
def grid() -> scene_types.OccupancyGrid:
    # 4 m room with a 0.5 m block centred at (2, 2).
    return room_grid(block=(slice(35, 45), slice(35, 45)))


@pytest.fixture
def sdf(grid) -> scene_types.SceneSdf:
    return scene.build_sdf(grid)


@pytest.fixture
def goal_task(robot) -> scene_types.TaskSpec:
    start = [0.8, 0.8, 0.3, 0.2, -0.4, 0.1]
    goal = robot_types.Pose2(position=(3.0, 1.0), heading=0.5)
    return scene_types.TaskSpec(start=start, task_type='goal_reach', goal_pose=goal)


@pytest.fixture
def tiny_arch() -> diffusion_types.DenoiserArch:
    return diffusion_types.DenoiserArch(
        point_widths=(8, 8),
        time_dim=8,
        token_dim=8,
        width=16,
        blocks=2,
        kernel_size=3,
        head_dim=8
    )


@pytest.fixture
def tiny_model(tiny_arch) -> diffusion.DiffusionModel:
    torch.manual_seed(0)
    horizon, dof = 8, 6

    return diffusion.DiffusionModel(
        denoiser=denoiser.Denoiser(dof, horizon, tiny_arch).eval(),
        normalizer=diffusion_types.Normalizer(minimum=-np.ones(dof), maximum=np.ones(dof)),
        schedule=diffusion.linear_schedule(5)
    )


@pytest.fixture
def dataset_dir(tmp_path, grid, goal_task, tiny_model):
    """Dataset of one test-split task with its scene, plus a checkpoint of the tiny model."""
    files.scene_file.write(tmp_path / files.dataset_file.scene_name(0), scene_types.Scene(grid=grid, task=goal_task))
    record = dataset_types.DatasetRecord(
        task_id='0000-0',
        scene_file=files.dataset_file.scene_name(0),
        scene_seed=0,
        task_type='goal_reach',
        q0=goal_task.start,
        trajectory=expert.straight_line(goal_task.start, [1.2, 1.0, 0.5, 0.2, -0.4, 0.1], 8).tolist(),
        goal=goal_task.model_dump(mode='json', exclude_none=True, exclude={'start'}),
        split='test'
    )
    files.dataset_file.write_records(tmp_path / files.dataset_file.DATASET_NAME, [record])
    files.checkpoint.write(tmp_path / 'model.ckpt', tiny_model)

    return tmp_path
