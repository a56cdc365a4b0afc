import numpy as np
import pytest

from trajdiff import scene
from trajdiff.module_types import scene_types

from .conftest import central_jacobian, room_grid


def test_sdf_sign_convention(sdf):
    # Inside the central block and in free space near the start corner.
    assert scene.query_sdf(sdf, (2.0, 2.0))[0] < 0
    assert scene.query_sdf(sdf, (1.0, 1.0))[0] > 0


def test_sdf_matches_distance_to_block_face(sdf):
    # Free cell centre 5 cells left of the block, on its middle row.
    row, col = 40, 29
    assert sdf.distances[row, col] == pytest.approx(6 * sdf.grid.resolution)


def test_empty_and_full_grids_use_sentinels():
    empty = room_grid(size=10)
    empty = empty.model_copy(update={'cells': np.zeros((10, 10), dtype=bool)})
    full = empty.model_copy(update={'cells': np.ones((10, 10), dtype=bool)})

    assert np.all(scene.build_sdf(empty).distances == scene.SENTINEL_DISTANCE)
    assert np.all(scene.build_sdf(full).distances == -scene.SENTINEL_DISTANCE)


def test_query_is_exact_at_cell_centres(sdf):
    centres = sdf.grid.cell_centers(np.array([10, 20, 41]), np.array([12, 30, 38]))
    values, _ = scene.query_sdf_batch(sdf, centres)

    assert np.allclose(values, sdf.distances[[10, 20, 41], [12, 30, 38]])


def test_query_gradient_matches_finite_differences(sdf):
    rng = np.random.default_rng(0)
    points = rng.uniform(0.2, 3.8, size=(200, 2))
    resolution = sdf.grid.resolution
    # Stay away from patch seams where the bilinear surface has a kink.
    fraction = (points / resolution - 0.5) % 1.0
    points = points[np.all((fraction > 0.01) & (fraction < 0.99), axis=1)][:120]

    for point in points:
        numeric = central_jacobian(lambda p: scene.query_sdf(sdf, p)[0], point, h=1e-6)
        assert np.allclose(scene.query_sdf(sdf, point)[1], numeric, atol=1e-5)


def test_query_outside_grid_clamps_with_zero_gradient(sdf):
    value, gradient = scene.query_sdf(sdf, (-5.0, -5.0))

    assert value == pytest.approx(sdf.distances[0, 0])
    assert np.all(gradient == 0)


def test_boundary_points_have_zero_distance(sdf):
    points = scene.boundary_points(sdf.grid)
    values, _ = scene.query_sdf_batch(sdf, points)

    assert len(points) > 0
    assert np.allclose(values, 0.0, atol=1e-9)


def test_sample_scene_points_is_deterministic(robot, sdf, goal_task):
    first = scene.sample_scene_points(sdf, goal_task, 7, robot)
    second = scene.sample_scene_points(sdf, goal_task, 7, robot)

    assert np.array_equal(first.points, second.points)
    assert len(first.points) == scene.SCENE_POINT_COUNT + scene.TASK_POINT_COUNT
    assert len(first.of_class('goal')) == scene.TASK_POINT_COUNT


def test_scene_points_are_in_the_start_frame(robot, sdf, goal_task):
    points = scene.sample_scene_points(sdf, goal_task, 0, robot)
    world, _ = scene.task_world_points(robot, goal_task, np.random.default_rng(0))

    assert np.allclose(points.of_class('goal'), scene.to_base_frame(world, goal_task.start))


def test_empty_scene_pads_with_far_point(robot, goal_task):
    grid = room_grid(size=20)
    grid = grid.model_copy(update={'cells': np.zeros((20, 20), dtype=bool)})
    points = scene.sample_scene_points(scene.build_sdf(grid), goal_task, 0, robot)

    assert points.padded
    assert np.allclose(points.of_class('scene'), scene.FAR_POINT)


def test_occupancy_grid_rejects_bad_shapes():
    with pytest.raises(ValueError):
        scene_types.OccupancyGrid(resolution=0.05, origin=(0, 0), width=4, height=4, cells=np.zeros((3, 4), dtype=bool))


@pytest.fixture
def disc_sdf() -> scene_types.SceneSdf:
    # Disc of radius 0.8 m centred in a wall-free 4 m grid.
    grid = room_grid()
    rows, cols = np.indices(grid.cells.shape)
    centres = grid.cell_centers(rows, cols)
    cells = np.hypot(centres[..., 0] - 2.0, centres[..., 1] - 2.0) <= 0.8

    return scene.build_sdf(grid.model_copy(update={'cells': cells}))


def test_disc_sdf_matches_the_analytic_distance(disc_sdf):
    points = np.random.default_rng(1).uniform(0.3, 3.7, size=(300, 2))
    values, _ = scene.query_sdf_batch(disc_sdf, points)
    analytic = np.hypot(points[:, 0] - 2.0, points[:, 1] - 2.0) - 0.8

    assert np.max(np.abs(values - analytic)) < 2.5 * disc_sdf.grid.resolution
    assert np.all(np.sign(values[np.abs(analytic) > 0.15]) == np.sign(analytic[np.abs(analytic) > 0.15]))


def test_disc_sdf_gradient_points_radially_outward(disc_sdf):
    rng = np.random.default_rng(2)
    angles = rng.uniform(-np.pi, np.pi, 100)
    radii = rng.uniform(1.2, 1.8, 100)
    directions = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    points = 2.0 + radii[:, None] * directions

    _, gradients = scene.query_sdf_batch(disc_sdf, points)
    norms = np.linalg.norm(gradients, axis=1)

    assert np.all(np.abs(norms - 1.0) < 0.1)
    assert np.all(np.sum(gradients * directions, axis=1) / norms > 0.95)
