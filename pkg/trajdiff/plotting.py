"""
Static SVG figures: planner success bars, objective traces and trajectory overlays.

Figures are built with the object API so plotting never touches global pyplot state. SVG output carries no
date and a fixed hash salt, so identical input gives identical bytes.
"""
import pathlib

import matplotlib
import numpy as np
import numpy.typing as npt
from matplotlib import axes as mpl_axes
from matplotlib import figure as mpl_figure

from . import kinematics
from .files import artifacts, benchmark_file, trajectory_file
from .module_types import eval_types, robot_types, scene_types

matplotlib.rcParams['svg.hashsalt'] = 'trajdiff'
matplotlib.rcParams['svg.fonttype'] = 'none'

FIGURE_SIZE = (6.0, 4.0)
NO_DATA = 'no data'


def _figure() -> tuple[mpl_figure.Figure, mpl_axes.Axes]:
    fig = mpl_figure.Figure(figsize=FIGURE_SIZE, dpi=100)
    return fig, fig.add_subplot()


def _no_data(ax: mpl_axes.Axes) -> None:
    ax.text(0.5, 0.5, NO_DATA, ha='center', va='center', transform=ax.transAxes)


def save_svg(fig: mpl_figure.Figure, path: artifacts.PathLike) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format='svg', metadata={'Date': None})
    return path


def success_rates(path: artifacts.PathLike) -> list[tuple[str, float]]:
    """(planner, success %) from either a per-task benchmark CSV or an aggregate CSV."""
    columns, _ = artifacts.read_csv_table(path)

    if 'success_pct' in columns:
        return [(row.planner, row.success_pct) for row in benchmark_file.read_aggregates(path)]

    rows = benchmark_file.read_rows(path)
    planners = list(dict.fromkeys(row.planner for row in rows))

    return [
        (planner, 100.0 * float(np.mean([row.success for row in rows if row.planner == planner])))
        for planner in planners
    ]


def success_figure(rates: list[tuple[str, float]]) -> mpl_figure.Figure:
    fig, ax = _figure()
    ax.set_ylabel('Success rate (%)')
    ax.set_ylim(0, 100)

    if not rates:
        _no_data(ax)
        return fig

    names = [name for name, _ in rates]
    values = [value for _, value in rates]
    bars = ax.bar(names, values, color='tab:green')
    ax.bar_label(bars, fmt='%.1f')

    return fig


def phi_figure(rows: list[dict[str, str]]) -> mpl_figure.Figure:
    fig, ax = _figure()
    ax.set_xlabel('Denoising step')
    ax.set_ylabel('phi')

    if not rows:
        _no_data(ax)
        return fig

    steps = [int(row['step']) for row in rows]
    ax.plot(steps, [float(row['phi']) for row in rows], color='black', label='phi')

    for column in trajectory_file.DIAGNOSTIC_COLUMNS[2:]:
        ax.plot(steps, [-float(row[column]) for row in rows], linewidth=0.8, label=f'-{column}')

    ax.legend(loc='lower right', fontsize='small')
    return fig


def overlay_figure(
        model: robot_types.RobotModel,
        grid: scene_types.OccupancyGrid,
        trajectory: npt.ArrayLike | None,
        task: scene_types.TaskSpec | None = None
) -> mpl_figure.Figure:
    fig, ax = _figure()
    x_min, x_max, y_min, y_max = grid.extent
    ax.imshow(grid.cells, origin='lower', extent=grid.extent, cmap='Greys', interpolation='nearest')
    ax.set_xlim(x_min, x_max)
    ax.set_ylim(y_min, y_max)
    ax.set_aspect('equal')

    if trajectory is None or len(trajectory) == 0:
        _no_data(ax)
        return fig

    trajectory = np.asarray(trajectory, dtype=np.float64)
    end_effector = kinematics.end_effector_poses(model, trajectory)
    ax.plot(trajectory[:, 0], trajectory[:, 1], color='tab:blue', linewidth=1.0, label='base')
    ax.plot(end_effector[:, 0], end_effector[:, 1], color='tab:orange', linewidth=1.0, label='end effector')

    if task is not None and task.goal_pose is not None:
        ax.plot(*task.goal_pose.position, marker='*', markersize=10, color='tab:red', linestyle='', label='goal')

    ax.legend(loc='upper right', fontsize='small')
    return fig


def pixel_coordinates(fig: mpl_figure.Figure, points: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Display coordinates of data points on the figure's first axes."""
    fig.draw_without_rendering()
    return fig.axes[0].transData.transform(np.asarray(points, dtype=np.float64).reshape(-1, 2))


def plot_success(csv_path: artifacts.PathLike, out: artifacts.PathLike) -> pathlib.Path:
    return save_svg(success_figure(success_rates(csv_path)), out)


def plot_phi(csv_path: artifacts.PathLike, out: artifacts.PathLike) -> pathlib.Path:
    rows = artifacts.read_csv(csv_path, trajectory_file.DIAGNOSTIC_COLUMNS)

    try:
        fig = phi_figure(rows)

    except ValueError as e:
        raise artifacts.MalformedArtifactError(csv_path, str(e)) from e

    return save_svg(fig, out)


def plot_overlay(
        model: robot_types.RobotModel,
        scene: scene_types.Scene,
        trajectory: npt.ArrayLike | None,
        out: artifacts.PathLike
) -> pathlib.Path:
    return save_svg(overlay_figure(model, scene.grid, trajectory, scene.task), out)


def ablation_figure(aggregates: list[eval_types.AggregateRow]) -> mpl_figure.Figure:
    return success_figure([(row.planner, row.success_pct) for row in aggregates])
