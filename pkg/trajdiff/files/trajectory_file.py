import pathlib

import numpy as np

from . import artifacts
from ..module_types import planner_types

DIAGNOSTIC_COLUMNS = ['step', 'phi', 'e', 'c_collision', 'c_smoothness', 'c_limit']


def write_trajectory(path: artifacts.PathLike, trajectory: np.ndarray) -> pathlib.Path:
    return artifacts.write_json(path, {'q': np.asarray(trajectory, dtype=np.float64).tolist()})


def read_trajectory(path: artifacts.PathLike) -> np.ndarray:
    payload = artifacts.read_json(path)

    try:
        trajectory = np.asarray(payload['q'], dtype=np.float64)

    except (KeyError, TypeError, ValueError) as e:
        raise artifacts.MalformedArtifactError(path, str(e)) from e

    if trajectory.ndim != 2 or not np.all(np.isfinite(trajectory)):
        raise artifacts.MalformedArtifactError(path, 'Trajectory must be a finite H x d matrix')

    return trajectory


def write_diagnostics(path: artifacts.PathLike, diagnostics: planner_types.PlanDiagnostics) -> pathlib.Path:
    return artifacts.write_csv(path, DIAGNOSTIC_COLUMNS, [step.model_dump() for step in diagnostics.steps])
