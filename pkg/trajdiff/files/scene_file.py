import base64
import pathlib

import numpy as np

from . import artifacts
from ..module_types import scene_types

SCHEMA_VERSION = 1


def encode_occupancy(cells: np.ndarray) -> str:
    return base64.b64encode(np.packbits(cells.ravel()).tobytes()).decode('ascii')


def decode_occupancy(encoded: str, width: int, height: int) -> np.ndarray:
    packed = np.frombuffer(base64.b64decode(encoded, validate=True), dtype=np.uint8)

    if len(packed) * 8 < width * height:
        raise ValueError(f'Occupancy holds {len(packed) * 8} bits, need {width * height}')

    return np.unpackbits(packed, count=width * height).astype(bool).reshape(height, width)


def to_payload(scene: scene_types.Scene) -> dict:
    grid = scene.grid
    return {
        'schema_version': SCHEMA_VERSION,
        'resolution': grid.resolution,
        'origin': list(grid.origin),
        'width': grid.width,
        'height': grid.height,
        'occupancy': encode_occupancy(grid.cells),
        'annotations': scene.task.model_dump(mode='json', exclude_none=True)
    }


def write(path: artifacts.PathLike, scene: scene_types.Scene) -> pathlib.Path:
    return artifacts.write_json(path, to_payload(scene))


def read(path: artifacts.PathLike) -> scene_types.Scene:
    payload = artifacts.read_json(path)

    try:
        if payload['schema_version'] != SCHEMA_VERSION:
            raise ValueError(f'Unsupported schema version {payload["schema_version"]}')

        cells = decode_occupancy(payload['occupancy'], payload['width'], payload['height'])
        grid = scene_types.OccupancyGrid(
            resolution=payload['resolution'],
            origin=tuple(payload['origin']),
            width=payload['width'],
            height=payload['height'],
            cells=cells
        )

    except (KeyError, TypeError, ValueError) as e:
        raise artifacts.MalformedArtifactError(path, str(e)) from e

    task = artifacts.validate(path, scene_types.TaskSpec, payload['annotations'])
    return scene_types.Scene(grid=grid, task=task)
