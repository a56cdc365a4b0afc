import pathlib

import pydantic

from . import artifacts
from ..module_types import dataset_types

DATASET_NAME = 'dataset.jsonl'
MANIFEST_NAME = 'manifest.json'
SCENE_DIR = 'scenes'


def scene_name(seed: int) -> str:
    return f'{SCENE_DIR}/scene_{seed:04d}.json'


def write_records(path: artifacts.PathLike, records: list[dataset_types.DatasetRecord]) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [artifacts.dumps(record.model_dump(mode='json')) + '\n' for record in records]
    path.write_text(''.join(lines), encoding='utf-8')
    return path


def read_records(path: artifacts.PathLike) -> list[dataset_types.DatasetRecord]:
    path = artifacts.require(path)
    records = []

    for number, line in enumerate(path.read_text(encoding='utf-8').splitlines(), start=1):
        if not line.strip():
            continue

        try:
            records.append(dataset_types.DatasetRecord.model_validate_json(line))

        except pydantic.ValidationError as e:
            raise artifacts.MalformedArtifactError(path, f'line {number}: {e}') from e

    return records


def write_manifest(path: artifacts.PathLike, manifest: dataset_types.Manifest) -> pathlib.Path:
    return artifacts.write_model(path, manifest)


def read_manifest(path: artifacts.PathLike) -> dataset_types.Manifest:
    return artifacts.read_model(path, dataset_types.Manifest)


def resolve_scene(dataset_path: artifacts.PathLike, record: dataset_types.DatasetRecord) -> pathlib.Path:
    """Scene paths in records are relative to the dataset file."""
    return pathlib.Path(dataset_path).parent / record.scene_file
