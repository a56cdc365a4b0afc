import csv
import io
import json
import pathlib
import typing

import pydantic

from ..module_types import base

PathLike = str | pathlib.Path


class MissingArtifactError(Exception):

    def __init__(self, path: PathLike):
        self.path = str(path)
        super().__init__(f'Missing artifact: {self.path}')


class MalformedArtifactError(Exception):

    def __init__(self, path: PathLike, reason: str):
        self.path = str(path)
        self.reason = reason
        super().__init__(f'Malformed artifact {self.path} - {reason}')


def dumps(payload: typing.Any) -> str:
    """Compact JSON in insertion order; identical payloads give identical bytes."""
    return json.dumps(payload, separators=(',', ':'), allow_nan=False)


def require(path: PathLike) -> pathlib.Path:
    path = pathlib.Path(path)

    if not path.exists():
        raise MissingArtifactError(path)

    return path


def write_json(path: PathLike, payload: typing.Any) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload) + '\n', encoding='utf-8')
    return path


def read_json(path: PathLike) -> typing.Any:
    path = require(path)

    try:
        return json.loads(path.read_text(encoding='utf-8'))

    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise MalformedArtifactError(path, str(e)) from e


def validate(path: PathLike, result_type: type[base.BaseSubclass], payload: typing.Any) -> base.BaseSubclass:
    try:
        return result_type.model_validate(payload)

    except pydantic.ValidationError as e:
        raise MalformedArtifactError(path, str(e)) from e


def read_model(path: PathLike, result_type: type[base.BaseSubclass]) -> base.BaseSubclass:
    return validate(path, result_type, read_json(path))


def write_model(path: PathLike, model: base.Base) -> pathlib.Path:
    return write_json(path, model.model_dump(mode='json', exclude_none=True))


def write_csv(path: PathLike, columns: list[str], rows: list[dict]) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator='\n', extrasaction='ignore')
    writer.writeheader()
    writer.writerows(rows)
    path.write_text(buffer.getvalue(), encoding='utf-8')
    return path


def read_csv_table(path: PathLike) -> tuple[list[str], list[dict[str, str]]]:
    path = require(path)

    try:
        with path.open(newline='', encoding='utf-8') as f:
            reader = csv.DictReader(f)
            rows = list(reader)
            columns = reader.fieldnames or []

    except (csv.Error, UnicodeDecodeError) as e:
        raise MalformedArtifactError(path, str(e)) from e

    return columns, rows


def read_csv(path: PathLike, required: list[str] | None = None) -> list[dict[str, str]]:
    """Rows as strings; every required column must be in the header."""
    columns, rows = read_csv_table(path)
    missing = [column for column in required or [] if column not in columns]

    if missing:
        raise MalformedArtifactError(path, f'Missing columns {missing}')

    return rows
