import pathlib

from . import artifacts
from ..module_types import base, eval_types

ROWS_NAME = 'benchmark.csv'
AGGREGATE_NAME = 'aggregate.csv'
LOSS_COLUMNS = ['epoch', 'train_loss', 'heldout_loss']


def _cell(value) -> str | int | float:
    if value is None:
        return ''

    if isinstance(value, bool):
        return 'true' if value else 'false'

    return value


def _to_rows(models: list[base.Base]) -> list[dict]:
    return [{key: _cell(value) for key, value in model.model_dump().items()} for model in models]


def write_rows(path: artifacts.PathLike, rows: list[eval_types.BenchmarkRow]) -> pathlib.Path:
    return artifacts.write_csv(path, eval_types.ROW_COLUMNS, _to_rows(rows))


def write_aggregates(path: artifacts.PathLike, rows: list[eval_types.AggregateRow]) -> pathlib.Path:
    return artifacts.write_csv(path, eval_types.AGGREGATE_COLUMNS, _to_rows(rows))


def _read(path: artifacts.PathLike, result_type: type[base.BaseSubclass], columns: list[str]) -> list[base.BaseSubclass]:
    return [
        artifacts.validate(path, result_type, {key: value if value != '' else None for key, value in row.items()})
        for row in artifacts.read_csv(path, columns)
    ]


def read_rows(path: artifacts.PathLike) -> list[eval_types.BenchmarkRow]:
    return _read(path, eval_types.BenchmarkRow, eval_types.ROW_COLUMNS)


def read_aggregates(path: artifacts.PathLike) -> list[eval_types.AggregateRow]:
    return _read(path, eval_types.AggregateRow, eval_types.AGGREGATE_COLUMNS)


def write_loss_curve(path: artifacts.PathLike, history: list) -> pathlib.Path:
    return artifacts.write_csv(path, LOSS_COLUMNS, _to_rows(history))
