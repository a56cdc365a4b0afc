"""
Run configuration: built-in defaults, an optional JSON file, then dot-path overrides.
"""
import json
import os
import pathlib
import typing

import pydantic

from .files import artifacts
from .module_types import (
    base,
    diffusion_types,
    eval_types,
    expert_types,
    objective_types,
    planner_types,
    robot_types,
    scene_types
)
from .resources import defaults

OUT_DIR_ENV = 'TRAJDIFF_OUT_DIR'
DEFAULT_OUT_DIR = 'out'


class ConfigError(Exception):
    pass


class RunConfig(base.Base):
    robot: robot_types.RobotModel = pydantic.Field(default_factory=defaults.default_robot)
    scene_generator: scene_types.SceneGeneratorSpec = scene_types.SceneGeneratorSpec()
    weights: objective_types.CostWeights = objective_types.CostWeights()
    grasp: objective_types.GraspSettings = objective_types.GraspSettings()
    expert: expert_types.ExpertConfig = expert_types.ExpertConfig()
    train: diffusion_types.TrainConfig = diffusion_types.TrainConfig()
    arch: diffusion_types.DenoiserArch = diffusion_types.DenoiserArch()
    guidance: planner_types.GuidanceConfig = planner_types.GuidanceConfig()
    langevin: planner_types.LangevinConfig = planner_types.LangevinConfig()
    thresholds: eval_types.EvalThresholds = eval_types.EvalThresholds()
    threads: int = pydantic.Field(default=1, gt=0)
    out_dir: str = DEFAULT_OUT_DIR

    def guidance_config(self, **update: typing.Any) -> planner_types.GuidanceConfig:
        return self.guidance.model_copy(update={'weights': self.weights} | update)


def parse_override(override: str) -> tuple[list[str], typing.Any]:
    """'a.b=value' -> (['a', 'b'], value); values are JSON when they parse, strings otherwise."""
    key, separator, raw = override.partition('=')

    if not separator or not key.strip():
        raise ConfigError(f'Override {override!r} is not of the form key=value')

    try:
        value = json.loads(raw)

    except json.JSONDecodeError:
        value = raw

    return key.strip().split('.'), value


def apply_override(payload: dict, path: list[str], value: typing.Any) -> None:
    target = payload

    for depth, key in enumerate(path[:-1]):
        if not isinstance(target.get(key), dict):
            raise ConfigError(f'Unknown config key {".".join(path[:depth + 1])}')

        target = target[key]

    if path[-1] not in target:
        raise ConfigError(f'Unknown config key {".".join(path)}')

    target[path[-1]] = value


def merge(payload: dict, updates: dict, prefix: str = '') -> None:
    for key, value in updates.items():
        if key not in payload:
            raise ConfigError(f'Unknown config key {prefix}{key}')

        if isinstance(value, dict) and isinstance(payload[key], dict):
            merge(payload[key], value, f'{prefix}{key}.')

        else:
            payload[key] = value


def load_config(config_file: pathlib.Path | None = None, overrides: typing.Sequence[str] = ()) -> RunConfig:
    payload = RunConfig().model_dump(mode='json')

    if config_file is not None:
        from_file = artifacts.read_json(config_file)

        if not isinstance(from_file, dict):
            raise artifacts.MalformedArtifactError(config_file, 'Config file must hold a JSON object')

        merge(payload, from_file)

    for override in overrides:
        apply_override(payload, *parse_override(override))

    if os.environ.get(OUT_DIR_ENV):
        payload['out_dir'] = os.environ[OUT_DIR_ENV]

    try:
        return RunConfig.model_validate(payload)

    except pydantic.ValidationError as e:
        raise ConfigError(str(e)) from e


def out_dir(config: RunConfig, explicit: str | None = None) -> pathlib.Path:
    """An explicit flag wins; otherwise the configured directory, which the environment may have replaced."""
    return pathlib.Path(explicit or config.out_dir)
