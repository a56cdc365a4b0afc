import functools
import io
import logging
import pathlib
import sys

import click
import plotille
import tabulate
from rich import console as rich_console
from rich import table as rich_table

from . import (
    benchmark,
    config as config_module,
    dataset,
    evaluation,
    kinematics,
    plotting,
    sampler,
    scene,
    scene_generator,
    trainer
)
from .files import artifacts, benchmark_file, checkpoint, dataset_file, scene_file, trajectory_file
from .module_types import diffusion_types, eval_types, planner_types, scene_types

EXIT_CODES: list[tuple[tuple[type[Exception], ...], int]] = [
    ((scene_generator.GenerationFailure,), 2),
    ((artifacts.MissingArtifactError,), 3),
    ((sampler.DimensionMismatchError, kinematics.DimensionError), 4),
    ((artifacts.MalformedArtifactError, config_module.ConfigError, trainer.EmptyDatasetError), 5),
]


BANNER = """
        ████████╗██████╗  █████╗      ██╗██████╗ ██╗███████╗███████╗
        ╚══██╔══╝██╔══██╗██╔══██╗     ██║██╔══██╗██║██╔════╝██╔════╝
           ██║   ██████╔╝███████║     ██║██║  ██║██║█████╗  █████╗
           ██║   ██╔══██╗██╔══██║██   ██║██║  ██║██║██╔══╝  ██╔══╝
           ██║   ██║  ██║██║  ██║╚█████╔╝██████╔╝██║██║     ██║
           ╚═╝   ╚═╝  ╚═╝╚═╝  ╚═╝ ╚════╝ ╚═════╝ ╚═╝╚═╝     ╚═╝
"""

COMMON_OPTIONS = ('--config', '--set', '--verbose')

STAGES = [
    ('Data', ['gen-scenes', 'gen-data']),
    ('Model', ['train']),
    ('Planning', ['plan']),
    ('Evaluation', ['eval', 'ablate', 'plot']),
    ('Setup', ['show-config'])
]


class RichGroup(click.Group):
    """Help grouped by pipeline stage; the flags every command shares are listed once at the end."""

    @staticmethod
    def __usage(cmd: click.Command) -> str:
        flags = []

        for param in cmd.params:
            if not isinstance(param, click.Option) or param.opts[0] in COMMON_OPTIONS:
                continue

            flags.append(f'[bold]{param.opts[0]}[/bold]' if param.required else f'[dim]\\[{param.opts[0]}][/dim]')

        return ' '.join(flags)

    def format_help(self, ctx, formatter):
        commands = {name: self.get_command(ctx, name) for name in self.list_commands(ctx)}
        commands = {name: cmd for name, cmd in commands.items() if cmd is not None and not cmd.hidden}
        staged = {name for _, names in STAGES for name in names}

        sio = io.StringIO()
        console = rich_console.Console(file=sio, force_terminal=True, width=140)
        console.print(BANNER)

        for stage, names in STAGES + [('Other', [name for name in commands if name not in staged])]:
            names = [name for name in names if name in commands]

            if not names:
                continue

            table = rich_table.Table(
                title=f'[bold]{stage}', title_justify='left', show_header=False, box=None, padding=(0, 2)
            )

            for name in names:
                table.add_row(
                    f'[bold underline]{name}', self.__usage(commands[name]), commands[name].get_short_help_str(60)
                )

            console.print(table)

        exits = ', '.join(f'{code} {"/".join(t.__name__ for t in types)}' for types, code in EXIT_CODES)
        console.print(f'\n[italic]Every command also takes {", ".join(COMMON_OPTIONS)}.')
        console.print(f'[italic]Exit codes: {exits}')
        formatter.write(sio.getvalue())


def setup_logging(level: str = 'INFO'):
    logging.basicConfig(
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
        force=True
    )
    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    root_logger.debug('Logger created')


def display_table(rows: list[dict]):
    if not rows:
        return

    headers = list(rows[0].keys())
    rows = [[row[header] for header in headers] for row in rows]

    click.echo(
        click.style(
            tabulate.tabulate(rows, headers=headers, tablefmt='grid', floatfmt='.3f'),
            fg='green'
        ),
        err=True
    )


def exit_code(error: Exception) -> int | None:
    for error_types, code in EXIT_CODES:
        if isinstance(error, error_types):
            return code

    return None


def pipeline_command(func):
    """Adds the common flags, loads the run config and prints the command's summary as one JSON line."""

    @click.option('--verbose', is_flag=True, help='Log at DEBUG level')
    @click.option('--set', 'overrides', multiple=True, help='Override a config value, e.g. --set weights.lambda_collision=2')
    @click.option('--config', 'config_file', type=click.Path(path_type=pathlib.Path), default=None, help='JSON config file')
    @functools.wraps(func)
    def wrapper(config_file: pathlib.Path | None, overrides: tuple[str, ...], verbose: bool, **kwargs):
        setup_logging('DEBUG' if verbose else 'INFO')
        logger = logging.getLogger('trajdiff.cli')

        try:
            run_config = config_module.load_config(config_file, overrides)
            summary = func(run_config, **kwargs)

        except Exception as e:
            code = exit_code(e)

            if code is None:
                raise

            logger.error(str(e))
            sys.exit(code)

        click.echo(artifacts.dumps(summary))

    return wrapper


def parse_ints(value: str) -> list[int]:
    try:
        return [int(part) for part in value.split(',') if part.strip()]

    except ValueError as e:
        raise config_module.ConfigError(f'Expected comma-separated integers, got {value!r}') from e


def parse_seed_range(value: str) -> list[int]:
    start, separator, stop = value.partition(':')

    try:
        return list(range(int(start), int(stop))) if separator else [int(start)]

    except ValueError as e:
        raise config_module.ConfigError(f'Expected START:STOP, got {value!r}') from e


@click.option('--task-type', type=click.Choice(['goal_reach', 'place', 'grasp']), default=None)
@click.option('--out-dir', default=None, help='Output directory')
@click.option('--seed', default=0, help='First scene seed')
@click.option('--count', default=10, help='Number of scenes')
@pipeline_command
def gen_scenes(
        run_config: config_module.RunConfig,
        count: int,
        seed: int,
        out_dir: str | None,
        task_type: scene_types.TaskType | None
) -> dict:
    """
    Generate random scenes, one file per seed
    """
    spec = run_config.scene_generator.model_copy(update={'task_type': task_type or run_config.scene_generator.task_type})
    generator = scene_generator.SceneGenerator(run_config.robot, spec)
    out = config_module.out_dir(run_config, out_dir)
    written = []

    for scene_seed in range(seed, seed + count):
        written.append(str(scene_file.write(out / dataset_file.scene_name(scene_seed), generator.generate(scene_seed))))

    return {'command': 'gen-scenes', 'scenes': len(written), 'out_dir': str(out)}


@click.option('--threads', default=None, type=int, help='Worker threads')
@click.option('--holdout-scenes', default=0, help='Scenes whose tasks form the unseen split')
@click.option('--task-type', type=click.Choice(['goal_reach', 'place', 'grasp']), default=None)
@click.option('--out-dir', default=None, help='Output directory')
@click.option('--tasks-per-scene', default=10, help='Tasks sampled per scene')
@click.option('--seeds', default='0:20', help='Scene seeds as START:STOP')
@pipeline_command
def gen_data(
        run_config: config_module.RunConfig,
        seeds: str,
        tasks_per_scene: int,
        out_dir: str | None,
        task_type: scene_types.TaskType | None,
        holdout_scenes: int,
        threads: int | None
) -> dict:
    """
    Generate scenes and solve their tasks with the expert planner
    """
    spec = run_config.scene_generator.model_copy(update={'task_type': task_type or run_config.scene_generator.task_type})
    out = config_module.out_dir(run_config, out_dir)
    manifest = dataset.generate_dataset(
        run_config.robot,
        parse_seed_range(seeds),
        tasks_per_scene,
        spec,
        run_config.expert,
        out,
        holdout_scenes,
        threads or run_config.threads
    )

    return {'command': 'gen-data', 'out_dir': str(out), **manifest.model_dump(exclude={'seeds', 'discarded_tasks'})}


def loss_plot(history: list[diffusion_types.EpochLoss]) -> str:
    return plotille.plot(
        X=[entry.epoch for entry in history],
        X_label='Epoch',
        Y=[entry.train_loss for entry in history],
        Y_label='Train loss',
        height=10,
        width=80,
        interp='linear',
        lc='green',
        origin=False
    )


@click.option('--threads', default=None, type=int, help='Torch threads')
@click.option('--seed', default=None, type=int)
@click.option('--lr', default=None, type=float, help='Adam learning rate')
@click.option('--batch-size', default=None, type=int)
@click.option('--epochs', default=None, type=int)
@click.option('--out', required=True, help='Checkpoint path')
@click.option('--dataset', 'dataset_path', required=True, help='dataset.jsonl path')
@pipeline_command
def train(
        run_config: config_module.RunConfig,
        dataset_path: str,
        out: str,
        epochs: int | None,
        batch_size: int | None,
        lr: float | None,
        seed: int | None,
        threads: int | None
) -> dict:
    """
    Train the trajectory diffusion model on the dataset's train split
    """
    flags = {'epochs': epochs, 'batch_size': batch_size, 'learning_rate': lr, 'seed': seed, 'threads': threads}
    train_config = run_config.train.model_copy(update={key: value for key, value in flags.items() if value is not None})
    examples = dataset.load_examples(pathlib.Path(dataset_path), run_config.robot, train_config.point_scale)
    model = trainer.train(examples, train_config, run_config.arch)

    path = checkpoint.write(out, model)
    loss_path = benchmark_file.write_loss_curve(path.with_suffix('.loss.csv'), model.history)

    if len(model.history) > 1:
        click.echo(loss_plot(model.history), err=True)

    return {
        'command': 'train',
        'checkpoint': str(path),
        'loss_curve': str(loss_path),
        'examples': len(examples),
        'epochs': len(model.history),
        'best_epoch': model.best_epoch,
        'final_train_loss': model.history[-1].train_loss
    }


def plan_task(run_config: config_module.RunConfig, loaded: scene_types.Scene, task_index: int) -> scene_types.TaskSpec:
    """Index 0 is the scene's own task; others are resampled in the same room with the index as seed."""
    if task_index == 0:
        return loaded.task

    spec = run_config.scene_generator.model_copy(update={'task_type': loaded.task.task_type})
    generator = scene_generator.SceneGenerator(run_config.robot, spec)
    return generator.resample_task(loaded.grid, task_index)


@click.option('--planner-config', default=None, help='Planner config JSON')
@click.option('--K', 'extra_steps', default=None, type=int, help='Extra guided steps at t=1')
@click.option('--no-guidance', is_flag=True, help='Sample without objective guidance')
@click.option('--seed', default=None, type=int)
@click.option('--out', required=True, help='Trajectory JSON path')
@click.option('--task-index', default=0, help='Task index within the scene')
@click.option('--scene-file', 'scene_file_path', default=None)
@click.option('--checkpoint', 'checkpoint_path', default=None)
@pipeline_command
def plan(
        run_config: config_module.RunConfig,
        checkpoint_path: str | None,
        scene_file_path: str | None,
        task_index: int,
        out: str,
        seed: int | None,
        no_guidance: bool,
        extra_steps: int | None,
        planner_config: str | None
) -> dict:
    """
    Plan a trajectory with guided diffusion
    """
    planner = planner_types.PlannerConfig(
        checkpoint=checkpoint_path or '',
        scene_file=scene_file_path or '',
        weights=run_config.weights,
        K=run_config.guidance.extra_steps
    )

    if planner_config:
        planner = artifacts.read_model(planner_config, planner_types.PlannerConfig)

    flags = {
        'checkpoint': checkpoint_path,
        'scene_file': scene_file_path,
        'seed': seed,
        'K': extra_steps,
        'guidance_enabled': False if no_guidance else None
    }
    planner = planner.model_copy(update={key: value for key, value in flags.items() if value is not None})

    if not planner.checkpoint or not planner.scene_file:
        raise config_module.ConfigError('plan needs --checkpoint and --scene-file or a planner config')

    model = checkpoint.read(planner.checkpoint)
    loaded = scene_file.read(planner.scene_file)
    task = planner.task or plan_task(run_config, loaded, task_index)
    sdf = scene.build_sdf(loaded.grid)

    cfg = run_config.guidance.model_copy(update={
        'weights': planner.weights,
        'extra_steps': planner.K,
        'guidance_enabled': planner.guidance_enabled,
        'seed': planner.seed
    })
    result = sampler.plan(run_config.robot, sdf, model, task, cfg, run_config.grasp)

    trajectory_path = trajectory_file.write_trajectory(out, result.trajectory)
    diagnostics_path = trajectory_file.write_diagnostics(
        trajectory_path.with_name(f'{trajectory_path.stem}_diagnostics.csv'),
        result.diagnostics
    )
    report = evaluation.score_trajectory(
        run_config.robot, sdf, result.trajectory, task, run_config.thresholds, result.diagnostics.wall_time_s
    )

    return {
        'command': 'plan',
        'trajectory': str(trajectory_path),
        'diagnostics': str(diagnostics_path),
        'phi': result.diagnostics.steps[-1].phi if result.diagnostics.steps else None,
        'success': report.success,
        'wall_time_s': result.diagnostics.wall_time_s
    }


@click.option('--out-dir', default=None, help='Output directory')
@click.option('--split', type=click.Choice(['train', 'test', 'unseen', 'all']), default='all')
@click.option('--task-index', default=0, help='Task index for --trajectories')
@click.option('--scene-file', 'scene_file_path', default=None, help='Scene for --trajectories')
@click.option('--trajectories', multiple=True, help='Trajectory JSON files')
@click.option('--dataset', 'dataset_path', default=None, help='dataset.jsonl path')
@pipeline_command
def evaluate(
        run_config: config_module.RunConfig,
        dataset_path: str | None,
        trajectories: tuple[str, ...],
        scene_file_path: str | None,
        task_index: int,
        split: str,
        out_dir: str | None
) -> dict:
    """
    Re-score stored trajectories against the task success criteria
    """
    if dataset_path:
        records = dataset.select(dataset_file.read_records(dataset_path), None if split == 'all' else split)
        rows = benchmark.rescore_records(run_config.robot, pathlib.Path(dataset_path), records, run_config.thresholds)

    elif trajectories and scene_file_path:
        loaded = scene_file.read(scene_file_path)
        task = plan_task(run_config, loaded, task_index)
        sdf = scene.build_sdf(loaded.grid)
        rows = [
            eval_types.BenchmarkRow.from_report(
                pathlib.Path(path).stem,
                'stored',
                0,
                evaluation.score_trajectory(
                    run_config.robot, sdf, trajectory_file.read_trajectory(path), task, run_config.thresholds
                )
            )
            for path in trajectories
        ]

    else:
        raise config_module.ConfigError('eval needs --dataset, or --trajectories with --scene-file')

    aggregates = benchmark.aggregate(rows, run_config.thresholds)
    rows_path, aggregate_path = benchmark.write_results(config_module.out_dir(run_config, out_dir), rows, aggregates)
    display_table([row.model_dump() for row in aggregates])

    return {
        'command': 'eval',
        'rows': str(rows_path),
        'aggregate': str(aggregate_path),
        'tasks': len(rows),
        'success_pct': aggregates[0].success_pct if aggregates else None
    }


@click.option('--threads', default=None, type=int, help='Worker threads')
@click.option('--no-timing', is_flag=True, help='Record solve time as 0 for byte-identical CSVs')
@click.option('--langevin-steps', default=None, help='Comma-separated Langevin iteration budgets')
@click.option('--seeds', default='0', help='Comma-separated planner seeds')
@click.option('--tasks', default=None, type=int, help='Limit the number of tasks')
@click.option('--split', type=click.Choice(['train', 'test', 'unseen', 'all']), default='test')
@click.option('--out-dir', default=None, help='Output directory')
@click.option('--dataset', 'dataset_path', required=True, help='dataset.jsonl path')
@click.option('--checkpoint', 'checkpoint_path', required=True)
@pipeline_command
def ablate(
        run_config: config_module.RunConfig,
        checkpoint_path: str,
        dataset_path: str,
        out_dir: str | None,
        split: str,
        tasks: int | None,
        seeds: str,
        langevin_steps: str | None,
        no_timing: bool,
        threads: int | None
) -> dict:
    """
    Compare guided, unguided and Langevin planners on the same tasks
    """
    settings = benchmark.BenchmarkSettings(
        weights=run_config.weights,
        grasp=run_config.grasp,
        guidance=run_config.guidance_config(),
        langevin=run_config.langevin,
        langevin_steps=parse_ints(langevin_steps) if langevin_steps else [],
        thresholds=run_config.thresholds,
        timing=not no_timing,
        threads=threads or run_config.threads
    )
    rows, aggregates = benchmark.run_benchmark(
        run_config.robot,
        pathlib.Path(checkpoint_path),
        pathlib.Path(dataset_path),
        list(planner_types.PLANNER_NAMES),
        parse_ints(seeds),
        settings,
        None if split == 'all' else split,
        tasks
    )
    out = config_module.out_dir(run_config, out_dir)
    rows_path, aggregate_path = benchmark.write_results(out, rows, aggregates)
    figure_path = plotting.save_svg(plotting.ablation_figure(aggregates), out / 'ablation.svg')
    display_table([row.model_dump() for row in aggregates])

    return {
        'command': 'ablate',
        'rows': str(rows_path),
        'aggregate': str(aggregate_path),
        'figure': str(figure_path),
        'success_pct': {row.planner: row.success_pct for row in aggregates}
    }


@click.option('--trajectory', 'trajectory_path', default=None, help='Trajectory JSON for overlays')
@click.option('--scene-file', 'scene_file_path', default=None, help='Scene for overlays')
@click.option('--kind', type=click.Choice(['success', 'phi', 'overlay']), default='success')
@click.option('--out', required=True, help='SVG path')
@click.option('--csv', 'csv_path', default=None, help='Benchmark or diagnostics CSV')
@pipeline_command
def plot(
        run_config: config_module.RunConfig,
        csv_path: str | None,
        out: str,
        kind: str,
        scene_file_path: str | None,
        trajectory_path: str | None
) -> dict:
    """
    Render success bars, phi traces or a trajectory overlay as SVG
    """
    if kind == 'overlay':
        if not scene_file_path:
            raise config_module.ConfigError('overlay plots need --scene-file')

        trajectory = trajectory_file.read_trajectory(trajectory_path) if trajectory_path else None
        path = plotting.plot_overlay(run_config.robot, scene_file.read(scene_file_path), trajectory, out)

    elif not csv_path:
        raise config_module.ConfigError(f'{kind} plots need --csv')

    elif kind == 'phi':
        path = plotting.plot_phi(csv_path, out)

    else:
        path = plotting.plot_success(csv_path, out)

    return {'command': 'plot', 'kind': kind, 'figure': str(path)}


@pipeline_command
def show_config(run_config: config_module.RunConfig) -> dict:
    """
    Print the effective configuration
    """
    return run_config.model_dump(mode='json')


@click.group(cls=RichGroup)
def cli():
    pass


cli.add_command(click.command()(gen_scenes))
cli.add_command(click.command()(gen_data))
cli.add_command(click.command()(train))
cli.add_command(click.command()(plan))
cli.add_command(click.command('eval')(evaluate))
cli.add_command(click.command()(ablate))
cli.add_command(click.command()(plot))
cli.add_command(click.command()(show_config))

if __name__ == '__main__':
    cli()
