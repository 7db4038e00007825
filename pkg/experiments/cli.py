# experiments/cli.py

"""
Command-line entry point: ``python manage.py heavytail <command> --config FILE``.

Exit codes: 0 on success, 2 for usage and config errors, 3 when ``verify``
finds a scenario outside its acceptance bands.
"""

import json
import logging
import os

import click
import numpy as np

from levy.exceptions import HeavyTailError
from levy.jump_opt import optimal_jump_path
from levy.limit_measures import estimate_C

from .config import ConfigError, load_config
from .runner import default_sampler, mc_functionals, plan_batches, sample_batch, scenario_stream
from .scenarios import run_scenario

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY_FAILED = 3

MAX_U64 = 2**64 - 1


def _emit(record):
    click.echo(json.dumps(record, indent=2, sort_keys=True))


def _load(path, seed=None, samples=None, out=None):
    return load_config(path).with_overrides(seed=seed, samples=samples, output_dir=out)


def _require(cfg, key, command):
    if getattr(cfg, key) is None:
        raise ConfigError(f"'{command}' needs [{key}] in the config.", {key: [f"Required by '{command}'."]})


config_option = click.option('--config', 'config_path', required=True, type=click.Path(dir_okay=False),
                             help='TOML experiment config.')
seed_option = click.option('--seed', type=click.IntRange(0, MAX_U64), default=None, help='Override the config seed.')
out_option = click.option('--out', type=click.Path(file_okay=False), default=None, help='Output directory.')
samples_option = click.option('--samples', type=click.IntRange(min=1), default=None,
                              help='Override samples_per_n (or limit_samples for estimate-c).')


@click.group(context_settings={'help_option_names': ['-h', '--help']})
def cli():
    """Heavy-tailed Levy process large deviations: simulate, estimate limit constants, verify."""


@cli.command()
@config_option
@seed_option
@out_option
@samples_option
@click.option('--dump-paths', is_flag=True, help='Write every sampled path as CSV under OUT/paths/.')
def simulate(config_path, seed, out, samples, dump_paths):
    """Simulate X_n (or the scaled walk) and print sup/terminal summaries per n."""
    cfg = _load(config_path, seed, samples, out)
    source = cfg.model if cfg.model is not None else cfg.increments
    if source is None:
        raise ConfigError("'simulate' needs [pos] or [increments] in the config.", {'pos': ["Required by 'simulate'."]})
    if not cfg.n_list:
        raise ConfigError("'simulate' needs n_list.", {'n_list': ["Required by 'simulate'."]})

    base = scenario_stream(cfg.seed, 'mc')
    summary = {}
    for i, n in enumerate(cfg.n_list):
        stream = base.child(i)
        sup, terminal = mc_functionals(source, n, cfg.samples_per_n, stream, cfg.batch_size,
                                       workers=cfg.workers, m_grid=cfg.m_grid)
        summary[str(n)] = {
            'samples': cfg.samples_per_n,
            'sup_mean': float(np.mean(sup)),
            'sup_q99': float(np.quantile(sup, 0.99)),
            'terminal_mean': float(np.mean(terminal)),
            'terminal_std': float(np.std(terminal)),
        }
        if dump_paths:
            _dump_paths(cfg, source, n, stream)
    _emit({'scenario': cfg.scenario, 'seed': cfg.seed, 'functionals': summary})


def _dump_paths(cfg, source, n, stream):
    """Re-draw the batches of one n on the same streams and write each path."""
    folder = os.path.join(cfg.output_dir, 'paths', f"n{n}")
    os.makedirs(folder, exist_ok=True)
    sampler = default_sampler(source)
    index = 0
    for b, size in enumerate(plan_batches(cfg.samples_per_n, cfg.batch_size)):
        batch = sample_batch(source, sampler, n, size, stream.child(b), m_grid=cfg.m_grid)
        for path in batch.paths():
            path.to_csv(os.path.join(folder, f"path_{index:06d}.csv"))
            index += 1
    logger.info(f"Dumped {index} paths for n={n} to {folder}")


@cli.command('estimate-c')
@config_option
@seed_option
@out_option
@samples_option
def estimate_c(config_path, seed, out, samples):
    """Estimate C_{j,k}(A) for the config's [target] and [estimate] tables."""
    cfg = _load(config_path, seed, out=out)
    _require(cfg, 'model', 'estimate-c')
    _require(cfg, 'target', 'estimate-c')
    if not cfg.estimate:
        raise ConfigError("'estimate-c' needs [estimate] in the config.", {'estimate': ["Required by 'estimate-c'."]})

    target = cfg.target.build()
    model = cfg.model
    result = estimate_C(
        target, model.alpha, model.beta, cfg.estimate['j'], cfg.estimate['k'],
        delta_plus=cfg.estimate.get('delta_plus'), delta_minus=cfg.estimate.get('delta_minus'),
        N=samples or cfg.limit_samples, rng=scenario_stream(cfg.seed, 'limit'),
    )
    record = result.to_record()
    if out is not None:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, 'estimate.json'), 'w', encoding='utf-8') as handle:
            json.dump(record, handle, indent=2, sort_keys=True)
            handle.write('\n')
    _emit(record)


@cli.command()
@config_option
def corridor(config_path):
    """Print the minimal jump counts (J, K) and the optimal path through [corridor]."""
    cfg = _load(config_path)
    _require(cfg, 'corridor', 'corridor')
    _emit(optimal_jump_path(cfg.corridor).to_record())


@cli.command()
@config_option
@seed_option
@out_option
@samples_option
def run(config_path, seed, out, samples):
    """Run one scenario and write report.json and ratios.csv."""
    cfg = _load(config_path, seed, samples, out)
    if cfg.scenario is None:
        raise ConfigError("'run' needs a scenario.", {'scenario': ["This field is required."]})
    report = run_scenario(cfg)
    report_path, _ = report.write(cfg.output_dir)
    click.echo(f"{cfg.scenario}: {'PASS' if report.passed else 'FAIL'} -> {report_path}")


@cli.command()
@config_option
@seed_option
@out_option
@samples_option
@click.pass_context
def verify(ctx, config_path, seed, out, samples):
    """Run a scenario or every config of a [suite]; exit 3 if any band check fails."""
    cfg = load_config(config_path)
    configs = [_load(path) for path in cfg.suite] if cfg.suite else [cfg]

    failed = []
    for item in configs:
        item_out = os.path.join(out, item.scenario or 'adhoc') if out is not None else None
        item = item.with_overrides(seed=seed, samples=samples, output_dir=item_out)
        report = run_scenario(item)
        report.write(item.output_dir)
        failing = sorted(name for name, ok in report.checks.items() if not ok)
        click.echo(f"{item.scenario}: {'PASS' if report.passed else 'FAIL ' + ', '.join(failing)}")
        if not report.passed:
            failed.append(item.scenario)

    if failed:
        click.echo(f"{len(failed)} of {len(configs)} scenarios outside their bands: {', '.join(failed)}", err=True)
        ctx.exit(EXIT_VERIFY_FAILED)


def cli_main(argv=None):
    """Run the CLI without exiting the interpreter; returns the exit code."""
    try:
        result = cli.main(args=argv, prog_name='heavytail', standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.Abort:
        click.echo('Aborted.', err=True)
        return 1
    except ConfigError as exc:
        click.echo(f"Error: {exc}", err=True)
        return EXIT_CONFIG
    except HeavyTailError as exc:
        logger.error(f"heavytail failed: {exc}", exc_info=True)
        click.echo(f"Error: {exc}", err=True)
        return 1
    return result if isinstance(result, int) else EXIT_OK
