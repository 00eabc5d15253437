import os
import sys
import json
import logging
import signal

import click
from gevent.pywsgi import WSGIServer

from config import EXPERIMENTS, ExperimentConfig
from errors import KorobovError
import reporting

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s'


def configure_logging(level):
    logging.basicConfig(
        level=getattr(logging, str(level).upper(), logging.INFO),
        format=LOG_FORMAT,
        datefmt='%Y-%m-%d %H:%M:%S'
    )


def record_outcome(cfg, outcome):
    """Store the run in the ledger; a ledger failure does not fail the experiment."""
    from app import create_app
    from run_registry import RunRegistry

    try:
        app = create_app({"RESULTS_DIR": cfg.output_dir})
        with app.app_context():
            return RunRegistry.record_run(cfg, outcome)
    except Exception as e:
        logger.error(f"Could not record {cfg.experiment} run in the ledger: {str(e)}", exc_info=True)
        return None


def run_command(experiment, config_path, out, seed_offset, jobs, record):
    from experiments import run_experiment

    try:
        cfg = ExperimentConfig.load(config_path, experiment) if config_path else ExperimentConfig.defaults(experiment)
        if cfg.experiment != experiment:
            raise click.UsageError(f"{config_path} configures {cfg.experiment}, not {experiment}")
        cfg = cfg.with_overrides(output_dir=out, seed_offset=seed_offset, jobs=jobs)
        outcome = run_experiment(cfg)
    except click.UsageError:
        raise
    except KorobovError as e:
        logger.error(f"{experiment} failed: {str(e)}", exc_info=True)
        raise click.ClickException(str(e))

    run_id = record_outcome(cfg, outcome) if record else None
    for assertion in outcome.report.get("assertions", []):
        click.echo(f"{'PASS' if assertion.passed else 'FAIL'}  {assertion.name}: {assertion.detail}")
    click.echo(f"results: {outcome.csv_path}")
    if run_id is not None:
        click.echo(f"recorded as run {run_id}")
    sys.exit(0 if outcome.passed else 1)


def experiment_command(experiment):
    @click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False),
                  help='JSON or TOML config; missing keys take the defaults.')
    @click.option('--out', type=click.Path(file_okay=False), help='Output directory.')
    @click.option('--seed-offset', type=int, default=None, help='Added to every seed of the grid.')
    @click.option('--jobs', type=int, default=None, envvar='KOROBOV_JOBS', help='Worker threads for the grid.')
    @click.option('--record/--no-record', default=True, help='Store the run in the ledger.')
    def command(config_path, out, seed_offset, jobs, record):
        run_command(experiment, config_path, out, seed_offset, jobs, record)

    command.__doc__ = f"Run the {experiment} experiment."
    return command


@click.group()
@click.option('--log-level', default='INFO', envvar='LOG_LEVEL', show_default=True,
              type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False))
def cli(log_level):
    """Korobov-space ReLU approximation and classification-rate experiments."""
    configure_logging(log_level)


for _name in EXPERIMENTS:
    cli.command(name=_name.replace('_', '-'))(experiment_command(_name))


@cli.command()
@click.argument('experiment', required=False, type=click.Choice([e.replace('_', '-') for e in EXPERIMENTS]))
def defaults(experiment):
    """Print the default config of one or every experiment."""
    names = [experiment.replace('-', '_')] if experiment else list(EXPERIMENTS)
    data = {name: reporting.json_safe(ExperimentConfig.defaults(name).to_dict()) for name in names}
    click.echo(json.dumps(data[names[0]] if experiment else data, indent=2, sort_keys=True))


@cli.command()
@click.option('--results-dir', default=lambda: os.environ.get('RESULTS_DIR', 'results'), show_default='results')
@click.option('--experiment', default=None)
@click.option('--prune-hours', type=float, default=None, help='Delete runs older than this first.')
def runs(results_dir, experiment, prune_hours):
    """List recorded runs."""
    from app import create_app
    from run_registry import RunRegistry

    app = create_app({"RESULTS_DIR": results_dir})
    with app.app_context():
        if prune_hours is not None:
            click.echo(f"pruned {RunRegistry.prune_runs(prune_hours)} runs")
        for run in RunRegistry.list_runs(experiment):
            status = 'PASS' if run['passed'] else 'FAIL'
            click.echo(f"{run['id']:>5}  {status}  {run['experiment']:<16} {run['run_key']}  "
                       f"{run['updated_at']:%Y-%m-%d %H:%M:%S}")


@cli.command()
@click.option('--port', type=int, default=lambda: int(os.environ.get('PORT', 5000)), show_default='5000')
@click.option('--results-dir', default=lambda: os.environ.get('RESULTS_DIR', 'results'), show_default='results')
def serve(port, results_dir):
    """Serve the read-only run browser."""
    from app import create_app

    try:
        app = create_app({"RESULTS_DIR": results_dir})
        logger.info(f"Starting run browser on port {port}")

        http_server = WSGIServer(('0.0.0.0', port), app, log=logger)

        def signal_handler(signum, frame):
            """Handle shutdown signals gracefully"""
            logger.info(f"Received signal {signum}. Performing graceful shutdown...")
            http_server.stop(timeout=5)
            logger.info("Server stopped gracefully")

        signal.signal(signal.SIGTERM, signal_handler)
        signal.signal(signal.SIGINT, signal_handler)

        logger.info("Server initialization complete, starting WSGI server")
        http_server.serve_forever()

    except Exception as e:
        logger.error(f"Failed to start server: {str(e)}", exc_info=True)
        raise


if __name__ == "__main__":
    cli()
