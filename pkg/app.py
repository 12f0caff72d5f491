import json
import logging
import sys
from pathlib import Path

import click

from config import LOG_LEVEL, OUTPUT_DIR, WORKERS
from errors import ConfigError
from services.experiments import ExperimentConfig, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else getattr(logging, LOG_LEVEL.upper(), logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s",
                        force=True)


def _config_error(report: dict) -> None:
    click.echo(json.dumps(report, indent=2, sort_keys=True, default=str), err=True)
    sys.exit(EXIT_CONFIG)


@click.group()
def cli():
    """Measurement-induced entanglement lab."""


@cli.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--workers", "-w", type=click.IntRange(min=1), default=WORKERS, show_default=True,
              help="Grid points evaluated concurrently.")
@click.option("--emit-plot-script", is_flag=True, help="Write a matplotlib script next to each CSV.")
@click.option("--output", "-o", type=click.Path(file_okay=False, path_type=Path), default=OUTPUT_DIR,
              show_default=True, help="Output directory (overridden by 'output' in the config).")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging.")
@click.option("--progress/--no-progress", default=True, help="Progress line on stdout.")
def run(config_path, workers, emit_plot_script, output, verbose, progress):
    """Run the experiment described by CONFIG_PATH (flat JSON)."""
    configure_logging(verbose)
    try:
        raw = json.loads(config_path.read_text())
    except json.JSONDecodeError as e:
        _config_error({"error": "ConfigError", "message": "config is not valid JSON",
                       "details": {"line": e.lineno, "column": e.colno, "reason": e.msg}})
    try:
        cfg = ExperimentConfig.from_dict(raw)
    except ConfigError as e:
        _config_error(e.report())

    click.echo(f"=== {cfg.experiment} ({cfg.engine}) ===")
    summary = run_experiment(cfg, output, workers=workers,
                             emit_plot_script=emit_plot_script, progress=progress)
    for path in summary.paths:
        click.echo(f"Saved: {path}")
    click.echo(f"  Wall time:   {summary.wall_time:.1f}s")
    click.echo(f"  Grid errors: {summary.error_count}")
    sys.exit(EXIT_PARTIAL if summary.error_count else EXIT_OK)


@cli.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--output", "-o", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Workbook path (default: <directory>/report_<timestamp>.xlsx).")
def report(directory, output):
    """Collect the CSV tables of DIRECTORY into one Excel workbook."""
    from report import build_report

    configure_logging()
    path, overview = build_report(directory, output)
    click.echo(f"Saved: {path}")
    click.echo(f"  Tables:  {len(overview)}")
    click.echo(f"  Failing: {sum(1 for row in overview if not row.passed)}")


if __name__ == "__main__":
    cli()
