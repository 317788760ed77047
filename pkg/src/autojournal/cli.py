"""Command-line entry points: generate, evaluate, report, inspect.

Exit codes: 0 success, 1 any job or input failure, 2 configuration error.
"""

from __future__ import annotations

import logging
import sys

import click

from .config import load_config
from .errors import AutojournalError, ConfigError, MalformedReport
from .pipeline import evaluate_run, generate_run, inspect_run
from .reporting import EvalReport, render_table

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _load(config_path: str):
    try:
        return load_config(config_path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool) -> None:
    """Generate daily journals from screenshot streams and score them."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--participant", "participants", multiple=True, help="Restrict to participant(s).")
@click.option("--date", "dates", multiple=True, help="Restrict to date(s), YYYY-MM-DD.")
@click.option(
    "--stream", "streams", multiple=True, type=click.Choice(["text", "video"]),
    help="Restrict to stream(s).",
)
def generate(config_path: str, participants: tuple, dates: tuple, streams: tuple) -> None:
    """Run ingest and journal generation for every selected participant-day."""
    config = _load(config_path)
    manifest = generate_run(
        config,
        participants=participants or None,
        dates=dates or None,
        streams=streams or None,
    )
    for result in manifest.results:
        status = "ok    " if result.status == "ok" else "FAILED"
        detail = result.output if result.status == "ok" else result.error
        click.echo(f"{status} {result.participant} {result.date} {result.stream}  {detail}")
    failed = manifest.failed
    click.echo(f"{len(manifest.results) - len(failed)}/{len(manifest.results)} jobs succeeded")
    sys.exit(EXIT_FAILURE if failed else EXIT_OK)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def evaluate(config_path: str) -> None:
    """Score generated journals against ground truth and write the report."""
    config = _load(config_path)
    try:
        report = evaluate_run(config)
    except AutojournalError as exc:
        click.echo(f"evaluation failed: {exc}", err=True)
        sys.exit(EXIT_FAILURE)
    csv_path = config.out_dir / "report.csv"
    report.write_csv(csv_path)
    table = render_table(report)
    (config.out_dir / "report.txt").write_text(table, encoding="utf-8")
    click.echo(table, nl=False)
    click.echo(f"report written to {csv_path}")
    sys.exit(EXIT_OK)


@main.command()
@click.argument("report_csv", type=click.Path(exists=True))
def report(report_csv: str) -> None:
    """Render a previously written report CSV as an aligned score grid."""
    try:
        loaded = EvalReport.read_csv(report_csv)
        click.echo(render_table(loaded), nl=False)
    except MalformedReport as exc:
        click.echo(f"malformed report: {exc}", err=True)
        sys.exit(EXIT_FAILURE)
    sys.exit(EXIT_OK)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--participant", "participants", multiple=True)
@click.option("--date", "dates", multiple=True)
def inspect(config_path: str, participants: tuple, dates: tuple) -> None:
    """Dump ingest statistics per participant-day without any model calls."""
    config = _load(config_path)
    try:
        stats = inspect_run(
            config, participants=participants or None, dates=dates or None
        )
    except AutojournalError as exc:
        click.echo(f"inspect failed: {exc}", err=True)
        sys.exit(EXIT_FAILURE)
    for key, day in stats.items():
        click.echo(
            f"{key}: found={day.total_found} invalid={day.invalid_dropped} "
            f"duplicates={day.duplicates_dropped} retained={day.retained}"
        )
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
