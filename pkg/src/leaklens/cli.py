"""Command-line interface.

Every data-processing command is a thin client over the pipeline stages;
the serve commands host the review API and the mock token service.  The
config path comes from ``--config`` or the ``LEAKLENS_CONFIG`` environment
variable.
"""

from __future__ import annotations

import ipaddress
import json
import logging
import sys
from pathlib import Path

import click

from .config import ConfigError, load_config
from .pipeline import Pipeline, PipelineError

logger = logging.getLogger(__name__)

_LOOPBACK_NAMES = {"localhost"}


def _require_loopback(host: str) -> None:
    if host in _LOOPBACK_NAMES:
        return
    try:
        if ipaddress.ip_address(host).is_loopback:
            return
    except ValueError:
        pass
    raise click.UsageError(
        f"refusing to bind {host!r}: this service is loopback-only (no auth)")


def _pipeline(config_path: str | None) -> Pipeline:
    try:
        return Pipeline(load_config(config_path))
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc


def _run_stage(config_path: str | None, stage: str) -> dict:
    pipeline = _pipeline(config_path)
    try:
        outcome = pipeline.run_stage(stage, force=True)
    except PipelineError as exc:
        raise click.ClickException(str(exc)) from exc
    _echo_summary(stage, outcome.summary)
    return outcome.summary


def _echo_summary(stage: str, summary: dict) -> None:
    click.echo(f"[{stage}] " + json.dumps(summary, ensure_ascii=False, sort_keys=True))


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Audit config JSON (defaults to $LEAKLENS_CONFIG).")
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, verbose: bool) -> None:
    """Audit toolkit for PII exposure behind SMS-delivered links."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    ctx.obj = config_path


@main.command()
@click.pass_obj
def ingest(config_path: str | None) -> None:
    """Ingest the message corpus and derive the unique URL table."""
    _run_stage(config_path, "ingest")


@main.group(invoke_without_command=True)
@click.pass_context
def bundles(ctx: click.Context) -> None:
    """Register crawl bundles and deduplicate UI images."""
    if ctx.invoked_subcommand is None:
        _run_stage(ctx.obj, "bundles")


@bundles.command("ingest")
@click.pass_obj
def bundles_ingest(config_path: str | None) -> None:
    """Register bundle manifests from the configured capture directories."""
    _run_stage(config_path, "bundles")


@bundles.command("dedup")
@click.pass_obj
def bundles_dedup(config_path: str | None) -> None:
    """Re-run UI image deduplication over registered bundles."""
    from .capture import BundleStore

    pipeline = _pipeline(config_path)
    store = BundleStore(pipeline.workspace.root)
    result = store.dedup_ui()
    _echo_summary("dedup", {
        "retained": len(result.retained),
        "ui_duplicates": len(result.duplicates),
        "warnings": result.warnings,
    })


@main.command()
@click.pass_obj
def extract(config_path: str | None) -> None:
    """Extract candidate JSON payloads from bundle artifacts."""
    _run_stage(config_path, "extract")


@main.command()
@click.pass_obj
def screen(config_path: str | None) -> None:
    """Run hierarchical PII screening and routing over all bundles."""
    summary = _run_stage(config_path, "screen")
    if summary.get("pending"):
        click.echo(f"{len(summary['pending'])} items await review "
                   "(leaklens triage serve)")


@main.group()
def triage() -> None:
    """Human review of flagged items."""


@triage.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8400, show_default=True, type=int)
@click.pass_obj
def triage_serve(config_path: str | None, host: str, port: int) -> None:
    """Serve the review API (loopback only)."""
    import uvicorn

    from .service import create_app

    _require_loopback(host)
    pipeline = _pipeline(config_path)
    app = create_app(pipeline.workspace.root)
    click.echo(f"review API on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.pass_obj
def analyze(config_path: str | None) -> None:
    """Run post-validation analyses over the validated set."""
    _run_stage(config_path, "analyze")


@main.command()
@click.pass_obj
def report(config_path: str | None) -> None:
    """Aggregate analyses into report.csv / report.json / report.txt."""
    _run_stage(config_path, "report")


@main.group()
def mock() -> None:
    """Synthetic token service for enumeration experiments."""


@mock.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8500, show_default=True, type=int)
@click.pass_obj
def mock_serve(config_path: str | None, host: str, port: int) -> None:
    """Serve the mock token space from the config's mock section."""
    import uvicorn

    from .mock import create_mock_app
    from .tokens import TokenSpace

    _require_loopback(host)
    pipeline = _pipeline(config_path)
    if not pipeline.config.mock.get("space_size"):
        raise click.UsageError("config has no mock token space (mock.space_size)")
    space = TokenSpace.from_config(pipeline.config.mock)
    app = create_mock_app(space)
    click.echo(f"mock token service on http://{host}:{port} "
               f"(space {space.space_size}, occupied {len(space.occupied)})")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--skip-labels", is_flag=True,
              help="Generate without scripted reviews, leaving items for live triage.")
def demo(out_dir: str, skip_labels: bool) -> None:
    """Generate the synthetic demonstration corpus and run the full pipeline."""
    from .fixtures import generate_demo

    info = generate_demo(out_dir, include_labels=not skip_labels)
    click.echo(f"demo corpus: {info['bundles']} bundles across "
               f"{info['services']} services, {info['messages']} messages")
    pipeline = _pipeline(info["config_path"])
    for stage in ("ingest", "bundles", "extract", "screen"):
        outcome = pipeline.run_stage(stage, force=True)
        _echo_summary(stage, outcome.summary)
    if pipeline.workspace.read_state()["stages"]["screen"]["summary"].get("pending"):
        click.echo("review items pending; resolve them via the triage API, "
                   "then run analyze and report")
        return
    for stage in ("analyze", "report"):
        outcome = pipeline.run_stage(stage, force=True)
        _echo_summary(stage, outcome.summary)
    click.echo(f"report: {pipeline.workspace.report_dir}")


if __name__ == "__main__":
    sys.exit(main())
