"""Command-line entry points: run, report, clean, serve."""

from __future__ import annotations

import os
from pathlib import Path

import click

from .cleaning import clean_pipeline, load_patches, load_training_items
from .evaluation import run_benchmark, score_run, write_report_csv, write_report_json
from .gateway import HttpGateway
from .hints import load_hints
from .model import RunConfig, load_benchmark


def _gateway_from_config(cfg: RunConfig) -> HttpGateway:
    if not cfg.model_endpoint:
        raise click.UsageError("config must set model_endpoint for live runs")
    return HttpGateway(
        endpoint=cfg.model_endpoint,
        model=cfg.model_name,
        api_key=os.environ.get(cfg.api_key_env, ""),
    )


@click.group()
def main() -> None:
    """Natural-language optimization problems to executed solver scripts."""


@main.command()
@click.option("--bench", "bench_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--hints", "hints_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
def run(bench_path: str, config_path: str, hints_path: str, out_dir: str) -> None:
    """Run a benchmark end to end and write traces plus a report."""
    cfg = RunConfig.from_file(config_path)
    bench = load_benchmark(bench_path)
    lib = load_hints(hints_path)
    gateway = _gateway_from_config(cfg)
    try:
        report = run_benchmark(bench, cfg, lib, gateway, out_dir)
    finally:
        gateway.close()
    write_report_json(report, Path(out_dir) / "report.json")
    write_report_csv(report, Path(out_dir) / "report.csv")
    for m, acc in enumerate(report.accuracy_at_turn):
        click.echo(f"turn {m + 1}: {acc:.2f}%")
    for flag in report.flags:
        click.echo(f"note: {flag}")


@main.command()
@click.option("--traces", "traces_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def report(traces_dir: str, out_path: str) -> None:
    """Re-judge a stored run directory and write the report."""
    result = score_run(traces_dir)
    out = Path(out_path)
    if out.suffix == ".csv":
        write_report_csv(result, out)
    else:
        write_report_json(result, out)
    for m, acc in enumerate(result.accuracy_at_turn):
        click.echo(f"turn {m + 1}: {acc:.2f}%")
    for flag in result.flags:
        click.echo(f"note: {flag}")


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--k", "k", default=64, show_default=True, type=int)
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--hints", "hints_path", required=True, type=click.Path())
@click.option("--cap", default=100, show_default=True, type=int)
@click.option("--patches", "patches_path", default=None, type=click.Path(exists=True))
def clean(
    in_path: str,
    out_dir: str,
    k: int,
    config_path: str,
    hints_path: str,
    cap: int,
    patches_path: str | None,
) -> None:
    """Clean a training corpus: balance, regenerate, infill, filter, export."""
    cfg = RunConfig.from_file(config_path).with_overrides(K=k)
    items = load_training_items(in_path)
    lib = load_hints(hints_path)
    patches = load_patches(patches_path) if patches_path else ()
    gateway = _gateway_from_config(cfg)
    try:
        summary = clean_pipeline(items, cfg, lib, gateway, out_dir, cap=cap, patches=patches)
    finally:
        gateway.close()
    for key, value in summary.to_dict().items():
        click.echo(f"{key}: {value}")


@main.command()
@click.option("--traces", "traces_dir", required=True, type=click.Path(exists=True))
@click.option("--hints", "hints_path", required=True, type=click.Path())
@click.option("--port", default=8008, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui", "ui_dir", default=None, type=click.Path(exists=True))
@click.option("--state", "state_dir", default=None, type=click.Path())
def serve(
    traces_dir: str,
    hints_path: str,
    port: int,
    host: str,
    ui_dir: str | None,
    state_dir: str | None,
) -> None:
    """Serve the triage API (and UI, when built) over HTTP."""
    import uvicorn

    from .service import create_app

    app = create_app(traces_dir, hints_path, state_dir=state_dir, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
