"""`lab` command-line client.

A thin client of the service layer: every command builds a request model
and either calls the handler in-process (default) or posts it to a running
service (`--server URL`), then writes the returned files into --out.

Exit codes: 0 success, 2 invalid configuration, 3 diagnostic threshold
failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
from pydantic import ValidationError

from .runspec import ConfigError, RunSpec
from .service import (ArtifactResponse, DiagnoseRequest, RunRequest,
                      SweepRequest, ToyRequest, handle_diagnose, handle_run,
                      handle_sweep, handle_toy)

EXIT_CONFIG = 2
EXIT_THRESHOLD = 3


def _write_bundle(bundle: ArtifactResponse, out: str) -> None:
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, content in bundle.files.items():
        (out_dir / name).write_text(content)
    click.echo(f"wrote {', '.join(sorted(bundle.files))} to {out_dir}")


def _post(server: str, path: str, payload: dict) -> ArtifactResponse:
    import httpx
    resp = httpx.post(server.rstrip("/") + path, json=payload, timeout=600.0)
    if resp.status_code == 422:
        click.echo(f"config error: {resp.json().get('detail')}", err=True)
        sys.exit(EXIT_CONFIG)
    resp.raise_for_status()
    return ArtifactResponse.model_validate(resp.json())


def _load_spec(config_path: str, seed: int | None) -> RunSpec:
    try:
        raw = json.loads(Path(config_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"config error: cannot read {config_path}: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    if seed is not None:
        raw["seed"] = seed
    try:
        return RunSpec.model_validate(raw)
    except ValidationError as exc:
        click.echo(f"config error:\n{exc}", err=True)
        sys.exit(EXIT_CONFIG)


@click.group()
def main() -> None:
    """Analytic diffusion-guidance lab over Gaussian-mixture priors."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", type=int, default=None, help="Override the spec seed.")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--server", default=None, help="Remote service URL.")
def run(config_path: str, out: str, seed: int | None, workers: int,
        server: str | None) -> None:
    """Run the chains configured in a JSON run spec."""
    spec = _load_spec(config_path, seed)
    req = RunRequest(spec=spec, workers=workers)
    try:
        bundle = (_post(server, "/run", req.model_dump()) if server
                  else handle_run(req))
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    _write_bundle(bundle, out)


@main.command()
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--chains", "n_chains", type=int, default=200, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--server", default=None)
def toy(out: str, seed: int, n_chains: int, workers: int,
        server: str | None) -> None:
    """Run the 2-D replication experiment."""
    req = ToyRequest(seed=seed, n_chains=n_chains, workers=workers)
    bundle = (_post(server, "/toy", req.model_dump()) if server
              else handle_toy(req))
    _write_bundle(bundle, out)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--zeta", "zetas", required=True,
              help="Comma-separated step sizes, e.g. 0.05,0.3,1.2,4.8")
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", type=int, default=None)
@click.option("--server", default=None)
def sweep(config_path: str, zetas: str, out: str, seed: int | None,
          server: str | None) -> None:
    """Sweep the guidance step size on a configured task."""
    spec = _load_spec(config_path, seed)
    try:
        values = [float(z) for z in zetas.split(",") if z.strip()]
    except ValueError:
        click.echo(f"config error: bad --zeta list {zetas!r}", err=True)
        sys.exit(EXIT_CONFIG)
    if not values:
        click.echo("config error: --zeta list is empty", err=True)
        sys.exit(EXIT_CONFIG)
    req = SweepRequest(spec=spec, zetas=values)
    try:
        bundle = (_post(server, "/sweep", req.model_dump()) if server
                  else handle_sweep(req))
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    _write_bundle(bundle, out)


@main.command()
@click.option("--task", required=True,
              type=click.Choice(["toy", "bimodal64", "blur256"]))
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--server", default=None)
def diagnose(task: str, out: str, seed: int, server: str | None) -> None:
    """Run the observation/proposition battery; exit 3 on failures."""
    req = DiagnoseRequest(task=task, seed=seed)
    bundle = (_post(server, "/diagnose", req.model_dump()) if server
              else handle_diagnose(req))
    _write_bundle(bundle, out)
    click.echo(bundle.files.get("checks.txt", ""), nl=False)
    if not bundle.ok:
        sys.exit(EXIT_THRESHOLD)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Serve the lab over HTTP."""
    import uvicorn
    uvicorn.run("gmmlab.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
