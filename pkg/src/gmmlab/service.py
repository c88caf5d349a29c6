"""FastAPI service wrapping the harness.

Endpoints take pydantic request models and return artifact bundles (the
report plus the named output files as text), so clients decide where the
bytes land. The CLI is one such client; it calls the handler functions
in-process by default or posts to a remote instance of this app.
"""

from __future__ import annotations

from typing import Literal

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .harness import execute_diagnose, execute_run, execute_sweep, execute_toy
from .runspec import ConfigError, RunSpec

__all__ = [
    "app",
    "RunRequest", "ToyRequest", "SweepRequest", "DiagnoseRequest",
    "ArtifactResponse", "HealthResponse",
    "handle_run", "handle_toy", "handle_sweep", "handle_diagnose",
]


class HealthResponse(BaseModel):
    status: str
    version: str


class RunRequest(BaseModel):
    spec: RunSpec
    workers: int = Field(default=1, ge=1)


class ToyRequest(BaseModel):
    seed: int = Field(default=0, ge=0)
    n_chains: int = Field(default=200, ge=1)
    workers: int = Field(default=1, ge=1)


class SweepRequest(BaseModel):
    spec: RunSpec
    zetas: list[float] = Field(min_length=1)


class DiagnoseRequest(BaseModel):
    task: Literal["toy", "bimodal64", "blur256"]
    seed: int = Field(default=0, ge=0)


class ArtifactResponse(BaseModel):
    report: dict
    files: dict[str, str]
    ok: bool = True


def handle_run(req: RunRequest) -> ArtifactResponse:
    art = execute_run(req.spec, workers=req.workers)
    return ArtifactResponse(report=art.report, files=art.files, ok=art.ok)


def handle_toy(req: ToyRequest) -> ArtifactResponse:
    art = execute_toy(seed=req.seed, n_chains=req.n_chains, workers=req.workers)
    return ArtifactResponse(report=art.report, files=art.files, ok=art.ok)


def handle_sweep(req: SweepRequest) -> ArtifactResponse:
    art = execute_sweep(req.spec, req.zetas)
    return ArtifactResponse(report=art.report, files=art.files, ok=art.ok)


def handle_diagnose(req: DiagnoseRequest) -> ArtifactResponse:
    art = execute_diagnose(req.task, seed=req.seed)
    return ArtifactResponse(report=art.report, files=art.files, ok=art.ok)


app = FastAPI(title="gmmlab", version=__version__,
              description="Diffusion-guidance laboratory over Gaussian-"
                          "mixture priors")


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/run", response_model=ArtifactResponse)
def run_endpoint(req: RunRequest) -> ArtifactResponse:
    try:
        return handle_run(req)
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.post("/toy", response_model=ArtifactResponse)
def toy_endpoint(req: ToyRequest) -> ArtifactResponse:
    return handle_toy(req)


@app.post("/sweep", response_model=ArtifactResponse)
def sweep_endpoint(req: SweepRequest) -> ArtifactResponse:
    try:
        return handle_sweep(req)
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.post("/diagnose", response_model=ArtifactResponse)
def diagnose_endpoint(req: DiagnoseRequest) -> ArtifactResponse:
    return handle_diagnose(req)
