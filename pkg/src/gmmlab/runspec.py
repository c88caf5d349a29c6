"""Run configuration: pydantic models for the JSON config schema plus
builders that turn a validated spec into live lab objects.

The whole spec is validated before any computation; cross-field problems
(dimension mismatches, inconsistent solver/schedule/method combinations)
are reported with the offending field path.
"""

from __future__ import annotations

from typing import Literal, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .guidance import GuidanceConfig
from .measurement import GaussianNoise, MeasurementModel, NormExponential
from .mixture import GaussianMixture
from .operators import operator_from_dict
from .schedules import schedule_from_dict

__all__ = ["RunSpec", "ConfigError", "build_run_objects"]


class ConfigError(ValueError):
    """Invalid run configuration; carries the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class IsoCov(BaseModel):
    type: Literal["iso"]
    value: float = Field(gt=0)


class DenseCov(BaseModel):
    type: Literal["dense"]
    value: list[list[float]]


class ComponentSpec(BaseModel):
    weight: float = Field(gt=0)
    mean: list[float]
    cov: Union[IsoCov, DenseCov] = Field(discriminator="type")


class PriorSpec(BaseModel):
    dim: int = Field(ge=1)
    components: list[ComponentSpec] = Field(min_length=1)


class VpScheduleSpec(BaseModel):
    kind: Literal["vp_linear"]
    T: int = Field(default=500, ge=1)
    beta: tuple[float, float] = (1e-4, 0.02)


class KarrasScheduleSpec(BaseModel):
    kind: Literal["karras"]
    N: int = Field(default=100, ge=2)
    sigma_max: float = Field(default=4.0, gt=0)
    sigma_min: float = Field(default=0.002, gt=0)
    rho: float = Field(default=7.0, gt=0)


class MaskOpSpec(BaseModel):
    kind: Literal["mask"]
    keep: list[int] = Field(min_length=1)


class DownsampleOpSpec(BaseModel):
    kind: Literal["downsample"]
    factor: int = Field(ge=1)
    grid: list[int] | None = None


class BlurOpSpec(BaseModel):
    kind: Literal["gauss_blur"]
    size: int = Field(ge=1)
    intensity: float = Field(ge=0)
    grid: list[int] | None = None


class QuadOpSpec(BaseModel):
    kind: Literal["quad"]
    seed: int = 0
    c: float = 0.5
    out_dim: int | None = None


OperatorSpec = Union[MaskOpSpec, DownsampleOpSpec, BlurOpSpec, QuadOpSpec]


class GaussianLikSpec(BaseModel):
    kind: Literal["gaussian"]
    sigma_y: float = Field(ge=0)


class NormExpLikSpec(BaseModel):
    kind: Literal["norm_exponential"]
    zeta_like: float = Field(gt=0)


class GuidanceSpec(BaseModel):
    method: Literal["dps", "dsg", "dmap", "freedom", "resample", "psld",
                    "cse_dps", "cse_dmap"]
    zeta: float | list[float] = 0.05
    K: int = Field(default=1, ge=1)
    dsg_mix: float = Field(default=1.0, ge=0, le=1)
    gamma: float = Field(default=0.0, ge=0)
    eta: float = Field(default=1.0, ge=0)
    resample_every: int = Field(default=10, ge=1)
    resample_inner: int = Field(default=50, ge=1)
    travel_window: tuple[int, int] = (100, 250)
    travel_reps: int = Field(default=2, ge=1)
    cse_lambda: float = Field(default=0.5, ge=0, le=1)
    normalize_step: bool = False


class OutputToggles(BaseModel):
    samples: bool = True
    curves: bool = True


class RunSpec(BaseModel):
    """The whole run configuration, validated as one unit."""

    prior: PriorSpec
    schedule: Union[VpScheduleSpec, KarrasScheduleSpec] = Field(discriminator="kind")
    solver: Literal["ddpm", "ddim", "euler_ancestral"]
    operator: OperatorSpec = Field(discriminator="kind")
    likelihood: Union[GaussianLikSpec, NormExpLikSpec] = Field(discriminator="kind")
    y: list[float]
    guidance: GuidanceSpec | None = None
    n_chains: int = Field(default=100, ge=1)
    seed: int = Field(default=0, ge=0)
    outputs: OutputToggles = OutputToggles()

    @model_validator(mode="after")
    def _component_dims(self):
        for i, comp in enumerate(self.prior.components):
            if len(comp.mean) != self.prior.dim:
                raise ValueError(
                    f"prior.components[{i}].mean: has dim {len(comp.mean)}, "
                    f"prior.dim is {self.prior.dim}")
        if self.solver in ("ddpm", "ddim") and self.schedule.kind != "vp_linear":
            raise ValueError(f"solver: {self.solver!r} needs a vp_linear schedule")
        if self.solver == "euler_ancestral" and self.schedule.kind != "karras":
            raise ValueError("solver: euler_ancestral needs a karras schedule")
        return self


def build_run_objects(spec: RunSpec):
    """Construct (prior, schedule, operator, measurement, guidance) from a
    validated spec, re-raising construction failures with field paths."""
    try:
        prior = GaussianMixture.from_dict(spec.prior.model_dump())
    except ValueError as exc:
        raise ConfigError("prior", str(exc)) from exc
    try:
        schedule = schedule_from_dict(spec.schedule.model_dump())
    except ValueError as exc:
        raise ConfigError("schedule", str(exc)) from exc
    try:
        operator = operator_from_dict(spec.operator.model_dump(), prior.dim)
    except (ValueError, KeyError) as exc:
        raise ConfigError("operator", str(exc)) from exc
    if spec.likelihood.kind == "gaussian":
        likelihood = GaussianNoise(spec.likelihood.sigma_y)
    else:
        likelihood = NormExponential(spec.likelihood.zeta_like)
    try:
        meas = MeasurementModel(operator, likelihood, np.asarray(spec.y, dtype=float))
    except ValueError as exc:
        raise ConfigError("y", str(exc)) from exc
    guidance = None
    if spec.guidance is not None:
        g = spec.guidance
        zeta = tuple(g.zeta) if isinstance(g.zeta, list) else g.zeta
        try:
            guidance = GuidanceConfig(
                method=g.method, zeta=zeta, K=g.K, dsg_mix=g.dsg_mix,
                gamma=g.gamma, eta=g.eta, resample_every=g.resample_every,
                resample_inner=g.resample_inner,
                travel_window=tuple(g.travel_window),
                travel_reps=g.travel_reps, cse_lambda=g.cse_lambda,
                normalize_step=g.normalize_step)
        except ValueError as exc:
            raise ConfigError("guidance", str(exc)) from exc
    return prior, schedule, operator, meas, guidance
