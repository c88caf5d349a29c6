"""Standard benchmark tasks shipped with the lab.

Three fixed, versioned tasks make the qualitative replications
regression-testable:

* ``toy``       -- 2-D bimodal prior, coordinate-0 inpainting with the
                   norm-exponential likelihood, 100-step Karras /
                   Euler-Ancestral.
* ``bimodal64`` -- d=64 bimodal prior (unit-norm centers, inter-mode
                   distance 2), mask over the first 32 coordinates,
                   Gaussian noise 0.1, 500-step VP / DDPM.
* ``blur256``   -- d=256 (16x16 grid) bimodal prior, circular Gaussian
                   blur, Gaussian noise 0.05, 500-step VP / DDPM.

Observations are generated from a task-internal seed so every task is a
fixed constant across runs and machines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measurement import (GaussianNoise, MeasurementModel, NormExponential,
                          condition_on_measurement)
from .mixture import GaussianMixture, isotropic_mixture
from .operators import gauss_blur_op, mask_op
from .schedules import KarrasSchedule, VpSchedule, make_karras, make_vp_linear

__all__ = ["Task", "get_task", "TASK_NAMES"]

TASK_NAMES = ("toy", "bimodal64", "blur256")

_ZETA_GRID = (0.05, 0.3, 1.2, 4.8)


@dataclass(frozen=True)
class Task:
    """A frozen benchmark configuration plus its posterior mode set."""

    name: str
    prior: GaussianMixture
    schedule: VpSchedule | KarrasSchedule
    solver: str
    meas: MeasurementModel
    zeta: float                      # default guidance step size
    zeta_grid: tuple[float, ...]     # sweep grid
    modes: np.ndarray                # posterior mode locations
    mode_metric: np.ndarray          # per-mode Mahalanobis metric

    @property
    def dim(self) -> int:
        return self.prior.dim


def _bimodal_prior(dim: int, sigma0: float = 0.3) -> GaussianMixture:
    # the toy geometry lifted to d dims: centers at +/-(1,...,1), so the
    # root-mean-square inter-mode distance stays 2 at every d
    center = np.ones(dim)
    return isotropic_mixture([-center, center], sigma0 ** 2)


def _toy_task() -> Task:
    prior = isotropic_mixture([[-1.0, -1.0], [1.0, 1.0]], 0.09)
    schedule = make_karras(100, 0.002, 4.0, 7.0)
    op = mask_op(2, [0])
    meas = MeasurementModel(op, NormExponential(0.05), np.array([0.5]))
    # no closed-form posterior: mode locations/metric come from the prior
    # components (the weak likelihood tilt moves them by < 1e-2)
    return Task(name="toy", prior=prior, schedule=schedule,
                solver="euler_ancestral", meas=meas, zeta=0.05,
                zeta_grid=_ZETA_GRID, modes=prior.means.copy(),
                mode_metric=prior.variances.copy())


def _gaussian_task(name: str, dim: int, operator, sigma_y: float,
                   schedule, solver: str, zeta: float, obs_seed: int) -> Task:
    prior = _bimodal_prior(dim)
    # fixed ground-truth observation: the task is a constant of the library
    rng = np.random.default_rng(obs_seed)
    x_true = prior.sample(1, rng)[0]
    y = operator.apply(x_true) + sigma_y * rng.standard_normal(operator.out_dim)
    meas = MeasurementModel(operator, GaussianNoise(sigma_y), y)
    posterior = condition_on_measurement(prior, meas)
    return Task(name=name, prior=prior, schedule=schedule, solver=solver,
                meas=meas, zeta=zeta, zeta_grid=_ZETA_GRID,
                modes=posterior.means.copy(),
                mode_metric=posterior.covariances.copy())


def get_task(name: str) -> Task:
    if name == "toy":
        return _toy_task()
    if name == "bimodal64":
        return _gaussian_task("bimodal64", 64, mask_op(64, list(range(32))),
                              sigma_y=0.1, schedule=make_vp_linear(500, 1e-4, 0.02),
                              solver="ddpm", zeta=0.03, obs_seed=20240)
    if name == "blur256":
        return _gaussian_task("blur256", 256, gauss_blur_op([16, 16], 7, 1.5),
                              sigma_y=0.05, schedule=make_vp_linear(500, 1e-4, 0.02),
                              solver="ddpm", zeta=0.1, obs_seed=20241)
    raise ValueError(f"unknown task {name!r}; expected one of {TASK_NAMES}")
