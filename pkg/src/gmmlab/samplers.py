"""Reverse-process steppers and exact score sources.

Steppers are pure given the noise draw: each accepts an explicit `eps`
(used by the chain runners, which own per-chain generators) or an `rng`
to draw from. All of them are vectorized over a leading chain axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffusion import diffuse
from .measurement import (MeasurementModel, ParticleConditional,
                          condition_on_measurement)
from .mixture import GaussianMixture
from .schedules import KarrasSchedule, VpSchedule

__all__ = [
    "StepResult",
    "ExactScore",
    "ConditionalScore",
    "ParticleScore",
    "BlendedScore",
    "ddpm_step",
    "ddim_step",
    "euler_ancestral_step",
    "chain_generators",
    "draw_initial_state",
    "run_unconditional",
    "UnconditionalRun",
    "SOLVERS",
    "validate_solver",
]

SOLVERS = ("ddpm", "ddim", "euler_ancestral")
CHAIN_BATCH = 64  # fixed batch: membership depends only on the chain index


def validate_solver(solver: str, schedule) -> None:
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}; expected one of {SOLVERS}")
    if solver in ("ddpm", "ddim") and not isinstance(schedule, VpSchedule):
        raise ValueError(f"solver {solver!r} requires a VP schedule")
    if solver == "euler_ancestral" and not isinstance(schedule, KarrasSchedule):
        raise ValueError("euler_ancestral requires a Karras schedule")


# ----------------------------------------------------------------------
# Score sources: (x, index) -> score, with per-index mixture caching
# ----------------------------------------------------------------------

class ExactScore:
    """Exact unconditional score: the diffused prior's score at the index."""

    def __init__(self, prior: GaussianMixture, schedule):
        self.prior = prior
        self.schedule = schedule
        self._cache: dict[int, GaussianMixture] = {}

    def _marginal(self, idx: int) -> GaussianMixture:
        mix = self._cache.get(idx)
        if mix is None:
            mix = diffuse(self.prior, self.schedule.scaling_at(idx))
            self._cache[idx] = mix
        return mix

    def __call__(self, x: np.ndarray, idx: int) -> np.ndarray:
        return self._marginal(idx).score(x)


class ConditionalScore(ExactScore):
    """Exact conditional score: diffuse the conditioned prior instead."""

    def __init__(self, prior: GaussianMixture, meas: MeasurementModel, schedule):
        super().__init__(condition_on_measurement(prior, meas), schedule)


class ParticleScore:
    """Particle-approximate conditional score (non-Gaussian likelihoods)."""

    def __init__(self, particles: ParticleConditional, schedule):
        self.particles = particles
        self.schedule = schedule

    def __call__(self, x: np.ndarray, idx: int) -> np.ndarray:
        return self.particles.score(self.schedule.scaling_at(idx), x)


class BlendedScore:
    """(1 - lam) * conditional + lam * unconditional score."""

    def __init__(self, conditional, unconditional, lam: float):
        if not 0.0 <= lam <= 1.0:
            raise ValueError("blend weight must lie in [0, 1]")
        self.conditional = conditional
        self.unconditional = unconditional
        self.lam = lam

    def __call__(self, x: np.ndarray, idx: int) -> np.ndarray:
        if self.lam == 1.0:
            return self.unconditional(x, idx)
        if self.lam == 0.0:
            return self.conditional(x, idx)
        return ((1.0 - self.lam) * self.conditional(x, idx)
                + self.lam * self.unconditional(x, idx))


# ----------------------------------------------------------------------
# Steppers
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class StepResult:
    """One reverse transition: x = mu + sigma * eps with the eps drawn."""

    x: np.ndarray
    mu: np.ndarray
    sigma: float
    eps: np.ndarray


def _get_eps(shape, rng, eps):
    if eps is not None:
        return np.asarray(eps, dtype=float)
    if rng is None:
        raise ValueError("provide either rng or eps")
    return rng.standard_normal(shape)


def ddpm_step(score_src, schedule: VpSchedule, t: int, x_t: np.ndarray,
              rng: np.random.Generator | None = None,
              eps: np.ndarray | None = None) -> StepResult:
    """Ancestral step: mu = (x + beta_t * s)/sqrt(alpha_t); x' = mu + sigma_t eps."""
    if t < 1:
        raise ValueError("ddpm_step needs t >= 1")
    x = np.asarray(x_t, dtype=float)
    tp = schedule.transition_params(t)
    s = score_src(x, t)
    mu = tp.mean_coeff * x + tp.score_coeff * s
    e = _get_eps(x.shape, rng, eps)
    return StepResult(x=mu + tp.sigma_trans * e, mu=mu, sigma=tp.sigma_trans, eps=e)


def ddim_step(score_src, schedule: VpSchedule, t: int, x_t: np.ndarray) -> np.ndarray:
    """Deterministic (eta = 0) step via the denoised estimate and noise direction."""
    if t < 1:
        raise ValueError("ddim_step needs t >= 1")
    x = np.asarray(x_t, dtype=float)
    abar_t = schedule.alpha_bars[t]
    abar_prev = schedule.alpha_bars[t - 1]
    s = score_src(x, t)
    x0_hat = (x + (1.0 - abar_t) * s) / np.sqrt(abar_t)
    eps_hat = -np.sqrt(1.0 - abar_t) * s
    return np.sqrt(abar_prev) * x0_hat + np.sqrt(1.0 - abar_prev) * eps_hat


def euler_ancestral_step(score_src, schedule: KarrasSchedule, i: int,
                         x: np.ndarray, rng: np.random.Generator | None = None,
                         eps: np.ndarray | None = None) -> StepResult:
    """Euler-ancestral transition from grid level i-1 down to level i."""
    if i < 1:
        raise ValueError("euler_ancestral_step needs i >= 1")
    xx = np.asarray(x, dtype=float)
    tp = schedule.transition_params(i)
    s_cur = float(schedule.sigmas[i - 1])
    s = score_src(xx, i - 1)
    x0_hat = xx + s_cur ** 2 * s  # VE Tweedie (a = 1)
    drift = (xx - x0_hat) / s_cur
    mu = xx + drift * (tp.sigma_down - s_cur)
    e = _get_eps(xx.shape, rng, eps)
    return StepResult(x=mu + tp.sigma_up * e, mu=mu, sigma=tp.sigma_up, eps=e)


# ----------------------------------------------------------------------
# Chain runner
# ----------------------------------------------------------------------

def chain_generators(seed: int, chain_indices) -> list[np.random.Generator]:
    """Independent per-chain generators; a pure function of (seed, index)."""
    root = np.random.SeedSequence(seed)
    children = root.spawn(max(chain_indices) + 1) if len(chain_indices) else []
    return [np.random.default_rng(children[i]) for i in chain_indices]


def _stacked_normal(rngs: list[np.random.Generator], dim: int) -> np.ndarray:
    return np.stack([r.standard_normal(dim) for r in rngs])


def draw_initial_state(schedule, dim: int, rngs: list[np.random.Generator]) -> np.ndarray:
    """x_T ~ N(0, I) on VP chains, N(0, sigma_max^2 I) on VE chains."""
    eps = _stacked_normal(rngs, dim)
    if isinstance(schedule, VpSchedule):
        return eps
    return schedule.sigma_max * eps


def chain_batches(n_chains: int) -> list[list[int]]:
    """Fixed-size chain batches; membership depends only on the chain index,
    never on the worker count."""
    return [list(range(s, min(s + CHAIN_BATCH, n_chains)))
            for s in range(0, n_chains, CHAIN_BATCH)]


def map_batches(n_chains: int, fn, workers: int = 1) -> list:
    """Apply fn(chain_indices) per batch, optionally across threads; results
    come back in batch order so merges are worker-count independent."""
    batches = chain_batches(n_chains)
    if workers <= 1:
        return [fn(b) for b in batches]
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, batches))


@dataclass
class UnconditionalRun:
    samples: np.ndarray                    # (n, d) terminal states
    trajectories: np.ndarray | None = None  # (n, n_steps + 1, d)


def run_unconditional(score_src, schedule, solver: str, n_chains: int, seed: int,
                      dim: int, keep_trajectories: bool = False,
                      workers: int = 1) -> UnconditionalRun:
    """Run n independent reverse chains; chain c is a pure function of
    (config, seed, c), so batching and worker counts cannot change results."""
    validate_solver(solver, schedule)
    if n_chains < 1:
        raise ValueError("n_chains must be >= 1")
    n_steps = schedule.n_steps
    samples = np.empty((n_chains, dim))
    traj = np.empty((n_chains, n_steps + 1, dim)) if keep_trajectories else None

    def one_batch(idx: list[int]) -> None:
        rngs = chain_generators(seed, idx)
        x = draw_initial_state(schedule, dim, rngs)
        if traj is not None:
            traj[idx, 0] = x
        for pos, step in enumerate(schedule.step_indices()):
            if solver == "ddpm":
                x = ddpm_step(score_src, schedule, step, x,
                              eps=_stacked_normal(rngs, dim)).x
            elif solver == "euler_ancestral":
                x = euler_ancestral_step(score_src, schedule, step, x,
                                         eps=_stacked_normal(rngs, dim)).x
            else:  # ddim
                x = ddim_step(score_src, schedule, step, x)
            if traj is not None:
                traj[idx, pos + 1] = x
        samples[idx] = x

    map_batches(n_chains, one_batch, workers)
    return UnconditionalRun(samples=samples, trajectories=traj)
