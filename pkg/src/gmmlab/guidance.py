"""Guided reverse-process samplers.

Every method decorates an ancestral transition with a measurement-residual
update. The residual objective is the un-squared norm ||f(E[X0|x]) - y||
exactly as the update rules use it; its gradient is undefined at zero
residual, so it is clamped to 0 below 1e-12.

Methods:

* ``dps``      -- one gradient step, evaluated at the pre-transition state.
* ``dsg``      -- gradient direction rescaled and projected onto the
                  transition sphere of radius sqrt(d)*sigma.
* ``dmap``     -- K gradient steps at the running iterate, each followed by
                  projection onto the sphere.
* ``freedom``  -- dps plus re-noise/repeat passes inside a step window.
* ``resample`` -- dps plus periodic hard data-consistency optimization
                  with stochastic re-mixing.
* ``psld``     -- dps plus a gluing gradient (linear operators only).
* ``cse_dps`` / ``cse_dmap`` -- the transition draw comes from a blended
                  (conditional/unconditional) score before the dps or dmap
                  update.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diffusion import DiffusionScaling, diffuse, posterior_mean, posterior_mean_vjp
from .measurement import MeasurementModel
from .mixture import GaussianMixture
from .samplers import (BlendedScore, ConditionalScore, ExactScore, StepResult,
                       chain_generators, ddim_step, ddpm_step,
                       draw_initial_state, euler_ancestral_step, map_batches,
                       validate_solver)
from .schedules import KarrasSchedule, VpSchedule

__all__ = [
    "GuidanceConfig",
    "GuidedState",
    "measurement_gradient",
    "spherical_project",
    "dps_step",
    "dps_effective_score",
    "DpsEffectiveScore",
    "dsg_step",
    "dmap_step",
    "psld_step",
    "resample_step",
    "cse_transition",
    "run_guided",
    "GuidedRun",
]

_RESIDUAL_CLAMP = 1e-12

METHODS = ("dps", "dsg", "dmap", "freedom", "resample", "psld",
           "cse_dps", "cse_dmap")


@dataclass(frozen=True)
class GuidanceConfig:
    """Method selector and hyperparameters for guided sampling."""

    method: str
    zeta: float | tuple[float, ...] = 0.05
    K: int = 1
    dsg_mix: float = 1.0
    gamma: float = 0.0
    eta: float = 1.0
    resample_every: int = 10
    resample_inner: int = 50
    travel_window: tuple[int, int] = (100, 250)
    travel_reps: int = 2
    cse_lambda: float = 0.5
    normalize_step: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        zetas = self.zeta if isinstance(self.zeta, tuple) else (self.zeta,)
        if any(z < 0 for z in zetas):
            raise ValueError("zeta must be >= 0")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not 0.0 <= self.dsg_mix <= 1.0:
            raise ValueError("dsg_mix must lie in [0, 1]")
        if not 0.0 <= self.cse_lambda <= 1.0:
            raise ValueError("cse_lambda must lie in [0, 1]")
        if self.gamma < 0 or self.eta < 0:
            raise ValueError("gamma and eta must be >= 0")
        if self.resample_every < 1 or self.resample_inner < 1:
            raise ValueError("resample parameters must be >= 1")
        if self.travel_reps < 1:
            raise ValueError("travel_reps must be >= 1")

    def zeta_at(self, pos: int, n_steps: int) -> float:
        """Step size at chronological position pos (0 = noisiest step)."""
        if isinstance(self.zeta, tuple):
            if len(self.zeta) != n_steps:
                raise ValueError(f"zeta schedule has {len(self.zeta)} entries "
                                 f"for {n_steps} steps")
            return self.zeta[pos]
        return self.zeta


@dataclass(frozen=True)
class GuidedState:
    """A sampler transition, before guidance: x = mu + sigma * eps."""

    x_source: np.ndarray   # pre-transition state (x_t)
    x: np.ndarray          # drawn next state (x_{t-1})
    step: int              # transition index into the schedule
    mu: np.ndarray         # transition mean
    sigma: float           # transition noise scale
    residual: float | np.ndarray = np.nan


# ----------------------------------------------------------------------
# Gradient of the measurement objective
# ----------------------------------------------------------------------

def measurement_gradient(prior: GaussianMixture, scaling: DiffusionScaling,
                         meas: MeasurementModel, x: np.ndarray
                         ) -> tuple[np.ndarray, np.ndarray | float]:
    """Gradient of x -> ||f(E[X0|x]) - y|| by the chain rule, plus the residual.

    Zero-residual rows get a zero gradient (clamped singularity).
    """
    xx = np.asarray(x, dtype=float)
    single = xx.ndim == 1
    xb = xx[None, :] if single else xx
    x0_hat = posterior_mean(prior, scaling, xb)
    r = meas.operator.apply(x0_hat) - meas.y
    rnorm = np.linalg.norm(r, axis=-1)
    safe = np.maximum(rnorm, _RESIDUAL_CLAMP)
    rhat = r / safe[:, None]
    v = meas.operator.jacobian_t_apply(x0_hat, rhat)
    grad = posterior_mean_vjp(prior, scaling, xb, v)
    grad[rnorm < _RESIDUAL_CLAMP] = 0.0
    if single:
        return grad[0], float(rnorm[0])
    return grad, rnorm


def _step_scale(config: GuidanceConfig, zeta: float,
                residual: np.ndarray | float) -> np.ndarray | float:
    if not config.normalize_step:
        return zeta
    return zeta / np.maximum(residual, _RESIDUAL_CLAMP)


# ----------------------------------------------------------------------
# Individual method updates
# ----------------------------------------------------------------------

def dps_step(state: GuidedState, config: GuidanceConfig, prior: GaussianMixture,
             scaling: DiffusionScaling, meas: MeasurementModel,
             rng: np.random.Generator | None = None,
             zeta: float | None = None) -> np.ndarray:
    """x_{t-1} minus zeta times the gradient taken at the source state x_t."""
    z = config.zeta if zeta is None else zeta
    grad, resid = measurement_gradient(prior, scaling, meas, state.x_source)
    scale = _step_scale(config, z, resid)
    if np.ndim(scale) > 0:
        scale = np.asarray(scale)[..., None]
    return state.x - scale * grad


def dps_effective_score(prior: GaussianMixture, schedule: VpSchedule,
                        meas: MeasurementModel, config: GuidanceConfig,
                        x_t: np.ndarray, t: int,
                        zeta: float | None = None) -> np.ndarray:
    """Score whose DDPM chain reproduces dps_step:
    s_uncond - (sqrt(alpha_t)/beta_t) * zeta * grad. VP schedules only."""
    if not isinstance(schedule, VpSchedule):
        raise ValueError("the effective-score form is specific to VP schedules")
    z = config.zeta if zeta is None else zeta
    scaling = schedule.scaling_at(t)
    s = diffuse(prior, scaling).score(np.asarray(x_t, dtype=float))
    grad, resid = measurement_gradient(prior, scaling, meas, x_t)
    scale = _step_scale(config, z, resid)
    if np.ndim(scale) > 0:
        scale = np.asarray(scale)[..., None]
    coeff = np.sqrt(schedule.alpha(t)) / schedule.beta(t)
    return s - coeff * scale * grad


class DpsEffectiveScore:
    """Score-source wrapper so plain samplers can run the guided chain."""

    def __init__(self, prior: GaussianMixture, schedule: VpSchedule,
                 meas: MeasurementModel, config: GuidanceConfig):
        self.prior, self.schedule, self.meas, self.config = prior, schedule, meas, config

    def __call__(self, x: np.ndarray, idx: int) -> np.ndarray:
        return dps_effective_score(self.prior, self.schedule, self.meas,
                                   self.config, x, idx)


def spherical_project(x: np.ndarray, mu: np.ndarray, radius: float,
                      rng: np.random.Generator | None = None) -> np.ndarray:
    """mu + radius * (x - mu)/||x - mu||; at ||x-mu|| < 1e-12 a fresh random
    unit direction is used (seeded via rng)."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    xx = np.asarray(x, dtype=float)
    single = xx.ndim == 1
    xb = np.atleast_2d(xx)
    mub = np.broadcast_to(np.asarray(mu, dtype=float), xb.shape)
    diff = xb - mub
    norms = np.linalg.norm(diff, axis=-1)
    degenerate = norms < 1e-12
    if np.any(degenerate):
        if rng is None:
            raise ValueError("projection from the center needs an rng for "
                             "the fallback direction")
        fresh = rng.standard_normal((int(degenerate.sum()), xb.shape[1]))
        fresh /= np.linalg.norm(fresh, axis=-1, keepdims=True)
        diff = diff.copy()
        norms = norms.copy()
        diff[degenerate] = fresh
        norms[degenerate] = 1.0
    out = mub + radius * diff / norms[:, None]
    return out[0] if single else out


def dsg_step(state: GuidedState, config: GuidanceConfig, prior: GaussianMixture,
             scaling: DiffusionScaling, meas: MeasurementModel,
             rng: np.random.Generator | None = None) -> np.ndarray:
    """Mix the rescaled gradient direction with the ancestral noise and
    project the sum onto the sphere of radius sqrt(d)*sigma around mu."""
    d = state.mu.shape[-1]
    sigma = state.sigma
    if sigma == 0.0:
        return np.array(state.mu, copy=True)
    grad, _ = measurement_gradient(prior, scaling, meas, state.x_source)
    gb = np.atleast_2d(grad)
    mub = np.atleast_2d(state.mu)
    # the ancestral draw supplies the noise term: eps = x - mu ~ N(0, sigma^2 I)
    noise = np.atleast_2d(state.x) - mub
    gnorm = np.linalg.norm(gb, axis=-1, keepdims=True)
    u_star = np.where(gnorm > 0, -np.sqrt(d) * sigma * gb / np.maximum(gnorm, 1e-300), 0.0)
    u_mix = noise + config.dsg_mix * (u_star - noise)
    out = spherical_project(mub + u_mix, mub, np.sqrt(d) * sigma, rng)
    return out[0] if np.asarray(state.x).ndim == 1 else out


def dmap_step(state: GuidedState, config: GuidanceConfig, prior: GaussianMixture,
              target_scaling: DiffusionScaling, meas: MeasurementModel,
              rng: np.random.Generator | None = None,
              zeta: float | None = None, project: bool = True) -> np.ndarray:
    """K gradient steps on the running x_{t-1} iterate, each followed by
    projection onto the sphere (mu, sqrt(d)*sigma). The gradient uses the
    target-time scaling since the iterate lives at t-1."""
    z = config.zeta if zeta is None else zeta
    d = state.mu.shape[-1]
    radius = np.sqrt(d) * state.sigma
    x = np.array(state.x, copy=True)
    for _ in range(config.K):
        grad, resid = measurement_gradient(prior, target_scaling, meas, x)
        scale = _step_scale(config, z, resid)
        if np.ndim(scale) > 0:
            scale = np.asarray(scale)[..., None]
        x = x - scale * grad
        if project:
            x = spherical_project(x, state.mu, radius, rng)
    return x


def psld_step(state: GuidedState, config: GuidanceConfig, prior: GaussianMixture,
              scaling: DiffusionScaling, meas: MeasurementModel,
              rng: np.random.Generator | None = None,
              zeta: float | None = None) -> np.ndarray:
    """dps_step plus the gluing term gamma * grad ||A^T A x0_hat - A^T y||."""
    if not meas.operator.linear:
        raise ValueError("the gluing update applies to linear operators only")
    x = dps_step(state, config, prior, scaling, meas, rng, zeta=zeta)
    if config.gamma == 0.0:
        return x
    glue = gluing_gradient(prior, scaling, meas, state.x_source)
    return x - config.gamma * glue


def gluing_gradient(prior: GaussianMixture, scaling: DiffusionScaling,
                    meas: MeasurementModel, x: np.ndarray) -> np.ndarray:
    """grad_x ||A^T A x0_hat(x) - A^T y|| (the identity-codec gluing residual)."""
    if not meas.operator.linear:
        raise ValueError("gluing gradient needs a linear operator")
    a = meas.operator
    xx = np.asarray(x, dtype=float)
    single = xx.ndim == 1
    xb = xx[None, :] if single else xx
    x0_hat = posterior_mean(prior, scaling, xb)
    r = a.transpose_apply(a.apply(x0_hat)) - a.transpose_apply(np.broadcast_to(meas.y, (xb.shape[0], meas.y.shape[0])))
    rnorm = np.linalg.norm(r, axis=-1)
    safe = np.maximum(rnorm, _RESIDUAL_CLAMP)
    rhat = r / safe[:, None]
    v = a.transpose_apply(a.apply(rhat))  # (A^T A)^T rhat
    grad = posterior_mean_vjp(prior, scaling, xb, v)
    grad[rnorm < _RESIDUAL_CLAMP] = 0.0
    return grad[0] if single else grad


def resample_step(state: GuidedState, config: GuidanceConfig,
                  prior: GaussianMixture, schedule: VpSchedule, t: int,
                  meas: MeasurementModel, rng: np.random.Generator,
                  eps: np.ndarray | None = None) -> np.ndarray:
    """Hard data-consistency step: gradient descent on 1/2||y - f(x)||^2 from
    the denoised estimate, then a stochastic mix back to time t-1."""
    if not isinstance(schedule, VpSchedule):
        raise ValueError("resample steps are defined for VP schedules")
    scaling = schedule.scaling_at(t)
    xb = np.atleast_2d(np.asarray(state.x_source, dtype=float))
    x0_hat = posterior_mean(prior, scaling, xb)
    x_star = x0_hat.copy()
    zeta = config.zeta if not isinstance(config.zeta, tuple) else config.zeta[0]
    for _ in range(config.resample_inner):
        r = meas.operator.apply(x_star) - meas.y
        x_star = x_star - zeta * meas.operator.jacobian_t_apply(x_star, r)
    a_prev = float(np.sqrt(schedule.alpha_bars[t - 1]))
    s_marg2 = float(1.0 - schedule.alpha_bars[t])
    eta = config.eta
    mix = (eta * a_prev * x0_hat + s_marg2 * x_star) / (eta + s_marg2)
    noise_var = eta * s_marg2 / (eta + s_marg2)
    e = rng.standard_normal(xb.shape) if eps is None else np.atleast_2d(eps)
    out = mix + np.sqrt(noise_var) * e
    return out[0] if np.asarray(state.x_source).ndim == 1 else out


def cse_transition(prior: GaussianMixture, meas: MeasurementModel,
                   schedule: VpSchedule, t: int, config: GuidanceConfig,
                   x_t: np.ndarray, rng: np.random.Generator | None = None,
                   eps: np.ndarray | None = None,
                   blended=None) -> StepResult:
    """Transition drawn from the blended-score approximate conditional
    q(X_{t-1}|x_t, y): lambda = 0 is the exact conditional, 1 the
    unconditional."""
    if not meas.gaussian:
        raise ValueError("blended conditional transitions need Gaussian "
                         "measurement noise (no closed-form reference otherwise)")
    if blended is None:
        blended = BlendedScore(ConditionalScore(prior, meas, schedule),
                               ExactScore(prior, schedule), config.cse_lambda)
    return ddpm_step(blended, schedule, t, x_t, rng=rng, eps=eps)


# ----------------------------------------------------------------------
# Guided chain runner
# ----------------------------------------------------------------------

@dataclass
class GuidedRun:
    samples: np.ndarray
    telemetry: dict[str, np.ndarray] = field(default_factory=dict)
    trajectories: np.ndarray | None = None


def _validate_combination(config: GuidanceConfig, schedule, solver: str,
                          meas: MeasurementModel) -> None:
    validate_solver(solver, schedule)
    m = config.method
    if m == "psld" and not meas.operator.linear:
        raise ValueError("psld requires a linear operator")
    if m in ("cse_dps", "cse_dmap") and not meas.gaussian:
        raise ValueError(f"{m} requires Gaussian measurement noise "
                         "(the conditional reference is closed-form only there)")
    if m in ("freedom", "resample") and not isinstance(schedule, VpSchedule):
        raise ValueError(f"{m} is defined on VP schedules")
    if m in ("dsg", "dmap", "cse_dmap") and solver == "ddim":
        raise ValueError(f"{m} needs a stochastic transition (zero-noise "
                         "ddim has a degenerate sphere)")
    if m == "freedom":
        c1, c2 = config.travel_window
        if not (1 <= c1 <= c2 <= schedule.T):
            raise ValueError(f"travel window {config.travel_window} outside "
                             f"[1, {schedule.T}]")


def run_guided(config: GuidanceConfig, prior: GaussianMixture, schedule,
               solver: str, meas: MeasurementModel, n_chains: int, seed: int,
               keep_trajectories: bool = False, score_reference=None,
               workers: int = 1) -> GuidedRun:
    """Run n guided chains with per-step telemetry.

    Telemetry rows (one per transition, chronological): mean residual of
    the denoised estimate, mean guidance-gradient norm, mean relative
    shell deviation |(||x - mu||/(sqrt(d) sigma)) - 1|, and mean score
    error against the exact conditional reference when one exists.
    """
    _validate_combination(config, schedule, solver, meas)
    if n_chains < 1:
        raise ValueError("n_chains must be >= 1")
    dim = prior.dim
    n_steps = schedule.n_steps
    uncond = ExactScore(prior, schedule)
    blended = None
    if config.method in ("cse_dps", "cse_dmap"):
        blended = BlendedScore(ConditionalScore(prior, meas, schedule),
                               uncond, config.cse_lambda)
    reference = score_reference
    if reference is None and meas.gaussian and meas.operator.linear:
        reference = ConditionalScore(prior, meas, schedule)

    steps = list(schedule.step_indices())
    samples = np.empty((n_chains, dim))
    traj = np.empty((n_chains, n_steps + 1, dim)) if keep_trajectories else None

    def one_batch(idx: list[int]) -> np.ndarray:
        sums = np.zeros((4, n_steps))
        rngs = chain_generators(seed, idx)
        x = draw_initial_state(schedule, dim, rngs)
        if traj is not None:
            traj[idx, 0] = x
        for pos, step in enumerate(steps):
            x, stats = _guided_transition(config, prior, schedule, solver, meas,
                                          uncond, blended, step, pos, x, rngs,
                                          reference)
            sums[0, pos] = stats["residual_sum"]
            sums[1, pos] = stats["grad_norm_sum"]
            sums[2, pos] = stats["shell_sum"]
            if reference is not None:
                sums[3, pos] = stats["score_error_sum"]
            if traj is not None:
                traj[idx, pos + 1] = x
        samples[idx] = x
        return sums

    batch_sums = map_batches(n_chains, one_batch, workers)
    total = np.zeros((4, n_steps))
    for s in batch_sums:  # ordered merge: independent of the worker count
        total += s

    telemetry = {
        "step": np.array(steps, dtype=float),
        "residual": total[0] / n_chains,
        "grad_norm": total[1] / n_chains,
        "shell_dev": total[2] / n_chains,
    }
    if reference is not None:
        telemetry["score_error"] = total[3] / n_chains
    return GuidedRun(samples=samples, telemetry=telemetry, trajectories=traj)


def _guided_transition(config: GuidanceConfig, prior, schedule, solver, meas,
                       uncond, blended, step: int, pos: int, x: np.ndarray,
                       rngs, reference=None) -> tuple[np.ndarray, dict]:
    """One guided transition for a batch of chains; draws are per-chain."""
    dim = x.shape[-1]
    n_steps = schedule.n_steps
    zeta = config.zeta_at(pos, n_steps)
    src_idx = schedule.source_index(step)
    src_scaling = schedule.scaling_at(src_idx)
    tgt_scaling = schedule.scaling_at(schedule.target_index(step))
    stepper_score = blended if blended is not None else uncond
    x_source = x

    def stacked_eps():
        return np.stack([r.standard_normal(dim) for r in rngs])

    def base_draw(x_cur):
        if solver == "ddpm":
            return ddpm_step(stepper_score, schedule, step, x_cur, eps=stacked_eps())
        if solver == "euler_ancestral":
            return euler_ancestral_step(stepper_score, schedule, step, x_cur,
                                        eps=stacked_eps())
        x_next = ddim_step(stepper_score, schedule, step, x_cur)
        return StepResult(x=x_next, mu=x_next, sigma=0.0, eps=np.zeros_like(x_next))

    grad, resid = measurement_gradient(prior, src_scaling, meas, x_source)
    scale = _step_scale(config, zeta, resid)
    if np.ndim(scale) > 0:
        scale = np.asarray(scale)[..., None]

    method = config.method
    reps = 1
    if method == "freedom":
        c1, c2 = config.travel_window
        if c1 <= step <= c2:
            reps = config.travel_reps

    x_cur = x_source
    batch_rng = rngs[0]  # only used for measure-zero projection fallbacks
    for rep in range(reps):
        res = base_draw(x_cur)
        state = GuidedState(x_source=x_cur, x=res.x, step=step, mu=res.mu,
                            sigma=res.sigma, residual=resid)
        if method in ("dps", "freedom", "cse_dps"):
            if rep > 0:  # re-noised source: refresh the gradient
                grad_r, resid_r = measurement_gradient(prior, src_scaling, meas, x_cur)
                scale_r = _step_scale(config, zeta, resid_r)
                if np.ndim(scale_r) > 0:
                    scale_r = np.asarray(scale_r)[..., None]
                x_next = res.x - scale_r * grad_r
            else:
                x_next = res.x - scale * grad
        elif method == "psld":
            x_next = res.x - scale * grad
            if config.gamma > 0:
                x_next = x_next - config.gamma * gluing_gradient(
                    prior, src_scaling, meas, x_cur)
        elif method == "dsg":
            x_next = dsg_step(state, config, prior, src_scaling, meas, batch_rng)
        elif method in ("dmap", "cse_dmap"):
            x_next = dmap_step(state, config, prior, tgt_scaling, meas,
                               batch_rng, zeta=zeta)
        elif method == "resample":
            if (pos + 1) % config.resample_every == 0:
                x_next = resample_step(state, config, prior, schedule, step,
                                       meas, None, eps=stacked_eps())
            else:
                x_next = res.x - scale * grad
        else:  # pragma: no cover - guarded by config validation
            raise ValueError(f"unhandled method {method!r}")

        if rep < reps - 1:
            # travel back: re-noise x_{t-1} to time t with the forward kernel
            beta = schedule.beta(step)
            x_cur = (np.sqrt(1.0 - beta) * x_next
                     + np.sqrt(beta) * stacked_eps())
        else:
            x_out = x_next

    sigma = res.sigma
    if sigma > 0:
        shell = np.abs(np.linalg.norm(x_out - res.mu, axis=-1)
                       / (np.sqrt(dim) * sigma) - 1.0)
    else:
        shell = np.zeros(x_out.shape[0])
    stats = {
        "residual_sum": float(np.sum(resid)),
        "grad_norm_sum": float(np.sum(np.linalg.norm(grad, axis=-1))),
        "shell_sum": float(np.sum(shell)),
    }
    if reference is not None:
        # score the method effectively samples with, vs the exact conditional
        s_base = stepper_score(x_source, src_idx)
        if (isinstance(schedule, VpSchedule)
                and method in ("dps", "freedom", "resample", "psld", "cse_dps")):
            coeff = np.sqrt(schedule.alpha(step)) / schedule.beta(step)
            s_eff = s_base - coeff * scale * grad
        else:
            s_eff = s_base
        s_ref = reference(x_source, src_idx)
        stats["score_error_sum"] = float(
            np.sum(np.linalg.norm(s_eff - s_ref, axis=-1)))
    return x_out, stats
