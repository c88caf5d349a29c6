"""Numerical diagnostics: score-error curves, score means, sample spread,
mode coverage, shell concentration, and the cross-entropy implication check.

Everything here is seeded and returns plain arrays/dataclasses; the harness
turns them into reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diffusion import diffuse
from .guidance import GuidanceConfig, run_guided
from .measurement import (MeasurementModel, assign_to_modes,
                          condition_on_measurement, log_measurement_likelihood,
                          posterior_oracle)
from .mixture import GaussianMixture
from .operators import LinearOp
from .samplers import (BlendedScore, ConditionalScore, ExactScore,
                       draw_initial_state, chain_generators)
from .schedules import VpSchedule
from .tasks import Task

__all__ = [
    "score_error_curve",
    "ScoreMeanStat",
    "score_mean_stat",
    "SpreadResult",
    "sample_spread",
    "mode_coverage",
    "ShellResult",
    "shell_check",
    "CrossEntropyRow",
    "crossentropy_check",
    "ZetaRow",
    "zeta_sweep",
    "terminal_residuals",
]


def terminal_residuals(meas: MeasurementModel, samples: np.ndarray) -> np.ndarray:
    """||f(x_0) - y|| per terminal sample."""
    return np.atleast_1d(meas.residual(samples))


# ----------------------------------------------------------------------
# Observation I analog: per-step score error against the exact reference
# ----------------------------------------------------------------------

def score_error_curve(methods: dict[str, object], task: Task, n_probes: int,
                      seed: int) -> dict[str, np.ndarray]:
    """Mean ||s_method - s_ref|| at every schedule index.

    Probes at index i are drawn from the exact conditional marginal
    p(x_i | y), so the comparison happens where the conditional chain
    actually lives. Methods map name -> callable (x, index) -> score.
    Gaussian measurements only (the reference must be closed-form).
    """
    if not task.meas.gaussian:
        raise ValueError("score-error curves need a Gaussian measurement "
                         "(no closed-form reference otherwise)")
    schedule = task.schedule
    conditional = condition_on_measurement(task.prior, task.meas)
    reference = ConditionalScore(task.prior, task.meas, schedule)
    indices = [schedule.source_index(s) for s in schedule.step_indices()]
    curves = {name: np.empty(len(indices)) for name in methods}
    curves["index"] = np.array(indices, dtype=float)
    root = np.random.SeedSequence(seed)
    streams = [np.random.default_rng(s) for s in root.spawn(len(indices))]
    for row, (idx, rng) in enumerate(zip(indices, streams)):
        marginal = diffuse(conditional, schedule.scaling_at(idx))
        probes = marginal.sample(n_probes, rng)
        s_ref = reference(probes, idx)
        for name, fn in methods.items():
            err = np.linalg.norm(fn(probes, idx) - s_ref, axis=-1)
            curves[name][row] = float(np.mean(err))
    return curves


# ----------------------------------------------------------------------
# Observation II analog: empirical score mean at the initial step
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreMeanStat:
    mean_norm: float
    se_norm: float       # norm of the per-coordinate standard errors
    zero_mean_bound: float  # 5 * se_norm

    @property
    def within_zero_mean_bound(self) -> bool:
        return self.mean_norm <= self.zero_mean_bound


def score_mean_stat(score_fn, schedule, dim: int, n: int = 1000,
                    seed: int = 0) -> ScoreMeanStat:
    """Norm of the empirical score mean over n draws of the initial state."""
    rngs = chain_generators(seed, list(range(n)))
    x = draw_initial_state(schedule, dim, rngs)
    init_idx = schedule.T if isinstance(schedule, VpSchedule) else 0
    scores = score_fn(x, init_idx)
    mean = scores.mean(axis=0)
    se = scores.std(axis=0, ddof=1) / np.sqrt(n)
    se_norm = float(np.linalg.norm(se))
    return ScoreMeanStat(mean_norm=float(np.linalg.norm(mean)),
                         se_norm=se_norm, zero_mean_bound=5.0 * se_norm)


# ----------------------------------------------------------------------
# Observation III analog: per-dimension sample spread
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SpreadResult:
    method_std: np.ndarray
    reference_std: np.ndarray
    ratio: float  # mean per-dim std of method over reference


def sample_spread(method_samples: np.ndarray,
                  reference_samples: np.ndarray) -> SpreadResult:
    a = np.atleast_2d(np.asarray(method_samples, dtype=float))
    b = np.atleast_2d(np.asarray(reference_samples, dtype=float))
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValueError("spread needs at least 2 samples per set")
    sa = a.std(axis=0, ddof=1)
    sb = b.std(axis=0, ddof=1)
    return SpreadResult(method_std=sa, reference_std=sb,
                        ratio=float(sa.mean() / sb.mean()))


def mode_coverage(samples: np.ndarray, modes: np.ndarray,
                  metric: np.ndarray) -> np.ndarray:
    """Fraction of samples nearest each mode (per-mode Mahalanobis metric)."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] == 0:
        raise ValueError("mode coverage needs a nonempty sample set")
    assign = assign_to_modes(samples, modes, metric)
    k = np.atleast_2d(modes).shape[0]
    return np.bincount(assign, minlength=k) / samples.shape[0]


# ----------------------------------------------------------------------
# Thin-shell concentration
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ShellResult:
    ratios: np.ndarray
    quantiles: dict[str, float]
    degenerate: bool

    def deviation_quantile(self, q: float) -> float:
        return float(np.quantile(np.abs(self.ratios - 1.0), q))


def shell_check(sigma: float, d: int, n: int, seed: int = 0) -> ShellResult:
    """Distribution of ||x - mu|| / (sqrt(d) sigma) over isotropic draws."""
    if sigma == 0.0:
        return ShellResult(ratios=np.zeros(n), quantiles={}, degenerate=True)
    rng = np.random.default_rng(seed)
    # ||mu + sigma*eps - mu|| reduces to sigma*||eps||; draw chi directly
    norms = np.linalg.norm(rng.standard_normal((n, d)), axis=1)
    ratios = norms / np.sqrt(d)
    qs = {f"q{int(100 * q):02d}": float(np.quantile(ratios, q))
          for q in (0.05, 0.25, 0.5, 0.75, 0.95)}
    return ShellResult(ratios=ratios, quantiles=qs, degenerate=False)


# ----------------------------------------------------------------------
# Cross-entropy implication check
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CrossEntropyRow:
    lam: float
    h_q: float            # H(q_lambda, p_post), up to a shared constant
    h_p: float            # H(p_uncond,  p_post), same constant
    h_se: float           # SE of the h difference
    loglik_q: float       # E_q[log p(y|X_{t-1})]
    loglik_p: float       # E_p[log p(y|X_{t-1})]
    loglik_se: float
    premise: str          # "true" | "false" | "equal"
    conclusion: str
    violation: bool       # premise true and conclusion false, both beyond 3 SE


def crossentropy_check(prior: GaussianMixture, meas: MeasurementModel,
                       schedule: VpSchedule, t: int,
                       lambdas=(0.0, 0.25, 0.5, 0.75, 1.0), n: int = 10_000,
                       seed: int = 0) -> list[CrossEntropyRow]:
    """Monte-Carlo check of the initialization implication at one transition.

    q_lambda and p_uncond are the Gaussian transitions built from the
    blended and unconditional scores at a probe x_t; p_post is the
    Bayes combination p_uncond(x) p(y|x) / p(y|x_t). Cross-entropies are
    reported up to the shared log p(y|x_t) constant, which cancels in the
    premise comparison.
    """
    if not meas.gaussian:
        raise ValueError("the cross-entropy check needs a Gaussian measurement")
    rng = np.random.default_rng(seed)
    conditional = condition_on_measurement(prior, meas)
    x_t = diffuse(conditional, schedule.scaling_at(t)).sample(1, rng)[0]

    tp = schedule.transition_params(t)
    uncond = ExactScore(prior, schedule)
    cond = ConditionalScore(prior, meas, schedule)
    tgt_scaling = schedule.scaling_at(t - 1)

    def transition_mean(score_fn):
        return tp.mean_coeff * x_t + tp.score_coeff * score_fn(x_t, t)

    mu_p = transition_mean(uncond)
    sig = tp.sigma_trans
    d = prior.dim

    def log_p_post(x: np.ndarray) -> np.ndarray:
        # log p_uncond(x | x_t) + log p(y | x) up to the -log p(y|x_t) constant
        quad = -0.5 * np.sum((x - mu_p) ** 2, axis=-1) / sig ** 2
        base = quad - 0.5 * d * np.log(2 * np.pi * sig ** 2)
        return base + log_measurement_likelihood(prior, tgt_scaling, meas, x)

    draws_p = mu_p + sig * rng.standard_normal((n, d))
    lp_post_p = log_p_post(draws_p)
    ll_p = log_measurement_likelihood(prior, tgt_scaling, meas, draws_p)

    rows = []
    for lam in lambdas:
        blend = BlendedScore(cond, uncond, lam)
        mu_q = transition_mean(blend)
        draws_q = mu_q + sig * rng.standard_normal((n, d))
        lp_post_q = log_p_post(draws_q)
        ll_q = log_measurement_likelihood(prior, tgt_scaling, meas, draws_q)

        h_q = float(-np.mean(lp_post_q))
        h_p = float(-np.mean(lp_post_p))
        h_se = float(np.sqrt(np.var(lp_post_q, ddof=1) / n
                             + np.var(lp_post_p, ddof=1) / n))
        lq, lpv = float(np.mean(ll_q)), float(np.mean(ll_p))
        l_se = float(np.sqrt(np.var(ll_q, ddof=1) / n + np.var(ll_p, ddof=1) / n))

        if abs(h_q - h_p) <= 3.0 * h_se:
            premise = "equal"
        else:
            premise = "true" if h_q < h_p else "false"
        if abs(lq - lpv) <= 3.0 * l_se:
            conclusion = "equal"
        else:
            conclusion = "true" if lq > lpv else "false"
        rows.append(CrossEntropyRow(
            lam=lam, h_q=h_q, h_p=h_p, h_se=h_se, loglik_q=lq, loglik_p=lpv,
            loglik_se=l_se, premise=premise, conclusion=conclusion,
            violation=(premise == "true" and conclusion == "false"),
        ))
    return rows


# ----------------------------------------------------------------------
# Hyperparameter sweep
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ZetaRow:
    zeta: float
    residual_median: float
    score_error_mean: float | None
    score_mean_norm: float
    spread_ratio: float | None


def _oracle_samples(task: Task, k: int, rng: np.random.Generator) -> np.ndarray:
    if task.meas.gaussian and isinstance(task.meas.operator, LinearOp):
        return condition_on_measurement(task.prior, task.meas).sample(k, rng)
    oracle = posterior_oracle(task.prior, task.meas, max(20_000, 20 * k), rng)
    pick = rng.choice(oracle.samples.shape[0], size=k, p=oracle.weights)
    return oracle.samples[pick]


def zeta_sweep(task: Task, zetas, method: str = "dps", n_chains: int = 100,
               seed: int = 0) -> list[ZetaRow]:
    """Per-zeta summary joining residuals, score errors, score means, spread."""
    if len(list(zetas)) == 0:
        raise ValueError("zeta list must be nonempty")
    from .guidance import DpsEffectiveScore  # local import to avoid cycle noise

    rows = []
    oracle_rng = np.random.default_rng([seed, 0xA])
    reference = _oracle_samples(task, max(50, n_chains), oracle_rng)
    vp = isinstance(task.schedule, VpSchedule)
    for zeta in zetas:
        config = GuidanceConfig(method=method, zeta=float(zeta))
        run = run_guided(config, task.prior, task.schedule, task.solver,
                         task.meas, n_chains, seed)
        resid = terminal_residuals(task.meas, run.samples)
        if vp:
            eff = DpsEffectiveScore(task.prior, task.schedule, task.meas, config)
            stat = score_mean_stat(eff, task.schedule, task.dim, n=1000,
                                   seed=seed + 1)
            score_mean = stat.mean_norm
            serr = run.telemetry.get("score_error")
            score_err = float(np.mean(serr)) if serr is not None else None
        else:
            uncond = ExactScore(task.prior, task.schedule)
            stat = score_mean_stat(uncond, task.schedule, task.dim, n=1000,
                                   seed=seed + 1)
            score_mean = stat.mean_norm
            score_err = None
        spread = sample_spread(run.samples, reference).ratio if run.samples.shape[0] >= 2 else None
        rows.append(ZetaRow(zeta=float(zeta),
                            residual_median=float(np.median(resid)),
                            score_error_mean=score_err,
                            score_mean_norm=score_mean,
                            spread_ratio=spread))
    return rows
