"""Measurement models, exact conditioning, and posterior oracles.

With a linear operator and Gaussian noise everything stays in the mixture
family: p(X0|y) is an exact mixture, its diffusion gives the exact
conditional marginals p(X_t|y), and the stacked (X_t, y) mixture gives
log p(y|x_t) and its gradient in closed form. The norm-exponential
likelihood exp(-zeta*||f(x)-y||) is handled by self-normalized importance
sampling (and grid quadrature for d <= 3).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .diffusion import DiffusionScaling, diffuse
from .mixture import GaussianMixture
from .operators import LinearOp

__all__ = [
    "GaussianNoise",
    "NormExponential",
    "MeasurementModel",
    "condition_on_measurement",
    "joint_state_measurement_mixture",
    "log_measurement_likelihood",
    "measurement_loglik_gradient",
    "conditional_score_reference",
    "OracleResult",
    "posterior_oracle",
    "grid_posterior_masses",
    "ParticleConditional",
]

# Components whose conditioned weight underflows past this are dropped.
_LOG_WEIGHT_FLOOR = -700.0


@dataclass(frozen=True)
class GaussianNoise:
    """y = f(x) + sigma_y * eps, eps ~ N(0, I)."""

    sigma_y: float

    def __post_init__(self):
        if self.sigma_y < 0:
            raise ValueError("sigma_y must be >= 0")


@dataclass(frozen=True)
class NormExponential:
    """p(y|x) proportional to exp(-zeta_like * ||f(x) - y||)."""

    zeta_like: float

    def __post_init__(self):
        if self.zeta_like <= 0:
            raise ValueError("zeta_like must be > 0")


@dataclass(frozen=True)
class MeasurementModel:
    """Operator + likelihood family + observation."""

    operator: object
    likelihood: GaussianNoise | NormExponential
    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        object.__setattr__(self, "y", y)
        if y.shape[0] != self.operator.out_dim:
            raise ValueError(f"observation has dim {y.shape[0]}, "
                             f"operator output has dim {self.operator.out_dim}")
        if isinstance(self.likelihood, GaussianNoise) and self.likelihood.sigma_y == 0:
            if not self.operator.linear or not self.operator.has_full_row_rank():
                raise ValueError("noiseless Gaussian measurement requires a "
                                 "full-row-rank linear operator")

    @property
    def gaussian(self) -> bool:
        return isinstance(self.likelihood, GaussianNoise)

    def residual(self, x: np.ndarray) -> np.ndarray | float:
        """||f(x) - y||, batched over the leading axis."""
        fx = self.operator.apply(x)
        r = fx - self.y
        return np.linalg.norm(r, axis=-1)

    def log_likelihood(self, x: np.ndarray) -> np.ndarray | float:
        """log p(y|x). Normalized for Gaussian noise; for the
        norm-exponential family the (dimension-dependent) normalizer is
        omitted, which cancels in every self-normalized use."""
        r = self.residual(x)
        if isinstance(self.likelihood, GaussianNoise):
            s = self.likelihood.sigma_y
            if s == 0:
                raise ValueError("noiseless likelihood has no density; "
                                 "use condition_on_measurement")
            m = self.y.shape[0]
            return -0.5 * (r / s) ** 2 - m * np.log(s) - 0.5 * m * np.log(2 * np.pi)
        return -self.likelihood.zeta_like * r


def _require_linear_gaussian(meas: MeasurementModel, what: str) -> LinearOp:
    if not isinstance(meas.operator, LinearOp):
        raise ValueError(f"{what} requires a linear operator")
    if not isinstance(meas.likelihood, GaussianNoise):
        raise ValueError(f"{what} requires Gaussian measurement noise")
    return meas.operator


def condition_on_measurement(prior: GaussianMixture,
                             meas: MeasurementModel) -> GaussianMixture:
    """Exact p(X0 | y) for a linear operator with Gaussian noise.

    Component k is reweighted by its evidence N(y; A mu_k, A Sigma_k A^T +
    sigma_y^2 I) and updated by the conjugate formulas. With sigma_y = 0 the
    result is PSD-degenerate (flagged; diffuse before taking scores).
    Components whose renormalized weight underflows are dropped.
    """
    op = _require_linear_gaussian(meas, "exact conditioning")
    a, y = op.matrix, meas.y
    s2 = meas.likelihood.sigma_y ** 2
    k_comp, d = prior.n_components, prior.dim
    eye_m = np.eye(op.out_dim)

    log_ev = np.empty(k_comp)
    new_means = np.empty((k_comp, d))
    new_covs = np.empty((k_comp, d, d))
    for k in range(k_comp):
        sig = prior.component_covariance(k)
        mk = a @ sig @ a.T + s2 * eye_m
        resid = y - a @ prior.means[k]
        sol = np.linalg.solve(mk, resid)
        sign, logdet = np.linalg.slogdet(mk)
        if sign <= 0:
            raise ValueError("measurement covariance is singular; "
                             "noiseless conditioning needs full row rank")
        log_ev[k] = -0.5 * (resid @ sol + logdet + op.out_dim * np.log(2 * np.pi))
        gain = sig @ a.T  # (d, m)
        new_means[k] = prior.means[k] + gain @ sol
        new_covs[k] = sig - gain @ np.linalg.solve(mk, gain.T)

    logw = np.log(prior.weights) + log_ev
    logw -= logsumexp(logw)
    keep = logw >= _LOG_WEIGHT_FLOOR
    logw = logw[keep]
    w = np.exp(logw)
    w /= w.sum()
    return GaussianMixture(means=new_means[keep], weights=w,
                           covariances=new_covs[keep], pd=s2 > 0)


def joint_state_measurement_mixture(prior: GaussianMixture,
                                    scaling: DiffusionScaling,
                                    meas: MeasurementModel) -> GaussianMixture:
    """Mixture over the stacked vector (x_t, y).

    Per component: mean (a mu_k, A mu_k), covariance
    [[a^2 Sigma_k + sigma_t^2 I, a Sigma_k A^T],
     [a A Sigma_k,               A Sigma_k A^T + sigma_y^2 I]].
    PD whenever sigma_t > 0 (even for noiseless measurements).
    """
    op = _require_linear_gaussian(meas, "the joint state/measurement mixture")
    a_mat = op.matrix
    a, st2 = scaling.a, scaling.sigma ** 2
    sy2 = meas.likelihood.sigma_y ** 2
    d, m = prior.dim, op.out_dim
    k_comp = prior.n_components

    means = np.empty((k_comp, d + m))
    covs = np.empty((k_comp, d + m, d + m))
    for k in range(k_comp):
        sig = prior.component_covariance(k)
        means[k, :d] = a * prior.means[k]
        means[k, d:] = a_mat @ prior.means[k]
        cross = a * sig @ a_mat.T
        covs[k, :d, :d] = a * a * sig + st2 * np.eye(d)
        covs[k, :d, d:] = cross
        covs[k, d:, :d] = cross.T
        covs[k, d:, d:] = a_mat @ sig @ a_mat.T + sy2 * np.eye(m)
    return GaussianMixture(means=means, weights=prior.weights, covariances=covs)


def log_measurement_likelihood(prior: GaussianMixture, scaling: DiffusionScaling,
                               meas: MeasurementModel,
                               x_t: np.ndarray) -> float | np.ndarray:
    """log p(y | x_t) = log p(x_t, y) - log p(x_t), all closed form."""
    joint = joint_state_measurement_mixture(prior, scaling, meas)
    marginal = diffuse(prior, scaling)
    x = np.asarray(x_t, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    yb = np.broadcast_to(meas.y, (xb.shape[0], meas.y.shape[0]))
    stacked = np.concatenate([xb, yb], axis=1)
    out = joint.log_density(stacked) - marginal.log_density(xb)
    return float(out[0]) if single else out


def measurement_loglik_gradient(prior: GaussianMixture, scaling: DiffusionScaling,
                                meas: MeasurementModel, x_t: np.ndarray) -> np.ndarray:
    """grad_{x_t} log p(y|x_t): joint-mixture score minus marginal score."""
    joint = joint_state_measurement_mixture(prior, scaling, meas)
    marginal = diffuse(prior, scaling)
    x = np.asarray(x_t, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    yb = np.broadcast_to(meas.y, (xb.shape[0], meas.y.shape[0]))
    stacked = np.concatenate([xb, yb], axis=1)
    grad = joint.score(stacked)[:, :prior.dim] - marginal.score(xb)
    return grad[0] if single else grad


def conditional_score_reference(prior: GaussianMixture, meas: MeasurementModel,
                                scaling: DiffusionScaling,
                                x_t: np.ndarray) -> np.ndarray:
    """Exact conditional score: the score of diffuse(p(X0|y), scaling) at x_t."""
    conditional = condition_on_measurement(prior, meas)
    marginal = diffuse(conditional, scaling)
    if not marginal.pd:
        raise ValueError("degenerate conditional at sigma_t = 0 has no score")
    return marginal.score(np.asarray(x_t, dtype=float))


# ----------------------------------------------------------------------
# Monte Carlo / quadrature oracles
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class OracleResult:
    """Self-normalized importance sample of p(X0 | y)."""

    samples: np.ndarray          # (n, d), drawn from the prior
    log_weights: np.ndarray      # (n,), normalized: logsumexp == 0
    ess: float
    low_ess: bool

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def mean(self) -> np.ndarray:
        return self.weights @ self.samples

    def mode_masses(self, modes: np.ndarray, metric_vars: np.ndarray) -> np.ndarray:
        """Posterior mass per mode; nearest mode under each mode's isotropic
        Mahalanobis metric, ties to the lower index."""
        assign = assign_to_modes(self.samples, modes, metric_vars)
        masses = np.zeros(modes.shape[0])
        np.add.at(masses, assign, self.weights)
        return masses


def assign_to_modes(x: np.ndarray, modes: np.ndarray,
                    metric: np.ndarray) -> np.ndarray:
    """Nearest-mode assignment under each mode's own Mahalanobis metric.

    metric: per-mode isotropic variances (K,) or dense covariances (K, d, d).
    Ties go to the lower index (argmin convention).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    modes = np.atleast_2d(np.asarray(modes, dtype=float))
    k = modes.shape[0]
    metric = np.asarray(metric, dtype=float)
    diff = x[:, None, :] - modes[None, :, :]
    if metric.ndim <= 1:
        mv = np.broadcast_to(metric, (k,))
        d2 = np.sum(diff * diff, axis=2) / mv[None, :]
    else:
        d2 = np.empty((x.shape[0], k))
        for j in range(k):
            d2[:, j] = np.sum(diff[:, j, :] * np.linalg.solve(
                metric[j], diff[:, j, :].T).T, axis=1)
    return np.argmin(d2, axis=1)


def posterior_oracle(prior: GaussianMixture, meas: MeasurementModel, n: int,
                     rng: np.random.Generator, ess_floor: float = 50.0) -> OracleResult:
    """Importance-sample p(X0|y) with the prior as proposal.

    Works for any likelihood family with a density; flags low effective
    sample size instead of failing.
    """
    if isinstance(meas.likelihood, GaussianNoise) and meas.likelihood.sigma_y == 0:
        raise ValueError("noiseless Gaussian measurement has no importance "
                         "density; use condition_on_measurement")
    x = prior.sample(n, rng)
    logw = meas.log_likelihood(x)
    logw = logw - logsumexp(logw)
    ess = float(np.exp(-logsumexp(2.0 * logw)))
    return OracleResult(samples=x, log_weights=logw, ess=ess, low_ess=ess < ess_floor)


def grid_posterior_masses(prior: GaussianMixture, meas: MeasurementModel,
                          modes: np.ndarray, metric_vars: np.ndarray,
                          extent: float = 3.0, resolution: int = 400) -> np.ndarray:
    """Mode-mass integrals of p(X0|y) on a uniform grid (d <= 3 only)."""
    d = prior.dim
    if d > 3:
        raise ValueError("grid quadrature supports d <= 3")
    axes = [np.linspace(-extent, extent, resolution) for _ in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    logp = prior.log_density(pts) + meas.log_likelihood(pts)
    logp = logp - logsumexp(logp)
    w = np.exp(logp)
    assign = assign_to_modes(pts, modes, metric_vars)
    masses = np.zeros(np.atleast_2d(modes).shape[0])
    np.add.at(masses, assign, w)
    return masses


class ParticleConditional:
    """Particle approximation of the conditional marginals p(X_t | y).

    Importance particles from the prior (weights = likelihood) are reused
    as an equal-variance mixture at every noise level: at scaling (a,
    sigma), p(x_t|y) ~= sum_i w_i N(a x0_i, sigma^2 I). Asymptotically
    exact; the practical reference when no closed-form conditional exists
    (norm-exponential likelihoods).
    """

    def __init__(self, prior: GaussianMixture, meas: MeasurementModel,
                 n_particles: int, rng: np.random.Generator):
        oracle = posterior_oracle(prior, meas, n_particles, rng)
        self.oracle = oracle
        keep = oracle.weights > 0  # underflown particles carry no mass
        self._particles = oracle.samples[keep]
        w = oracle.weights[keep]
        self._weights = w / w.sum()

    def score(self, scaling: DiffusionScaling, x_t: np.ndarray) -> np.ndarray:
        if scaling.sigma <= 0:
            raise ValueError("particle conditional score needs sigma_t > 0")
        mix = GaussianMixture(
            means=scaling.a * self._particles,
            weights=self._weights,
            variances=np.full(self._particles.shape[0], scaling.sigma ** 2),
        )
        return mix.score(np.asarray(x_t, dtype=float))
