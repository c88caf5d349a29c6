"""Forward diffusion of mixtures and Tweedie denoising.

A forward step is X_t = a * X0 + sigma * eps with eps ~ N(0, I). Under a
mixture prior the diffused marginal is again a mixture, so the posterior
mean E[X0 | X_t] and its Jacobian are available in closed form, by two
independent routes that must agree:

* responsibility route: conjugate per-component Gaussian means, weighted
  by the diffused mixture's responsibilities;
* score route: (x + sigma^2 * score(x)) / a on the diffused marginal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .mixture import GaussianMixture

__all__ = [
    "DiffusionScaling",
    "diffuse",
    "posterior_mean",
    "posterior_mean_responsibility_form",
    "posterior_mean_jacobian",
    "posterior_mean_vjp",
]

_VP_TOL = 1e-12


@dataclass(frozen=True)
class DiffusionScaling:
    """The (scale, noise) pair of one forward-marginal X_t = a*X0 + sigma*eps.

    kind, when given, enforces the path convention: "vp" requires
    a^2 + sigma^2 = 1; "ve" requires a = 1.
    """

    a: float
    sigma: float
    kind: str | None = None

    def __post_init__(self):
        if self.a < 0 or self.sigma < 0:
            raise ValueError("scale and noise must be nonnegative")
        if self.kind == "vp" and abs(self.a ** 2 + self.sigma ** 2 - 1.0) > _VP_TOL:
            raise ValueError(f"VP scaling violates a^2 + sigma^2 = 1: a={self.a}, sigma={self.sigma}")
        if self.kind == "ve" and self.a != 1.0:
            raise ValueError("VE scaling requires a = 1")
        if self.kind not in (None, "vp", "ve"):
            raise ValueError(f"unknown scaling kind {self.kind!r}")


def diffuse(gmm: GaussianMixture, scaling: DiffusionScaling) -> GaussianMixture:
    """Marginal of a*X0 + sigma*eps: component k -> N(a*mu_k, a^2*Sigma_k + sigma^2*I)."""
    a, s2 = scaling.a, scaling.sigma ** 2
    means = a * gmm.means
    if gmm.isotropic:
        var = a * a * gmm.variances + s2
        return GaussianMixture(means=means, weights=gmm.weights, variances=var,
                               pd=gmm.pd or s2 > 0)
    eye = np.eye(gmm.dim)
    covs = a * a * gmm.covariances + s2 * eye[None, :, :]
    return GaussianMixture(means=means, weights=gmm.weights, covariances=covs,
                           pd=gmm.pd or s2 > 0)


def posterior_mean(prior: GaussianMixture, scaling: DiffusionScaling,
                   x_t: np.ndarray) -> np.ndarray:
    """E[X0 | X_t = x_t], score (Tweedie) form: (x + sigma^2 s(x)) / a."""
    if scaling.a == 0:
        raise ValueError("posterior mean undefined at a = 0 (no deconvolution)")
    marginal = diffuse(prior, scaling)
    x = np.asarray(x_t, dtype=float)
    return (x + scaling.sigma ** 2 * marginal.score(x)) / scaling.a


def posterior_mean_responsibility_form(prior: GaussianMixture,
                                       scaling: DiffusionScaling,
                                       x_t: np.ndarray) -> np.ndarray:
    """E[X0 | X_t = x_t] as a responsibility-weighted sum of conjugate means.

    Component k: m_k(x) = mu_k + a Sigma_k S_k^{-1} (x - a mu_k) with
    S_k = a^2 Sigma_k + sigma^2 I; responsibilities are those of the
    diffused marginal at x.
    """
    if scaling.a == 0:
        raise ValueError("posterior mean undefined at a = 0 (no deconvolution)")
    a, s2 = scaling.a, scaling.sigma ** 2
    marginal = diffuse(prior, scaling)
    x = np.asarray(x_t, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    r = marginal.responsibilities(xb)  # (n, K)
    n = xb.shape[0]
    out = np.zeros((n, prior.dim))
    for k in range(prior.n_components):
        diff = xb - a * prior.means[k]
        if prior.isotropic:
            gain = a * prior.variances[k] / (a * a * prior.variances[k] + s2)
            mk = prior.means[k] + gain * diff
        else:
            sk = a * a * prior.covariances[k] + s2 * np.eye(prior.dim)
            solved = np.linalg.solve(sk, diff.T).T
            mk = prior.means[k] + (a * prior.covariances[k] @ solved.T).T
        out += r[:, k:k + 1] * mk
    return out[0] if single else out


def posterior_mean_jacobian(prior: GaussianMixture, scaling: DiffusionScaling,
                            x_t: np.ndarray) -> np.ndarray:
    """Jacobian d E[X0|x_t] / d x_t = (I + sigma^2 H(x_t)) / a, shape (d, d).

    H is the Hessian of the diffused marginal's log-density, so the
    Jacobian is symmetric.
    """
    if scaling.a == 0:
        raise ValueError("posterior-mean Jacobian undefined at a = 0")
    marginal = diffuse(prior, scaling)
    h = marginal.hessian_log_density(np.asarray(x_t, dtype=float))
    return (np.eye(prior.dim) + scaling.sigma ** 2 * h) / scaling.a


def posterior_mean_vjp(prior: GaussianMixture, scaling: DiffusionScaling,
                       x_t: np.ndarray, v: np.ndarray) -> np.ndarray:
    """J(x_t)^T v without materializing the Jacobian (J is symmetric)."""
    if scaling.a == 0:
        raise ValueError("posterior-mean Jacobian undefined at a = 0")
    marginal = diffuse(prior, scaling)
    x = np.asarray(x_t, dtype=float)
    vv = np.asarray(v, dtype=float)
    return (vv + scaling.sigma ** 2 * marginal.score_hvp(x, vv)) / scaling.a
