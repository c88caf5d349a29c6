"""Gaussian mixtures with closed-form densities, scores, and Hessians.

All heavy lifting in the lab reduces to mixture algebra: the prior, every
diffused marginal, and every measurement-conditioned posterior are Gaussian
mixtures, so densities, scores, and posterior-mean Jacobians are exact.

Two covariance representations are supported: an isotropic fast path
(one scalar variance per component, usable up to d ~ 4096) and dense
matrices (d <= 256). Mixing representations promotes everything to dense.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.special import logsumexp

__all__ = ["GaussianMixture", "isotropic_mixture"]

_WEIGHT_TOL = 1e-12
_DENSE_DIM_LIMIT = 256
# Components whose log-responsibility falls below this contribute exactly
# zero to means and Jacobians (exp would underflow to subnormals anyway).
_LOG_RESP_FLOOR = -700.0


def _as_batch(x: np.ndarray, dim: int) -> tuple[np.ndarray, bool]:
    """Coerce x to shape (n, dim); report whether the input was a single point."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if x.shape[0] != dim:
            raise ValueError(f"point has dim {x.shape[0]}, mixture has dim {dim}")
        return x[None, :], True
    if x.ndim != 2 or x.shape[1] != dim:
        raise ValueError(f"expected shape (n, {dim}), got {x.shape}")
    return x, False


@dataclass(frozen=True)
class GaussianMixture:
    """Weighted Gaussian mixture, immutable after construction.

    Parameters
    ----------
    means : ndarray, shape (K, dim)
        Component means.
    weights : ndarray, shape (K,)
        Strictly positive, summing to 1 within 1e-12.
    variances : ndarray, shape (K,), optional
        Isotropic representation: component k has covariance variances[k]*I.
    covariances : ndarray, shape (K, dim, dim), optional
        Dense representation. Exactly one of variances/covariances is given.
    pd : bool
        If True (default) every covariance must admit a Cholesky factor;
        densities, scores, and sampling are available. If False the
        covariances may be PSD-degenerate (e.g. after noiseless
        conditioning) and only moment/diffusion operations are allowed.
    """

    means: np.ndarray
    weights: np.ndarray
    variances: np.ndarray | None = None
    covariances: np.ndarray | None = None
    pd: bool = True
    # Cached per-component Cholesky factors / log-dets (dense PD path only).
    _chol: np.ndarray | None = field(default=None, repr=False, compare=False)
    _logdet: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        weights = np.asarray(self.weights, dtype=float).ravel()
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "weights", weights)
        k, dim = means.shape
        if weights.shape != (k,):
            raise ValueError(f"{k} components but {weights.shape[0]} weights")
        if np.any(weights <= 0):
            raise ValueError("component weights must be strictly positive")
        if abs(weights.sum() - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"weights sum to {weights.sum()!r}, expected 1")
        if (self.variances is None) == (self.covariances is None):
            raise ValueError("give exactly one of variances / covariances")

        if self.variances is not None:
            var = np.asarray(self.variances, dtype=float).ravel()
            if var.shape != (k,):
                raise ValueError(f"expected {k} variances, got {var.shape}")
            if self.pd and np.any(var <= 0):
                raise ValueError("isotropic variances must be positive")
            if not self.pd and np.any(var < 0):
                raise ValueError("isotropic variances must be nonnegative")
            object.__setattr__(self, "variances", var)
        else:
            cov = np.asarray(self.covariances, dtype=float)
            if cov.shape != (k, dim, dim):
                raise ValueError(f"expected covariances ({k},{dim},{dim}), got {cov.shape}")
            if dim > _DENSE_DIM_LIMIT:
                raise ValueError(
                    f"dense covariances limited to dim {_DENSE_DIM_LIMIT}; "
                    "use the isotropic representation"
                )
            if np.max(np.abs(cov - np.swapaxes(cov, 1, 2))) > 1e-10:
                raise ValueError("covariances must be symmetric")
            cov = 0.5 * (cov + np.swapaxes(cov, 1, 2))
            object.__setattr__(self, "covariances", cov)
            if self.pd:
                try:
                    chols = np.stack([cholesky(c, lower=True) for c in cov])
                except np.linalg.LinAlgError as exc:  # pragma: no cover - scipy raises LinAlgError
                    raise ValueError("covariance is not positive definite") from exc
                except Exception as exc:
                    raise ValueError("covariance is not positive definite") from exc
                logdets = 2.0 * np.sum(np.log(np.diagonal(chols, axis1=1, axis2=2)), axis=1)
                object.__setattr__(self, "_chol", chols)
                object.__setattr__(self, "_logdet", logdets)
            else:
                # PSD check only: smallest eigenvalue may touch zero.
                for c in cov:
                    w = np.linalg.eigvalsh(c)
                    if w.min() < -1e-10 * max(1.0, w.max()):
                        raise ValueError("covariance is not positive semidefinite")

    # ------------------------------------------------------------------
    # Basic structure
    # ------------------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    @property
    def isotropic(self) -> bool:
        return self.variances is not None

    def component_covariance(self, k: int) -> np.ndarray:
        if self.isotropic:
            return self.variances[k] * np.eye(self.dim)
        return self.covariances[k]

    def _require_pd(self, what: str) -> None:
        if not self.pd:
            raise ValueError(f"{what} requires positive-definite components; "
                             "this mixture is PSD-degenerate (diffuse it first)")

    # ------------------------------------------------------------------
    # Densities and responsibilities
    # ------------------------------------------------------------------

    def component_log_density(self, x: np.ndarray) -> np.ndarray:
        """Per-component log N(x; mu_k, Sigma_k), shape (n, K)."""
        self._require_pd("log density")
        xb, _ = _as_batch(x, self.dim)
        n, d = xb.shape
        diff = xb[:, None, :] - self.means[None, :, :]  # (n, K, d)
        if self.isotropic:
            quad = np.sum(diff * diff, axis=2) / self.variances[None, :]
            logdet = d * np.log(self.variances)
        else:
            quad = np.empty((n, self.n_components))
            for k in range(self.n_components):
                zk = solve_triangular(self._chol[k], diff[:, k, :].T, lower=True)
                quad[:, k] = np.sum(zk * zk, axis=0)
            logdet = self._logdet
        return -0.5 * (d * np.log(2.0 * np.pi) + logdet[None, :] + quad)

    def log_density(self, x: np.ndarray) -> np.ndarray | float:
        """log sum_k w_k N(x; mu_k, Sigma_k), via log-sum-exp."""
        xb, single = _as_batch(x, self.dim)
        comp = self.component_log_density(xb) + np.log(self.weights)[None, :]
        out = logsumexp(comp, axis=1)
        return float(out[0]) if single else out

    def log_responsibilities(self, x: np.ndarray) -> np.ndarray:
        """log of posterior component probabilities at x, shape (n, K)."""
        xb, _ = _as_batch(x, self.dim)
        comp = self.component_log_density(xb) + np.log(self.weights)[None, :]
        return comp - logsumexp(comp, axis=1, keepdims=True)

    def responsibilities(self, x: np.ndarray) -> np.ndarray:
        logr = self.log_responsibilities(x)
        r = np.exp(np.maximum(logr, _LOG_RESP_FLOOR))
        r[logr < _LOG_RESP_FLOOR] = 0.0
        return r

    # ------------------------------------------------------------------
    # Score and Hessian of the log-density
    # ------------------------------------------------------------------

    def _component_scores(self, xb: np.ndarray) -> np.ndarray:
        """g_k(x) = Sigma_k^{-1} (mu_k - x), shape (n, K, d)."""
        diff = self.means[None, :, :] - xb[:, None, :]
        if self.isotropic:
            return diff / self.variances[None, :, None]
        out = np.empty_like(diff)
        for k in range(self.n_components):
            out[:, k, :] = cho_solve((self._chol[k], True), diff[:, k, :].T).T
        return out

    def score(self, x: np.ndarray) -> np.ndarray:
        """Gradient of the log-density: sum_k r_k(x) Sigma_k^{-1}(mu_k - x)."""
        self._require_pd("score")
        xb, single = _as_batch(x, self.dim)
        r = self.responsibilities(xb)  # (n, K)
        g = self._component_scores(xb)  # (n, K, d)
        s = np.einsum("nk,nkd->nd", r, g)
        return s[0] if single else s

    def score_hvp(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Hessian-vector product H(x) v of the log-density.

        H = sum_k r_k (-Sigma_k^{-1} + g_k g_k^T) - s s^T, evaluated without
        materializing the d x d matrix.
        """
        self._require_pd("Hessian")
        xb, single = _as_batch(x, self.dim)
        vb, vsingle = _as_batch(v, self.dim)
        if xb.shape[0] != vb.shape[0]:
            if vb.shape[0] == 1:
                vb = np.broadcast_to(vb, xb.shape)
            else:
                raise ValueError("x and v batch sizes differ")
        r = self.responsibilities(xb)
        g = self._component_scores(xb)
        s = np.einsum("nk,nkd->nd", r, g)
        gv = np.einsum("nkd,nd->nk", g, vb)  # g_k . v
        rank1 = np.einsum("nk,nk,nkd->nd", r, gv, g)
        if self.isotropic:
            siv = np.einsum("nk,nd->nd", r / self.variances[None, :], vb)
        else:
            siv = np.zeros_like(vb)
            for k in range(self.n_components):
                solved = cho_solve((self._chol[k], True), vb.T).T
                siv += r[:, k:k + 1] * solved
        sv = np.einsum("nd,nd->n", s, vb)
        out = -siv + rank1 - s * sv[:, None]
        return out[0] if (single and vsingle) else out

    def hessian_log_density(self, x: np.ndarray) -> np.ndarray:
        """Dense Hessian of the log-density at a single point, shape (d, d)."""
        self._require_pd("Hessian")
        xb, _ = _as_batch(x, self.dim)
        if xb.shape[0] != 1:
            raise ValueError("hessian_log_density takes a single point")
        r = self.responsibilities(xb)[0]
        g = self._component_scores(xb)[0]  # (K, d)
        s = r @ g
        h = np.einsum("k,kd,ke->de", r, g, g) - np.outer(s, s)
        if self.isotropic:
            h -= np.sum(r / self.variances) * np.eye(self.dim)
        else:
            for k in range(self.n_components):
                h -= r[k] * cho_solve((self._chol[k], True), np.eye(self.dim))
        return h

    # ------------------------------------------------------------------
    # Sampling and moments
    # ------------------------------------------------------------------

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n i.i.d. draws: component by weight, then Gaussian via Cholesky."""
        self._require_pd("sampling")
        if n < 1:
            raise ValueError("n must be >= 1")
        ks = rng.choice(self.n_components, size=n, p=self.weights)
        eps = rng.standard_normal((n, self.dim))
        out = np.empty((n, self.dim))
        if self.isotropic:
            out = self.means[ks] + np.sqrt(self.variances[ks])[:, None] * eps
        else:
            for i, k in enumerate(ks):
                out[i] = self.means[k] + self._chol[k] @ eps[i]
        return out

    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def covariance(self) -> np.ndarray:
        """Full covariance of the mixture (law of total covariance)."""
        mu = self.mean()
        cov = np.zeros((self.dim, self.dim))
        for k in range(self.n_components):
            dk = self.means[k] - mu
            cov += self.weights[k] * (self.component_covariance(k) + np.outer(dk, dk))
        return cov

    # ------------------------------------------------------------------
    # Serialization (run-config schema)
    # ------------------------------------------------------------------

    def to_dict(self) -> dict:
        comps = []
        for k in range(self.n_components):
            if self.isotropic:
                cov = {"type": "iso", "value": float(self.variances[k])}
            else:
                cov = {"type": "dense", "value": self.covariances[k].tolist()}
            comps.append({
                "weight": float(self.weights[k]),
                "mean": self.means[k].tolist(),
                "cov": cov,
            })
        return {"dim": self.dim, "components": comps}

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianMixture":
        dim = int(data["dim"])
        comps = data["components"]
        weights = np.array([c["weight"] for c in comps], dtype=float)
        means = np.array([c["mean"] for c in comps], dtype=float)
        if means.shape != (len(comps), dim):
            raise ValueError("component mean dims do not match declared dim")
        kinds = {c["cov"]["type"] for c in comps}
        if kinds <= {"iso"}:
            var = np.array([c["cov"]["value"] for c in comps], dtype=float)
            return cls(means=means, weights=weights, variances=var)
        covs = []
        for c in comps:
            if c["cov"]["type"] == "iso":
                covs.append(float(c["cov"]["value"]) * np.eye(dim))
            elif c["cov"]["type"] == "dense":
                covs.append(np.asarray(c["cov"]["value"], dtype=float))
            else:
                raise ValueError(f"unknown covariance type {c['cov']['type']!r}")
        return cls(means=means, weights=weights, covariances=np.stack(covs))


def isotropic_mixture(means: Sequence[Sequence[float]] | np.ndarray,
                      variance: float | Sequence[float],
                      weights: Sequence[float] | None = None) -> GaussianMixture:
    """Convenience constructor for equal-variance isotropic mixtures."""
    means = np.atleast_2d(np.asarray(means, dtype=float))
    k = means.shape[0]
    var = np.broadcast_to(np.asarray(variance, dtype=float), (k,)).copy()
    if weights is None:
        weights = np.full(k, 1.0 / k)
    return GaussianMixture(means=means, weights=np.asarray(weights, dtype=float),
                           variances=var)
