"""Noise schedules: variance-preserving (DDPM) and Karras (VE) paths.

Both expose the same per-index (a, sigma) marginal interface plus
per-transition parameters, so the probability engine and the samplers
never branch on the path family.

Index conventions follow each family's own literature:

* VP uses a time index t in [0, T]; t = 0 is clean (abar_0 = 1) and a
  transition t >= 1 moves from x_t to x_{t-1}.
* Karras uses the grid index i in [0, N-1]; sigma_0 = sigma_max and a
  transition i >= 1 moves from grid level i-1 down to level i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffusion import DiffusionScaling

__all__ = [
    "TransitionParams",
    "VpSchedule",
    "KarrasSchedule",
    "make_vp_linear",
    "make_karras",
    "schedule_from_dict",
]


@dataclass(frozen=True)
class TransitionParams:
    """Parameters of one reverse transition.

    VP: mean_coeff = 1/sqrt(alpha_t), score_coeff = beta_t/sqrt(alpha_t),
    sigma_trans = posterior noise. Karras: sigma_up/sigma_down split of the
    ancestral step (sigma_up^2 + sigma_down^2 = target sigma^2);
    sigma_trans = sigma_up.
    """

    mean_coeff: float
    score_coeff: float
    sigma_trans: float
    sigma_up: float
    sigma_down: float


@dataclass(frozen=True)
class VpSchedule:
    """DDPM forward chain x_t = sqrt(1-beta_t) x_{t-1} + sqrt(beta_t) eps."""

    betas: np.ndarray  # (T,), betas[t-1] is the step-t value

    def __post_init__(self):
        b = np.asarray(self.betas, dtype=float).ravel()
        if b.size < 1 or np.any(b <= 0) or np.any(b >= 1):
            raise ValueError("betas must lie strictly in (0, 1)")
        object.__setattr__(self, "betas", b)
        abar = np.concatenate([[1.0], np.cumprod(1.0 - b)])
        object.__setattr__(self, "_abar", abar)
        if np.any(np.diff(abar) >= 0):
            raise ValueError("alpha_bar must be strictly decreasing")

    @property
    def kind(self) -> str:
        return "vp"

    @property
    def T(self) -> int:
        return self.betas.size

    @property
    def n_steps(self) -> int:
        return self.T

    @property
    def alpha_bars(self) -> np.ndarray:
        """abar[t] for t = 0..T, with abar[0] = 1 by convention."""
        return self._abar

    def beta(self, t: int) -> float:
        if not 1 <= t <= self.T:
            raise IndexError(f"step t={t} outside [1, {self.T}]")
        return float(self.betas[t - 1])

    def alpha(self, t: int) -> float:
        return 1.0 - self.beta(t)

    def scaling_at(self, t: int) -> DiffusionScaling:
        if not 0 <= t <= self.T:
            raise IndexError(f"index t={t} outside [0, {self.T}]")
        abar = self._abar[t]
        return DiffusionScaling(a=float(np.sqrt(abar)),
                                sigma=float(np.sqrt(1.0 - abar)), kind="vp")

    def step_indices(self) -> range:
        """Transition indices in sampling order (noisiest first)."""
        return range(self.T, 0, -1)

    def source_index(self, step: int) -> int:
        return step

    def target_index(self, step: int) -> int:
        return step - 1

    def initial_scaling(self) -> DiffusionScaling:
        return self.scaling_at(self.T)

    def transition_params(self, t: int) -> TransitionParams:
        if t < 1:
            raise ValueError("transitions are indexed from t = 1")
        beta = self.beta(t)
        alpha = 1.0 - beta
        abar_t = self._abar[t]
        abar_prev = self._abar[t - 1]
        # DDPM posterior variance (1 - abar_{t-1}) / (1 - abar_t) * beta_t
        sigma2 = (1.0 - abar_prev) / (1.0 - abar_t) * beta
        sig = float(np.sqrt(sigma2))
        return TransitionParams(
            mean_coeff=float(1.0 / np.sqrt(alpha)),
            score_coeff=float(beta / np.sqrt(alpha)),
            sigma_trans=sig, sigma_up=sig, sigma_down=0.0,
        )


@dataclass(frozen=True)
class KarrasSchedule:
    """sigma grid sigma_i = (smax^(1/rho) + (i/(N-1))(smin^(1/rho) - smax^(1/rho)))^rho."""

    sigmas: np.ndarray  # (N,), strictly decreasing
    rho: float

    def __post_init__(self):
        s = np.asarray(self.sigmas, dtype=float).ravel()
        if s.size < 2 or np.any(np.diff(s) >= 0) or s[-1] <= 0:
            raise ValueError("sigma grid must be strictly decreasing and positive")
        object.__setattr__(self, "sigmas", s)

    @property
    def kind(self) -> str:
        return "karras"

    @property
    def N(self) -> int:
        return self.sigmas.size

    @property
    def n_steps(self) -> int:
        return self.N - 1

    @property
    def sigma_max(self) -> float:
        return float(self.sigmas[0])

    @property
    def sigma_min(self) -> float:
        return float(self.sigmas[-1])

    def scaling_at(self, i: int) -> DiffusionScaling:
        if not 0 <= i < self.N:
            raise IndexError(f"index i={i} outside [0, {self.N - 1}]")
        return DiffusionScaling(a=1.0, sigma=float(self.sigmas[i]), kind="ve")

    def step_indices(self) -> range:
        """Transition indices in sampling order: into grid levels 1..N-1."""
        return range(1, self.N)

    def source_index(self, step: int) -> int:
        return step - 1

    def target_index(self, step: int) -> int:
        return step

    def initial_scaling(self) -> DiffusionScaling:
        return self.scaling_at(0)

    def transition_params(self, i: int) -> TransitionParams:
        """Ancestral split for the transition from grid level i-1 to i."""
        if i < 1:
            raise ValueError("transitions are indexed from i = 1")
        if i >= self.N:
            raise IndexError(f"transition i={i} outside [1, {self.N - 1}]")
        s_from = float(self.sigmas[i - 1])
        s_to = float(self.sigmas[i])
        up2 = s_to ** 2 * (s_from ** 2 - s_to ** 2) / s_from ** 2
        up = float(np.sqrt(max(up2, 0.0)))
        down = float(np.sqrt(max(s_to ** 2 - up2, 0.0)))
        return TransitionParams(mean_coeff=1.0, score_coeff=0.0,
                                sigma_trans=up, sigma_up=up, sigma_down=down)


def make_vp_linear(T: int, beta_start: float, beta_end: float) -> VpSchedule:
    """Linearly spaced betas in [beta_start, beta_end]."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if not (0 < beta_start <= beta_end < 1):
        raise ValueError("need 0 < beta_start <= beta_end < 1")
    return VpSchedule(betas=np.linspace(beta_start, beta_end, T))


def make_karras(N: int, sigma_min: float, sigma_max: float, rho: float) -> KarrasSchedule:
    if N < 2:
        raise ValueError("N must be >= 2")
    if not (0 < sigma_min < sigma_max):
        raise ValueError("need 0 < sigma_min < sigma_max")
    if rho <= 0:
        raise ValueError("rho must be > 0")
    ramp = np.arange(N) / (N - 1)
    inv_max = sigma_max ** (1.0 / rho)
    inv_min = sigma_min ** (1.0 / rho)
    sigmas = (inv_max + ramp * (inv_min - inv_max)) ** rho
    return KarrasSchedule(sigmas=sigmas, rho=float(rho))


def schedule_from_dict(cfg: dict) -> VpSchedule | KarrasSchedule:
    """Build a schedule from its run-config JSON fragment."""
    kind = cfg.get("kind")
    if kind == "vp_linear":
        beta = cfg.get("beta", [1e-4, 0.02])
        return make_vp_linear(cfg.get("T", 500), beta[0], beta[1])
    if kind == "karras":
        return make_karras(cfg.get("N", 100), cfg.get("sigma_min", 0.002),
                           cfg.get("sigma_max", 4.0), cfg.get("rho", 7.0))
    raise ValueError(f"unknown schedule kind {kind!r}")
