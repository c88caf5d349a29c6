"""Analytic lab for diffusion-guided inverse-problem solvers on
Gaussian-mixture priors: closed-form scores, exact conditioning, guided
samplers, and seeded diagnostics."""

__version__ = "0.1.0"

from .diffusion import DiffusionScaling, diffuse, posterior_mean
from .mixture import GaussianMixture, isotropic_mixture

__all__ = [
    "__version__",
    "GaussianMixture",
    "isotropic_mixture",
    "DiffusionScaling",
    "diffuse",
    "posterior_mean",
]
