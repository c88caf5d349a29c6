"""Measurement operators: application, transpose, and Jacobian contracts.

Images are flattened vectors with a declared grid layout; no pixel I/O.
Linear operators carry an explicit matrix so the adjoint is exact; the
nonlinear stand-in is a quadratic mixed map with an analytic Jacobian.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LinearOp",
    "QuadraticOp",
    "mask_op",
    "downsample_op",
    "gauss_blur_op",
    "quadratic_op",
    "operator_from_dict",
]


@dataclass(frozen=True)
class LinearOp:
    """y = A x with exact transpose; Jacobian is the constant A."""

    matrix: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2:
            raise ValueError("operator matrix must be 2-D")
        object.__setattr__(self, "matrix", m)

    @property
    def in_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def linear(self) -> bool:
        return True

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.in_dim:
            raise ValueError(f"operator expects dim {self.in_dim}, got {x.shape[-1]}")
        return x @ self.matrix.T

    def transpose_apply(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if r.shape[-1] != self.out_dim:
            raise ValueError(f"transpose expects dim {self.out_dim}, got {r.shape[-1]}")
        return r @ self.matrix

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return self.matrix

    def jacobian_t_apply(self, x: np.ndarray, r: np.ndarray) -> np.ndarray:
        return self.transpose_apply(r)

    def has_full_row_rank(self, tol: float = 1e-10) -> bool:
        s = np.linalg.svd(self.matrix, compute_uv=False)
        return s.size >= self.out_dim and s[self.out_dim - 1] > tol * max(1.0, s[0])


@dataclass(frozen=True)
class QuadraticOp:
    """Componentwise-quadratic mixed map f(x) = A x + c * (B x) ⊙ (B x).

    Nonlinear with an analytic Jacobian J(x) = A + 2c * diag(B x) B; serves
    as the desk-scale nonlinear measurement with the same contract as a
    learned blur.
    """

    a: np.ndarray
    b: np.ndarray
    c: float = 1.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.shape != b.shape:
            raise ValueError("A and B must have the same shape")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def in_dim(self) -> int:
        return self.a.shape[1]

    @property
    def out_dim(self) -> int:
        return self.a.shape[0]

    @property
    def linear(self) -> bool:
        return False

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.in_dim:
            raise ValueError(f"operator expects dim {self.in_dim}, got {x.shape[-1]}")
        bx = x @ self.b.T
        return x @ self.a.T + self.c * bx * bx

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        bx = self.b @ x
        return self.a + 2.0 * self.c * bx[:, None] * self.b

    def jacobian_t_apply(self, x: np.ndarray, r: np.ndarray) -> np.ndarray:
        """J(x)^T r, batched over leading axes of x (r matched)."""
        x = np.asarray(x, dtype=float)
        r = np.asarray(r, dtype=float)
        bx = x @ self.b.T
        return r @ self.a + 2.0 * self.c * (r * bx) @ self.b


def mask_op(dim: int, keep: list[int]) -> LinearOp:
    """Row-selection (inpainting) operator observing the `keep` coordinates."""
    keep = list(keep)
    if len(set(keep)) != len(keep):
        raise ValueError("mask coordinates must be distinct")
    if any(i < 0 or i >= dim for i in keep):
        raise ValueError("mask coordinate out of range")
    a = np.zeros((len(keep), dim))
    for row, i in enumerate(keep):
        a[row, i] = 1.0
    return LinearOp(a, meta={"kind": "mask", "keep": keep})


def downsample_op(grid: tuple[int, ...] | list[int], factor: int) -> LinearOp:
    """Average-pooling downsample on a 1-D or 2-D grid layout."""
    grid = tuple(int(g) for g in grid)
    if factor < 1:
        raise ValueError("factor must be >= 1")
    if any(g % factor for g in grid):
        raise ValueError(f"grid {grid} not divisible by factor {factor}")
    dim = int(np.prod(grid))
    if len(grid) == 1:
        (n,) = grid
        m = n // factor
        a = np.zeros((m, n))
        for i in range(m):
            a[i, i * factor:(i + 1) * factor] = 1.0 / factor
    elif len(grid) == 2:
        h, w = grid
        mh, mw = h // factor, w // factor
        a = np.zeros((mh * mw, h * w))
        for bi in range(mh):
            for bj in range(mw):
                row = bi * mw + bj
                for di in range(factor):
                    for dj in range(factor):
                        col = (bi * factor + di) * w + (bj * factor + dj)
                        a[row, col] = 1.0 / factor ** 2
    else:
        raise ValueError("downsample supports 1-D or 2-D grids")
    return LinearOp(a, meta={"kind": "downsample", "factor": factor, "grid": list(grid)})


def _gauss_kernel_1d(size: int, intensity: float) -> np.ndarray:
    if size < 1 or size % 2 == 0:
        raise ValueError("kernel size must be odd and positive")
    if intensity <= 0:
        # Degenerate kernel: identity.
        k = np.zeros(size)
        k[size // 2] = 1.0
        return k
    t = np.arange(size) - size // 2
    k = np.exp(-0.5 * (t / intensity) ** 2)
    return k / k.sum()


def gauss_blur_op(grid: tuple[int, ...] | list[int], size: int, intensity: float) -> LinearOp:
    """Circular-convolution Gaussian blur; circulant so the adjoint is exact."""
    grid = tuple(int(g) for g in grid)
    kern = _gauss_kernel_1d(size, intensity)
    half = size // 2

    def circ(n: int) -> np.ndarray:
        c = np.zeros((n, n))
        for i in range(n):
            for j, kv in enumerate(kern):
                c[i, (i + j - half) % n] += kv
        return c

    if len(grid) == 1:
        a = circ(grid[0])
    elif len(grid) == 2:
        h, w = grid
        a = np.kron(circ(h), circ(w))  # separable blur on the flattened grid
    else:
        raise ValueError("blur supports 1-D or 2-D grids")
    return LinearOp(a, meta={"kind": "gauss_blur", "size": size,
                             "intensity": intensity, "grid": list(grid)})


def quadratic_op(dim: int, out_dim: int | None = None, c: float = 0.5,
                 seed: int = 0) -> QuadraticOp:
    """Seeded random quadratic mixed map (the nonlinear measurement stand-in)."""
    rng = np.random.default_rng(seed)
    m = out_dim if out_dim is not None else dim
    a = rng.standard_normal((m, dim)) / np.sqrt(dim)
    b = rng.standard_normal((m, dim)) / np.sqrt(dim)
    return QuadraticOp(a=a, b=b, c=c, meta={"kind": "quad", "seed": seed, "c": c})


def operator_from_dict(cfg: dict, dim: int):
    """Build an operator from its run-config JSON fragment."""
    kind = cfg.get("kind")
    if kind == "mask":
        return mask_op(dim, cfg["keep"])
    if kind == "downsample":
        grid = cfg.get("grid", [dim])
        op = downsample_op(grid, cfg["factor"])
    elif kind == "gauss_blur":
        grid = cfg.get("grid", [dim])
        op = gauss_blur_op(grid, cfg["size"], cfg["intensity"])
    elif kind == "quad":
        return quadratic_op(dim, out_dim=cfg.get("out_dim"), c=cfg.get("c", 0.5),
                            seed=cfg.get("seed", 0))
    else:
        raise ValueError(f"unknown operator kind {kind!r}")
    if op.in_dim != dim:
        raise ValueError(f"operator grid {cfg.get('grid')} implies dim {op.in_dim}, "
                         f"but the prior has dim {dim}")
    return op
