"""Wigner functions of single-mode density operators on phase-space grids.

Internal quadrature convention: ``x = <a + a^dag>/sqrt(2)``, so vacuum has
variance 1/2 and a coherent amplitude ``alpha`` sits at
``(sqrt(2) Re alpha, sqrt(2) Im alpha)``. The ``"unscaled"`` convention
(``x = <a + a^dag>``) is available as an axis rescaling.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .fock import DensityOperator

CONVENTIONS = ("internal", "unscaled")
NORMALIZATION_WARN_TOL = 0.05


class WignerNormalizationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class WignerGrid:
    """``values[i, j] = W(x[i], p[j])`` on uniform axes."""

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        p = np.asarray(self.p, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (x.size, p.size):
            raise ValueError(f"values shape {v.shape} does not match axes ({x.size}, {p.size})")
        for name, ax in (("x", x), ("p", p)):
            if ax.size >= 3 and not np.allclose(np.diff(ax), ax[1] - ax[0], rtol=1e-6, atol=1e-12):
                raise ValueError(f"{name} axis is not uniform")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "values", v)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0]) if self.x.size > 1 else 1.0

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0]) if self.p.size > 1 else 1.0

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def integral(self) -> float:
        return float(self.values.sum() * self.dx * self.dp)

    def purity_estimate(self) -> float:
        """``2 pi * integral of W^2``, which equals ``Tr rho^2`` in the internal convention."""
        return float(2 * math.pi * (self.values**2).sum() * self.dx * self.dp)

    def rotated90(self) -> "WignerGrid":
        """Values of ``W(-p, x)`` on the same axes; requires a square grid symmetric about zero."""
        if not (np.allclose(self.x, -self.x[::-1]) and np.allclose(self.x, self.p)):
            raise ValueError("90 degree rotation needs identical axes symmetric about zero")
        # new[i, j] = W(-p_j, x_i) = values[N-1-j, i]
        return WignerGrid(self.x, self.p, np.rot90(self.values, k=-1))

    def rotation_residual(self) -> float:
        return float(np.max(np.abs(self.values - self.rotated90().values)))


def default_axis(half_width: float = 6.0, points: int = 201) -> np.ndarray:
    return np.linspace(-half_width, half_width, points)


def _laguerre_wigner(matrix: np.ndarray, x: np.ndarray, p: np.ndarray) -> np.ndarray:
    # Iterative form of the cross-Wigner kernels: each Wl[n] holds the
    # current row of (-1)^m sqrt(m!/n!) (2A)^(n-m) L_m^(n-m)(4|A|^2) e^{-2|A|^2}/pi.
    X, P = np.meshgrid(x, p, indexing="ij")
    A = (X + 1j * P) / math.sqrt(2)
    dim = matrix.shape[0]
    wl = [None] * dim
    wl[0] = np.exp(-2.0 * np.abs(A) ** 2) / math.pi
    W = matrix[0, 0] * wl[0]
    for n in range(1, dim):
        wl[n] = 2.0 * A * wl[n - 1] / math.sqrt(n)
        W = W + 2.0 * matrix[0, n] * wl[n]
    for m in range(1, dim):
        temp = wl[m]
        wl[m] = (2.0 * np.conj(A) * temp - math.sqrt(m) * wl[m - 1]) / math.sqrt(m)
        W = W + matrix[m, m] * wl[m]
        for n in range(m + 1, dim):
            nxt = (2.0 * A * wl[n - 1] - math.sqrt(m) * temp) / math.sqrt(n)
            temp = wl[n]
            wl[n] = nxt
            W = W + 2.0 * matrix[m, n] * wl[n]
    return W


def wigner_of_density(
    rho: DensityOperator | np.ndarray,
    x: np.ndarray | None = None,
    p: np.ndarray | None = None,
    convention: str = "internal",
    check_normalization: bool = True,
) -> WignerGrid:
    """Wigner function of ``rho`` on the grid ``x`` by ``p``.

    With ``convention="unscaled"`` the axes are read as ``x = <a + a^dag>``;
    values are rescaled so that the grid still integrates to one.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    matrix = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    x = default_axis() if x is None else np.asarray(x, dtype=float)
    p = x if p is None else np.asarray(p, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))):
        raise ValueError("grid axes must be finite")
    scale = math.sqrt(2) if convention == "unscaled" else 1.0
    if np.max(np.abs(matrix - matrix.conj().T), initial=0.0) > 1e-10:
        raise ValueError("rho must be Hermitian")
    # The upper-triangle sum pairs each coherence with its conjugate, so the
    # real part is the full Wigner function.
    raw = _laguerre_wigner(matrix, x / scale, p / scale).real / scale**2
    grid = WignerGrid(x, p, raw)
    if check_normalization and x.size > 1 and p.size > 1:
        total = grid.integral() / (np.trace(matrix).real or 1.0)
        if abs(total - 1.0) > NORMALIZATION_WARN_TOL:
            warnings.warn(
                f"Wigner grid integrates to {total:.3f}; widen or refine the grid",
                WignerNormalizationWarning,
                stacklevel=2,
            )
    return grid


@dataclass(frozen=True)
class WignerMetrics:
    w_min: float
    w_max: float
    argmin: tuple[float, float]
    argmax: tuple[float, float]
    visibility: float
    negativity_volume: float

    def as_dict(self) -> dict:
        return {
            "w_min": self.w_min,
            "w_max": self.w_max,
            "argmin": list(self.argmin),
            "argmax": list(self.argmax),
            "visibility": self.visibility,
            "negativity_volume": self.negativity_volume,
        }


def wigner_metrics(grid: WignerGrid) -> WignerMetrics:
    v = grid.values
    if v.size == 0:
        raise ValueError("empty Wigner grid")
    i_min = np.unravel_index(np.argmin(v), v.shape)
    i_max = np.unravel_index(np.argmax(v), v.shape)
    w_min = float(v[i_min])
    w_max = float(v[i_max])
    vis = abs(w_min / w_max) if w_max > 0 else math.inf
    neg = float(np.abs(v[v < 0]).sum() * grid.dx * grid.dp)
    return WignerMetrics(
        w_min,
        w_max,
        (float(grid.x[i_min[0]]), float(grid.p[i_min[1]])),
        (float(grid.x[i_max[0]]), float(grid.p[i_max[1]])),
        vis,
        neg,
    )
