"""Simulated homodyne detection and inverse-Radon reconstruction.

Outcomes are eigenvalues of the truncated quadrature operator
``x(phi) = (a e^{i phi} + a^dag e^{-i phi}) / sqrt(2)``. Because
``x(phi) = U x(0) U^dag`` with ``U = diag(e^{-i n phi})``, the spectrum is
phase independent and only the eigenvectors pick up phases.

The ``"unscaled"`` convention multiplies outcomes by ``sqrt(2)`` so that
``x = <a + a^dag>``; reconstructions from such traces should be compared with
``wigner_of_density(..., convention="unscaled")``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import NumericalError
from .fock import DensityOperator
from .wigner import CONVENTIONS, WignerGrid

VARIANTS = ("per-sample", "per-angle-mean")
NORMALIZATIONS = ("unit", "pi-squared")
_SERIES_SWITCH = 0.1
_SERIES_TERMS = 8
_PROBABILITY_TOL = 1e-6


@dataclass(frozen=True)
class QuadratureEigensystem:
    phase: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def operator(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def quadrature_operator(phase: float, cutoff: int) -> np.ndarray:
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    a = np.diag(np.sqrt(np.arange(1, cutoff + 1)), 1).astype(complex)
    return (a * np.exp(1j * phase) + a.conj().T * np.exp(-1j * phase)) / math.sqrt(2)


@lru_cache(maxsize=64)
def _real_eigensystem(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    off = np.sqrt(np.arange(1, cutoff + 1) / 2.0)
    vals, vecs = eigh_tridiagonal(np.zeros(cutoff + 1), off)
    vals.setflags(write=False)
    vecs.setflags(write=False)
    return vals, vecs


def quadrature_eigensystem(phase: float, cutoff: int) -> QuadratureEigensystem:
    """Eigen-decomposition of ``x(phase)`` on ``0..cutoff``; eigenvalues ascending."""
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    vals, vecs = _real_eigensystem(int(cutoff))
    phases = np.exp(-1j * phase * np.arange(cutoff + 1))
    return QuadratureEigensystem(float(phase), vals.copy(), phases[:, None] * vecs)


def uniform_phases(n_phi: int) -> np.ndarray:
    """``n_phi`` angles ``m pi / n_phi`` covering ``[0, pi)``."""
    if n_phi < 1:
        raise ValueError("need at least one phase")
    return np.arange(n_phi) * math.pi / n_phi


@dataclass(frozen=True)
class HomodyneTrace:
    phases: np.ndarray
    outcomes: np.ndarray
    seed: int | None
    state_descriptor: str = ""
    convention: str = "internal"

    def __post_init__(self):
        phases = np.asarray(self.phases, dtype=float)
        outcomes = np.asarray(self.outcomes, dtype=float)
        if outcomes.ndim != 2 or outcomes.shape[0] != phases.size:
            raise ValueError("outcomes must have one row per phase")
        if np.any(phases < 0) or np.any(phases >= math.pi):
            raise ValueError("phases must lie in [0, pi)")
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "outcomes", outcomes)

    @property
    def n_phi(self) -> int:
        return self.phases.size

    @property
    def n_shots(self) -> int:
        return self.outcomes.shape[1]

    def records(self):
        return list(zip(self.phases, self.outcomes))


def outcome_probabilities(rho: DensityOperator, eig: QuadratureEigensystem) -> np.ndarray:
    v = eig.eigenvectors
    probs = np.einsum("im,ij,jm->m", v.conj(), rho.matrix, v).real
    total = probs.sum()
    if abs(total - 1.0) > _PROBABILITY_TOL:
        raise NumericalError(f"quadrature probabilities sum to {total:.8f}, expected 1")
    return np.clip(probs, 0.0, None) / np.clip(probs, 0.0, None).sum()


def sample_homodyne(
    rho: DensityOperator,
    phases: np.ndarray | int,
    n_shots: int,
    seed: int | None = None,
    convention: str = "internal",
    state_descriptor: str = "",
) -> HomodyneTrace:
    """Draw ``n_shots`` quadrature outcomes per phase.

    Each phase uses its own generator spawned from ``seed``, so traces are
    reproducible and independent of evaluation order.
    """
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    if isinstance(phases, (int, np.integer)):
        phases = uniform_phases(int(phases))
    phases = np.asarray(phases, dtype=float)
    cutoff = rho.dim - 1
    streams = np.random.SeedSequence(seed).spawn(phases.size)
    scale = math.sqrt(2) if convention == "unscaled" else 1.0
    out = np.empty((phases.size, n_shots))
    for k, (phi, ss) in enumerate(zip(phases, streams)):
        eig = quadrature_eigensystem(phi, cutoff)
        probs = outcome_probabilities(rho, eig)
        rng = np.random.default_rng(ss)
        out[k] = scale * rng.choice(eig.eigenvalues, size=n_shots, p=probs)
    return HomodyneTrace(phases, out, seed, state_descriptor, convention)


def radon_kernel(z, k_c: float):
    """``K(z) = integral_0^{k_c} xi cos(xi z) d xi``, evaluated in closed form.

    An even power series replaces the closed form where ``|k_c z|`` is small.
    """
    if not k_c > 0:
        raise ValueError("k_c must be > 0")
    z = np.asarray(z, dtype=float)
    u = k_c * z
    small = np.abs(u) < _SERIES_SWITCH
    out = np.empty_like(z)
    us = u[~small]
    zs = z[~small]
    out[~small] = (us * np.sin(us) + np.cos(us) - 1.0) / zs**2
    u2 = u[small] ** 2
    acc = np.zeros_like(u2)
    term = np.ones_like(u2)
    # k_c^2 * sum_k (-1)^k u^{2k} / ((2k)! (2k+2))
    for k in range(_SERIES_TERMS):
        acc += term / (2 * k + 2)
        term = -term * u2 / ((2 * k + 1) * (2 * k + 2))
    out[small] = k_c**2 * acc
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class RadonConfig:
    """Reconstruction settings.

    ``normalization="unit"`` makes the reconstruction integrate to one;
    ``"pi-squared"`` uses ``1 / (2 pi^2 N_phi N_shots)``, a factor ``1/pi`` below it.
    """

    k_c: float = 2.0
    x: np.ndarray = field(default_factory=lambda: np.linspace(-6, 6, 121))
    p: np.ndarray | None = None
    variant: str = "per-sample"
    normalization: str = "unit"

    def __post_init__(self):
        if not (self.k_c > 0 and math.isfinite(self.k_c)):
            raise ValueError("k_c must be finite and > 0")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "p", self.x if self.p is None else np.asarray(self.p, dtype=float))

    @property
    def prefactor(self) -> float:
        return 1 / (2 * math.pi) if self.normalization == "unit" else 1 / (2 * math.pi**2)


def inverse_radon(trace: HomodyneTrace, config: RadonConfig) -> WignerGrid:
    """Filtered back-projection of a homodyne trace onto the config grid."""
    if trace.n_phi == 0 or trace.n_shots == 0:
        raise ValueError("empty homodyne trace")
    X, P = np.meshgrid(config.x, config.p, indexing="ij")
    W = np.zeros_like(X)
    for phi, samples in trace.records():
        proj = X * math.cos(phi) + P * math.sin(phi)
        if config.variant == "per-sample":
            # Outcomes repeat (finite spectrum), so group identical values.
            values, counts = np.unique(samples, return_counts=True)
            for v, c in zip(values, counts):
                W += c * radon_kernel(proj - v, config.k_c)
        else:
            W += trace.n_shots * radon_kernel(proj - samples.mean(), config.k_c)
    W *= config.prefactor / (trace.n_phi * trace.n_shots)
    return WignerGrid(config.x, config.p, W)


def frobenius_similarity(a: WignerGrid | np.ndarray, b: WignerGrid | np.ndarray) -> float:
    """Inner product of the two matrices after scaling each to unit Frobenius norm."""
    va = a.values if isinstance(a, WignerGrid) else np.asarray(a, dtype=float)
    vb = b.values if isinstance(b, WignerGrid) else np.asarray(b, dtype=float)
    if va.shape != vb.shape:
        raise ValueError(f"grid shapes differ: {va.shape} vs {vb.shape}")
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0 or nb == 0:
        raise ValueError("cannot normalize a zero matrix")
    return float(np.sum(va * vb) / (na * nb))
