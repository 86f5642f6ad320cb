"""Truncated Fock-space linear algebra.

States are plain numpy vectors wrapped in small frozen dataclasses. Multimode
states use a row-major flat index over the layout order, so occupation
``(n_0, n_1, ..., n_k)`` of dims ``(d_0, ..., d_k)`` sits at
``((n_0 * d_1 + n_1) * d_2 + n_2) ...``, the same order as ``np.ravel``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import TruncationError

DEFAULT_TRUNCATION_TOL = 1e-6
HERMITIAN_TOL = 1e-10
POSITIVITY_TOL = 1e-8


def suggest_cutoff(amplitude: complex) -> int:
    """Heuristic cutoff ``ceil(|a|^2 + 6|a| + 10)``."""
    r = abs(amplitude)
    return int(math.ceil(r * r + 6 * r + 10))


def truncation_deficit(amplitude: complex, cutoff: int) -> float:
    """Probability of a coherent state lying above ``cutoff`` (Poisson tail)."""
    return float(poisson.sf(cutoff, abs(amplitude) ** 2))


def required_cutoff(amplitude: complex, tol: float = DEFAULT_TRUNCATION_TOL) -> int:
    mean = abs(amplitude) ** 2
    return int(poisson.isf(tol, mean)) + 1 if mean > 0 else 0


@dataclass(frozen=True)
class ModeLayout:
    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        if len(self.dims) != len(self.labels):
            raise ValueError("dims and labels must have equal length")
        if any(d < 1 for d in self.dims):
            raise ValueError(f"every mode dimension must be >= 1, got {self.dims}")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"mode labels must be unique, got {self.labels}")

    @property
    def size(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown mode label {label!r}; layout has {self.labels}") from None

    def flat_index(self, occupation: Sequence[int]) -> int:
        if len(occupation) != len(self.dims):
            raise ValueError("occupation length does not match layout")
        for n, d in zip(occupation, self.dims):
            if not 0 <= n < d:
                raise IndexError(f"occupation {tuple(occupation)} outside dims {self.dims}")
        return int(np.ravel_multi_index(tuple(occupation), self.dims))

    def occupation(self, index: int) -> tuple[int, ...]:
        return tuple(int(n) for n in np.unravel_index(index, self.dims))


@dataclass(frozen=True)
class Ket:
    """Normalized single-mode pure state; ``deficit`` is the probability lost to truncation."""

    amplitudes: np.ndarray
    deficit: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", np.asarray(self.amplitudes, dtype=complex))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class MultiModeState:
    layout: ModeLayout
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != self.layout.size:
            raise ValueError(f"expected {self.layout.size} amplitudes, got {amps.shape[0]}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per mode."""
        return self.amplitudes.reshape(self.layout.dims)

    def amplitude(self, occupation: Sequence[int]) -> complex:
        return complex(self.amplitudes[self.layout.flat_index(occupation)])


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian operator on one truncated Fock space.

    Construction checks Hermiticity only; ``trace`` may differ from one for
    unnormalized partial traces. ``is_physical`` performs the full check.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        herm = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
        scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
        if herm > HERMITIAN_TOL * scale:
            raise ValueError(f"matrix is not Hermitian (max |rho - rho^H| = {herm:.2e})")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def normalized(self) -> "DensityOperator":
        tr = self.trace
        if tr <= 0:
            raise ValueError("cannot normalize an operator with non-positive trace")
        return DensityOperator(self.matrix / tr)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def is_physical(self, tol: float = POSITIVITY_TOL) -> bool:
        return abs(self.trace - 1.0) < 1e-8 and self.eigenvalues().min() >= -tol

    def photon_distribution(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()

    def mean_photon_number(self) -> float:
        return float(np.arange(self.dim) @ self.photon_distribution() / self.trace)

    def padded(self, dim: int) -> "DensityOperator":
        if dim < self.dim:
            raise ValueError("can only pad to a larger dimension")
        out = np.zeros((dim, dim), dtype=complex)
        out[: self.dim, : self.dim] = self.matrix
        return DensityOperator(out)


def coherent_amplitudes(amplitude: complex, cutoff: int) -> np.ndarray:
    """Unnormalized-by-truncation coherent amplitudes ``c_n``, ``n = 0..cutoff``."""
    n = np.arange(cutoff + 1)
    r = abs(amplitude)
    if r == 0:
        out = np.zeros(cutoff + 1, dtype=complex)
        out[0] = 1.0
        return out
    log_mag = -0.5 * r * r + n * math.log(r) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(amplitude))


def coherent_state(amplitude: complex, cutoff: int, tol: float = DEFAULT_TRUNCATION_TOL) -> Ket:
    """Coherent state ``|amplitude>`` on ``0..cutoff``, renormalized after truncation."""
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    amplitude = complex(amplitude)
    if not np.isfinite(amplitude):
        raise ValueError("amplitude must be finite")
    deficit = truncation_deficit(amplitude, cutoff)
    if deficit > tol:
        raise TruncationError(amplitude, cutoff, deficit, required_cutoff(amplitude, tol))
    c = coherent_amplitudes(amplitude, cutoff)
    return Ket(c / np.linalg.norm(c), deficit)


def fock_state(n: int, cutoff: int) -> Ket:
    if not 0 <= n <= cutoff:
        raise ValueError(f"Fock index {n} outside 0..{cutoff}")
    c = np.zeros(cutoff + 1, dtype=complex)
    c[n] = 1.0
    return Ket(c)


def tensor(states: Iterable[Ket | np.ndarray], labels: Sequence[str] | None = None) -> MultiModeState:
    vecs = [s.amplitudes if isinstance(s, Ket) else np.asarray(s, dtype=complex) for s in states]
    if not vecs:
        raise ValueError("tensor needs at least one factor")
    if labels is None:
        labels = [f"m{i}" for i in range(len(vecs))]
    layout = ModeLayout(tuple(v.shape[0] for v in vecs), tuple(labels))
    amps = vecs[0]
    for v in vecs[1:]:
        amps = np.kron(amps, v)
    return MultiModeState(layout, amps)


def reduce_density(matrix: np.ndarray, layout: ModeLayout, keep: Sequence[str]) -> tuple[np.ndarray, ModeLayout]:
    """Trace a full multimode density matrix down to the modes in ``keep``.

    The kept modes retain their layout order.
    """
    keep_axes = sorted(layout.axis(k) for k in keep)
    n = len(layout.dims)
    t = np.asarray(matrix).reshape(layout.dims + layout.dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters):
        raise ValueError("too many modes for einsum-based reduction")
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for ax in range(n):
        if ax not in keep_axes:
            col[ax] = row[ax]
    out = "".join(row[a] for a in keep_axes) + "".join(col[a] for a in keep_axes)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    kept = ModeLayout(tuple(layout.dims[a] for a in keep_axes), tuple(layout.labels[a] for a in keep_axes))
    return reduced.reshape(kept.size, kept.size), kept


def partial_trace(state: MultiModeState | tuple[np.ndarray, ModeLayout], keep: str) -> DensityOperator:
    """Reduced operator of mode ``keep``; its trace equals the input norm.

    Accepts a pure multimode state or a ``(density_matrix, layout)`` pair.
    """
    if isinstance(state, MultiModeState):
        layout = state.layout
        ax = layout.axis(keep)
        psi = np.moveaxis(state.tensor(), ax, 0).reshape(layout.dims[ax], -1)
        return DensityOperator(psi @ psi.conj().T)
    matrix, layout = state
    layout.axis(keep)
    reduced, _ = reduce_density(matrix, layout, [keep])
    return DensityOperator(reduced)


def purity(rho: DensityOperator) -> float:
    m = rho.matrix
    # Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
    return float(np.sum(np.abs(m) ** 2).real)


def fidelity_with_pure(rho: DensityOperator, psi: Ket | np.ndarray) -> float:
    v = psi.amplitudes if isinstance(psi, Ket) else np.asarray(psi, dtype=complex)
    if v.shape[0] != rho.dim:
        raise ValueError(f"dimension mismatch: rho is {rho.dim}, psi is {v.shape[0]}")
    return float(np.vdot(v, rho.matrix @ v).real)
