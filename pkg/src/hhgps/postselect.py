"""Energy-conservation post-selection on the multimode HHG output state.

Mode order is always ``t`` (transmitted IR, tomographed), ``r`` (reflected IR,
photon-counted), then one mode per harmonic labelled ``q<order>``. Every photon
balance is expressed in quanta of the driving frequency.

The measured diagonal is ``n_r + sum_q kappa_q m_q ~= c``; for each admitted
tuple the transmitted photon number is pinned, exactly or through a Gaussian
weight, to ``n0 - sum_q q m_q - n_r`` using the true harmonic orders ``q``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DegenerateSelectionError, EmptySelectionError
from .fock import (
    DEFAULT_TRUNCATION_TOL,
    DensityOperator,
    ModeLayout,
    MultiModeState,
    coherent_state,
    suggest_cutoff,
    tensor,
)

_BAND_EPS = 1e-9
_CHUNK = 4096


@dataclass(frozen=True)
class Harmonic:
    order: int
    chi: complex


@dataclass(frozen=True)
class HHGOutputSpec:
    """Coherent amplitudes after HHG and the 50:50 split of the IR field."""

    alpha: complex
    delta_alpha: complex
    harmonics: tuple[Harmonic, ...]
    layout: ModeLayout

    def __post_init__(self):
        orders = [h.order for h in self.harmonics]
        if any(q < 1 for q in orders):
            raise ValueError(f"harmonic orders must be positive integers, got {orders}")
        if any(b <= a for a, b in zip(orders, orders[1:])):
            raise ValueError(f"harmonic orders must be strictly increasing, got {orders}")
        expected = ("t", "r") + tuple(f"q{q}" for q in orders)
        if self.layout.labels != expected:
            raise ValueError(f"layout labels {self.layout.labels} do not match modes {expected}")

    @classmethod
    def make(
        cls,
        alpha: complex,
        delta_alpha: complex,
        orders: Sequence[int] = (13, 15),
        chis: Sequence[complex] | None = None,
        cutoff_t: int | None = None,
        cutoff_r: int | None = None,
        cutoff_q: int | Sequence[int] | None = None,
    ) -> "HHGOutputSpec":
        """Build a spec; ``chis`` default to ``|delta_alpha| / sqrt(q)``."""
        orders = tuple(int(q) for q in orders)
        if any(q < 1 for q in orders):
            raise ValueError(f"harmonic orders must be positive integers, got {list(orders)}")
        if chis is None:
            chis = tuple(abs(delta_alpha) / math.sqrt(q) for q in orders)
        if len(chis) != len(orders):
            raise ValueError("need one chi per harmonic order")
        ir = (alpha + delta_alpha) / math.sqrt(2)
        ct = cutoff_t if cutoff_t is not None else suggest_cutoff(ir)
        cr = cutoff_r if cutoff_r is not None else suggest_cutoff(ir)
        if cutoff_q is None or isinstance(cutoff_q, (int, np.integer)):
            cq = [cutoff_q if cutoff_q is not None else suggest_cutoff(x) for x in chis]
        else:
            cq = list(cutoff_q)
        harmonics = tuple(Harmonic(q, complex(x)) for q, x in zip(orders, chis))
        labels = ("t", "r") + tuple(f"q{q}" for q in orders)
        layout = ModeLayout((ct + 1, cr + 1) + tuple(c + 1 for c in cq), labels)
        return cls(complex(alpha), complex(delta_alpha), harmonics, layout)

    @property
    def n0(self) -> float:
        return abs(self.alpha) ** 2

    @property
    def ir_amplitude(self) -> complex:
        return (self.alpha + self.delta_alpha) / math.sqrt(2)

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(h.order for h in self.harmonics)

    @property
    def cutoff_t(self) -> int:
        return self.layout.dims[0] - 1

    def mode_amplitudes(self) -> tuple[complex, ...]:
        ir = self.ir_amplitude
        return (ir, ir) + tuple(h.chi for h in self.harmonics)


def default_c(n0: float) -> int:
    """Integer part of ``n0 / 2``: the reflected photon count on the ``m_q = 0`` boundary."""
    return int(math.floor(n0 / 2 + _BAND_EPS))


@dataclass(frozen=True)
class PostSelectionSpec:
    """Diagonal rule and transmitted-mode weighting.

    ``sigma=None`` selects the exact (Kronecker) rule. ``band`` is the
    admission half-width around ``c``; ``band_sigmas`` optionally widens it to
    ``band_sigmas * sigma`` in the Gaussian case.
    """

    kappas: tuple[float, ...]
    c: float
    n0: float
    sigma: float | None = None
    efficiency: float = 1.0
    weight_floor: float = 1e-8
    band: float = 0.5
    band_sigmas: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kappas", tuple(float(k) for k in self.kappas))
        if any(k < 0 for k in self.kappas):
            raise ValueError("diagonal slopes must be non-negative")
        if self.c < 0:
            raise ValueError("diagonal constant c must be >= 0")
        if self.sigma is not None and not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError("sigma must be finite and > 0, or None for the exact rule")
        if not 0 < self.efficiency <= 1:
            raise ValueError(f"efficiency must lie in (0, 1], got {self.efficiency}")
        if self.band < 0:
            raise ValueError("band must be >= 0")

    @classmethod
    def for_output(
        cls,
        hhg: HHGOutputSpec,
        kappas: Sequence[float] | None = None,
        sigma: float | str | None = "auto",
        c: float | None = None,
        **kwargs,
    ) -> "PostSelectionSpec":
        """Defaults: ``kappa_q = q``, ``c = floor(n0/2)``, ``sigma = sqrt(n0/2)``."""
        n0 = hhg.n0
        if kappas is None:
            kappas = hhg.orders
        if sigma == "auto":
            sigma = math.sqrt(n0 / 2) if n0 > 0 else 1.0
        return cls(tuple(kappas), default_c(n0) if c is None else c, n0, sigma, **kwargs)

    @property
    def exact(self) -> bool:
        return self.sigma is None

    @property
    def effective_kappas(self) -> tuple[float, ...]:
        return tuple(self.efficiency * k for k in self.kappas)

    @property
    def half_width(self) -> float:
        if self.sigma is None or self.band_sigmas is None:
            return self.band
        return max(self.band, self.band_sigmas * self.sigma)


@dataclass(frozen=True)
class DiagonalTuple:
    n_r: int
    ms: tuple[int, ...]
    target: float
    support: np.ndarray
    weights: np.ndarray

    def weight_profile(self) -> dict[int, float]:
        return {int(n): float(w) for n, w in zip(self.support, self.weights)}


@dataclass(frozen=True)
class DiagonalSet:
    tuples: tuple[DiagonalTuple, ...]
    labels: tuple[str, ...]
    cutoff_t: int
    dropped: int = 0

    @property
    def empty(self) -> bool:
        return not self.tuples

    def __len__(self) -> int:
        return len(self.tuples)

    def keys(self) -> list[tuple[int, ...]]:
        return [(t.n_r,) + t.ms for t in self.tuples]


def enumerate_diagonal(hhg: HHGOutputSpec, ps: PostSelectionSpec) -> DiagonalSet:
    """All ``(n_r, m_q)`` within the band and their transmitted-mode weights.

    An empty result is returned as an empty set; callers decide whether that
    is an error.
    """
    if len(ps.kappas) != len(hhg.harmonics):
        raise ValueError(f"{len(ps.kappas)} slopes given for {len(hhg.harmonics)} harmonics")
    dims = hhg.layout.dims
    d_t, d_r, dq = dims[0], dims[1], dims[2:]
    nt = np.arange(d_t)
    kap = ps.effective_kappas
    orders = hhg.orders
    h = ps.half_width
    tuples = []
    dropped = 0
    for ms in itertools.product(*(range(d) for d in dq)):
        sk = sum(k * m for k, m in zip(kap, ms))
        sq = sum(q * m for q, m in zip(orders, ms))
        lo = max(0, math.ceil(ps.c - sk - h - _BAND_EPS))
        hi = min(d_r - 1, math.floor(ps.c - sk + h + _BAND_EPS))
        for n_r in range(lo, hi + 1):
            target = ps.n0 - sq - n_r
            if ps.sigma is None:
                k = math.floor(target + 0.5)
                if not 0 <= k < d_t:
                    dropped += 1
                    continue
                support = np.array([k])
                weights = np.array([1.0])
            else:
                w = np.exp(-((nt - target) ** 2) / (2 * ps.sigma**2))
                keep = w >= ps.weight_floor
                if not keep.any():
                    dropped += 1
                    continue
                support = nt[keep]
                weights = w[keep]
            tuples.append(DiagonalTuple(n_r, tuple(ms), target, support, weights))
    return DiagonalSet(tuple(tuples), hhg.layout.labels, d_t - 1, dropped)


@dataclass(frozen=True)
class PostSelectionResult:
    rho: DensityOperator
    success_probability: float
    n_tuples: int
    dropped: int = 0
    diagonal: DiagonalSet | None = field(default=None, repr=False)


def build_hhg_state(hhg: HHGOutputSpec, tol: float = DEFAULT_TRUNCATION_TOL) -> MultiModeState:
    kets = [coherent_state(a, d - 1, tol) for a, d in zip(hhg.mode_amplitudes(), hhg.layout.dims)]
    return tensor(kets, hhg.layout.labels)


def apply_postselection(state: MultiModeState, diag: DiagonalSet) -> PostSelectionResult:
    """Reduced transmitted-mode state after post-selection.

    Each admitted tuple contributes the projection ``|phi><phi|`` with
    ``phi(n_t) = w(n_t) * Psi(n_t, n_r, m_q)``: coherences in ``n_t`` survive
    within a tuple but not across tuples.
    """
    if diag.empty:
        raise EmptySelectionError("no measurement tuple lies on the selected diagonal")
    layout = state.layout
    missing = set(diag.labels) - set(layout.labels)
    if missing:
        raise ValueError(f"state layout lacks modes {sorted(missing)}")
    axes = [layout.axis(lbl) for lbl in diag.labels]
    if len(axes) != len(layout.labels):
        raise ValueError("state has modes that the diagonal does not measure")
    psi = np.transpose(state.tensor(), axes)
    d_t = psi.shape[0]
    if diag.cutoff_t != d_t - 1:
        raise ValueError("transmitted cutoff of state and diagonal differ")
    flat = psi.reshape(d_t, -1)
    cols = np.array([np.ravel_multi_index(k, psi.shape[1:]) for k in diag.keys()])
    rho = np.zeros((d_t, d_t), dtype=complex)
    for start in range(0, len(diag.tuples), _CHUNK):
        block = diag.tuples[start : start + _CHUNK]
        wmat = np.zeros((d_t, len(block)))
        for j, tup in enumerate(block):
            wmat[tup.support, j] = tup.weights
        phi = flat[:, cols[start : start + len(block)]] * wmat
        rho += phi @ phi.conj().T
    total = float(np.trace(rho).real)
    if not total > 0:
        raise DegenerateSelectionError("post-selection left zero total weight")
    out = DensityOperator(rho / total)
    return PostSelectionResult(out, total / state.norm2, len(diag), diag.dropped, diag)


def postselect(hhg: HHGOutputSpec, ps: PostSelectionSpec, tol: float = DEFAULT_TRUNCATION_TOL) -> PostSelectionResult:
    """Build the HHG output state, enumerate the diagonal and post-select."""
    diag = enumerate_diagonal(hhg, ps)
    if diag.empty:
        raise EmptySelectionError(
            f"empty post-selection for c={ps.c}, kappas={ps.kappas} "
            f"({diag.dropped} tuples dropped outside the transmitted cutoff)"
        )
    return apply_postselection(build_hhg_state(hhg, tol), diag)


def apply_detector_efficiency(ps: PostSelectionSpec, eta: float) -> PostSelectionSpec:
    """Scale every diagonal slope by the detection efficiency; ``c`` is unchanged."""
    if not 0 < eta <= 1:
        raise ValueError(f"detector efficiency must lie in (0, 1], got {eta}")
    return replace(ps, kappas=tuple(eta * k for k in ps.kappas))
