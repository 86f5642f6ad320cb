"""Cat-state fidelity scans, intensity-fluctuation mixtures and shot-by-shot correlation maps."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import DegenerateSelectionError
from .fock import DensityOperator, Ket, coherent_amplitudes, suggest_cutoff
from .postselect import (
    HHGOutputSpec,
    PostSelectionSpec,
    default_c,
    postselect,
)

CAT_NORM_FLOOR = 1e-8


@dataclass(frozen=True)
class CatStateSpec:
    beta: float
    delta_beta: float

    @property
    def overlap(self) -> float:
        """``<0|delta_beta> = exp(-|delta_beta|^2 / 2)``."""
        return math.exp(-abs(self.delta_beta) ** 2 / 2)

    @property
    def norm(self) -> float:
        # N^2 = 1 + xi^2 - 2 xi Re<beta+dbeta|beta>, and <b+d|b> = xi * exp(i Im(conj(b+d) b))
        b, d = complex(self.beta), complex(self.delta_beta)
        xi = self.overlap
        cross = xi * np.exp(1j * (np.conj(b + d) * b).imag)
        return math.sqrt(max(0.0, 1 + xi**2 - 2 * xi * cross.real))


def _cat_vectors(betas: np.ndarray, deltas: np.ndarray, cutoff: int) -> np.ndarray:
    """Unnormalized cat amplitudes for real ``betas`` and ``deltas``; rows are states."""
    n = np.arange(cutoff + 1)

    def coh(a):
        a = np.asarray(a, dtype=float)[:, None]
        # n * log(tiny) underflows to zero amplitude for n >= 1 when a == 0
        logs = np.log(np.maximum(a, 1e-300))
        return np.exp(-0.5 * a**2 + n * logs - 0.5 * gammaln(n + 1))

    xi = np.exp(-0.5 * deltas**2)[:, None]
    return coh(betas + deltas) - xi * coh(betas)


def cat_state(beta: complex, delta_beta: complex, cutoff: int) -> Ket:
    """Normalized ``|beta + delta_beta> - <0|delta_beta> |beta>``."""
    xi = math.exp(-abs(delta_beta) ** 2 / 2)
    v = coherent_amplitudes(beta + delta_beta, cutoff) - xi * coherent_amplitudes(beta, cutoff)
    norm = np.linalg.norm(v)
    if norm < CAT_NORM_FLOOR:
        raise DegenerateSelectionError(f"cat state norm {norm:.2e} vanishes; delta_beta too small")
    return Ket(v / norm)


@dataclass(frozen=True)
class FidelityScanResult:
    best_beta: float
    best_delta_beta: float
    best_fidelity: float
    betas: np.ndarray
    delta_betas: np.ndarray
    fidelities: np.ndarray

    def grid_spec(self) -> dict:
        return {
            "beta_range": [float(self.betas[0]), float(self.betas[-1])],
            "delta_beta_range": [float(self.delta_betas[0]), float(self.delta_betas[-1])],
            "resolution": [int(self.betas.size), int(self.delta_betas.size)],
        }

    def as_dict(self) -> dict:
        return {
            "best_beta": self.best_beta,
            "best_delta_beta": self.best_delta_beta,
            "best_fidelity": self.best_fidelity,
            "grid": self.grid_spec(),
        }


def fidelity_scan(
    rho: DensityOperator,
    beta_range: tuple[float, float] = (1e-3, 3.0),
    delta_beta_range: tuple[float, float] | None = None,
    resolution: int | tuple[int, int] = 100,
) -> FidelityScanResult:
    """Exhaustive grid search of ``<psi(beta, delta_beta)|rho|psi(beta, delta_beta)>``.

    Ties go to the smallest ``(beta, delta_beta)`` in lexicographic order.
    """
    if delta_beta_range is None:
        delta_beta_range = beta_range
    nb, nd = (resolution, resolution) if isinstance(resolution, int) else resolution
    if nb < 2 or nd < 2:
        raise ValueError("resolution must be >= 2 per axis")
    if delta_beta_range[0] <= 0:
        raise ValueError("delta_beta must be scanned over positive values")
    betas = np.linspace(*beta_range, nb)
    deltas = np.linspace(*delta_beta_range, nd)
    B, D = np.meshgrid(betas, deltas, indexing="ij")
    vecs = _cat_vectors(B.ravel(), D.ravel(), rho.dim - 1)
    norms2 = np.einsum("ij,ij->i", vecs, vecs)
    with np.errstate(invalid="ignore", divide="ignore"):
        fid = np.einsum("ij,jk,ik->i", vecs, rho.matrix, vecs).real / norms2
    fid = np.where(norms2 > CAT_NORM_FLOOR**2, fid, -np.inf).reshape(nb, nd)
    # argmax returns the first maximum in row-major order: smallest beta, then delta_beta.
    i, j = np.unravel_index(int(np.argmax(fid)), fid.shape)
    return FidelityScanResult(float(betas[i]), float(deltas[j]), float(fid[i, j]), betas, deltas, fid)


def fluctuation_nodes(alpha0: float, sigma_tilde: float, n_nodes: int = 41) -> tuple[np.ndarray, np.ndarray]:
    """Amplitude nodes over ``alpha0 +- 4 sigma_tilde`` and normalized Gaussian weights."""
    if not sigma_tilde > 0:
        raise ValueError("sigma_tilde must be > 0")
    if n_nodes < 21:
        raise ValueError("use at least 21 amplitude nodes")
    lo = max(0.0, alpha0 - 4 * sigma_tilde)
    nodes = np.linspace(lo, alpha0 + 4 * sigma_tilde, n_nodes)
    w = np.exp(-((nodes - alpha0) ** 2) / (2 * sigma_tilde**2))
    return nodes, w / w.sum()


def intensity_fluctuation_state(
    alpha0: float,
    sigma_tilde: float,
    delta_alpha: float,
    make_output: Callable[[float], HHGOutputSpec],
    make_selection: Callable[[HHGOutputSpec], PostSelectionSpec],
    n_nodes: int = 41,
    nodes: tuple[np.ndarray, np.ndarray] | None = None,
) -> DensityOperator:
    """Mixture of post-selected states over a Gaussian spread of the driving amplitude.

    ``make_output(alpha)`` builds the HHG output for one node (with
    ``delta_alpha`` held fixed) and ``make_selection`` derives its
    post-selection spec, so ``n0`` and ``c`` may follow each node. ``nodes``
    overrides the quadrature as ``(amplitudes, weights)``.
    """
    amps, weights = nodes if nodes is not None else fluctuation_nodes(alpha0, sigma_tilde, n_nodes)
    weights = np.asarray(weights, dtype=float)
    if weights.sum() <= 0:
        raise ValueError("node weights must have a positive sum")
    weights = weights / weights.sum()
    parts = []
    for a, w in zip(amps, weights):
        if w == 0:
            continue
        hhg = make_output(float(a))
        parts.append((w, postselect(hhg, make_selection(hhg)).rho))
    # nodes may use different transmitted cutoffs; embed all in the largest
    dim = max(rho.dim for _, rho in parts)
    acc = np.zeros((dim, dim), dtype=complex)
    for w, rho in parts:
        acc[: rho.dim, : rho.dim] += w * rho.matrix
    return DensityOperator(acc)


def default_fluctuation_pipeline(
    delta_alpha: float,
    orders: Sequence[int] = (13, 15),
    cutoff_t: int | None = None,
    cutoff_r: int | None = None,
    cutoff_q: int | None = None,
    amplitude_max: float | None = None,
    sigma: float | str | None = "auto",
    c_rule: str = "nearest",
):
    """Factories for ``intensity_fluctuation_state`` with shared cutoffs sized for ``amplitude_max``.

    Each node selects on the diagonal through its own ``n0 / 2``. With
    ``c_rule="nearest"`` the offset is the closest integer, so a narrow spread
    around an integer ``n0 / 2`` keeps one diagonal for every node. ``"floor"``
    reuses the single-shot default, which jumps by one photon exactly there.
    """
    if c_rule not in ("nearest", "floor"):
        raise ValueError(f"unknown c_rule {c_rule!r}")
    ref = None if amplitude_max is None else (amplitude_max + delta_alpha) / math.sqrt(2)
    ct = cutoff_t if cutoff_t is not None or ref is None else suggest_cutoff(ref)
    cr = cutoff_r if cutoff_r is not None or ref is None else suggest_cutoff(ref)

    def make_output(alpha: float) -> HHGOutputSpec:
        return HHGOutputSpec.make(alpha, delta_alpha, orders, cutoff_t=ct, cutoff_r=cr, cutoff_q=cutoff_q)

    def make_selection(hhg: HHGOutputSpec) -> PostSelectionSpec:
        return PostSelectionSpec.for_output(hhg, sigma=sigma, c=node_c(hhg.n0, c_rule))

    return make_output, make_selection


def node_c(n0: float, rule: str = "nearest") -> int:
    """Diagonal offset for one fluctuation node."""
    if rule == "floor":
        return default_c(n0)
    return int(math.floor(n0 / 2 + 0.5))


@dataclass(frozen=True)
class DiagonalFilter:
    """Accept shots with ``|n_r + sum kappa_q m_q - c| <= half_width``."""

    kappas: tuple[float, ...]
    c: float
    half_width: float = 0.5

    def accepts(self, n_r: np.ndarray, ms: np.ndarray) -> np.ndarray:
        bal = n_r + ms @ np.asarray(self.kappas, dtype=float)
        return np.abs(bal - self.c) <= self.half_width + 1e-9

    def scaled(self, eta: float) -> "DiagonalFilter":
        if not 0 < eta <= 1:
            raise ValueError("efficiency must lie in (0, 1]")
        return replace(self, kappas=tuple(eta * k for k in self.kappas))


def mean_diagonal(hhg: HHGOutputSpec, kappas: Sequence[float]) -> float:
    """Expected ``n_r + sum kappa m_q`` for the unconditioned output."""
    return abs(hhg.ir_amplitude) ** 2 + sum(k * abs(h.chi) ** 2 for k, h in zip(kappas, hhg.harmonics))


@dataclass(frozen=True)
class ShotRecords:
    """Columnar shot table: one row per shot."""

    n_r: np.ndarray
    m: np.ndarray
    orders: tuple[int, ...]
    i_ir: np.ndarray
    i_xuv: np.ndarray
    accepted: np.ndarray
    filters: tuple[DiagonalFilter, ...]

    def __len__(self) -> int:
        return self.n_r.size

    def columns(self) -> dict[str, np.ndarray]:
        cols = {"i": np.arange(len(self)), "n_r": self.n_r}
        for k, q in enumerate(self.orders):
            cols[f"m_{q}"] = self.m[:, k]
        cols["I_IR"] = self.i_ir
        cols["I_XUV"] = self.i_xuv
        for k in range(len(self.filters)):
            cols[f"accepted_filter_{k}"] = self.accepted[:, k].astype(int)
        return cols


def correlation_map(
    hhg: HHGOutputSpec,
    n_shots: int,
    seed: int | None = None,
    filters: Sequence[DiagonalFilter] = (),
    scale_xuv: bool = True,
) -> ShotRecords:
    """Poisson photon counts for the reflected IR and every harmonic, shot by shot.

    ``I_XUV`` is the photon-number-weighted harmonic yield ``sum q m_q``; with
    ``scale_xuv`` it is multiplied by the ratio of mean IR to mean XUV intensity
    so both axes share a scale.
    """
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    rng = np.random.default_rng(seed)
    n_r = rng.poisson(abs(hhg.ir_amplitude) ** 2, size=n_shots)
    lam = np.array([abs(h.chi) ** 2 for h in hhg.harmonics])
    m = rng.poisson(lam, size=(n_shots, lam.size)) if lam.size else np.zeros((n_shots, 0), dtype=int)
    orders = hhg.orders
    i_ir = n_r.astype(float)
    i_xuv = m @ np.asarray(orders, dtype=float) if orders else np.zeros(n_shots)
    if scale_xuv and i_xuv.mean() > 0:
        i_xuv = i_xuv * (i_ir.mean() / i_xuv.mean())
    accepted = np.column_stack([f.accepts(n_r, m) for f in filters]) if filters else np.zeros((n_shots, 0), bool)
    return ShotRecords(n_r, m, orders, i_ir, i_xuv, accepted, tuple(filters))


def default_filter(hhg: HHGOutputSpec, kappas: Sequence[float] | None = None, half_width: float = 0.5) -> DiagonalFilter:
    """Filter centered on the mean diagonal, rounded to an integer count."""
    kappas = tuple(hhg.orders if kappas is None else kappas)
    return DiagonalFilter(kappas, float(round(mean_diagonal(hhg, kappas))), half_width)


def accepted_slope(records: ShotRecords, filter_index: int) -> float:
    """Least-squares slope of ``n_r`` versus the total harmonic photon count over accepted shots."""
    mask = records.accepted[:, filter_index]
    x = records.m[mask].sum(axis=1).astype(float)
    y = records.n_r[mask].astype(float)
    if mask.sum() < 2 or np.ptp(x) == 0:
        raise ValueError("too few distinct accepted shots to fit a slope")
    return float(np.polyfit(x, y, 1)[0])


__all__ = [
    "CatStateSpec",
    "DiagonalFilter",
    "FidelityScanResult",
    "ShotRecords",
    "accepted_slope",
    "cat_state",
    "correlation_map",
    "default_filter",
    "default_fluctuation_pipeline",
    "fidelity_scan",
    "fluctuation_nodes",
    "intensity_fluctuation_state",
    "mean_diagonal",
    "node_c",
]
