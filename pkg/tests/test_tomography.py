import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hhgps.errors import NumericalError
from hhgps.fock import DensityOperator, coherent_state, fock_state
from hhgps.tomography import (
    HomodyneTrace,
    RadonConfig,
    frobenius_similarity,
    inverse_radon,
    outcome_probabilities,
    quadrature_eigensystem,
    quadrature_operator,
    radon_kernel,
    sample_homodyne,
    uniform_phases,
)
from hhgps.wigner import WignerGrid, wigner_of_density

from oracles import radon_kernel_quad


def test_two_level_quadrature_spectrum():
    eig = quadrature_eigensystem(0.0, 1)
    np.testing.assert_allclose(eig.eigenvalues, [-1 / math.sqrt(2), 1 / math.sqrt(2)], atol=1e-15)


@pytest.mark.parametrize("phase", [0.0, 0.3, 1.2, 2.9])
def test_eigensystem_reconstructs_operator(phase):
    eig = quadrature_eigensystem(phase, 30)
    np.testing.assert_allclose(eig.operator(), quadrature_operator(phase, 30), atol=1e-8)
    assert np.all(np.diff(eig.eigenvalues) > 0)
    v = eig.eigenvectors
    np.testing.assert_allclose(v.conj().T @ v, np.eye(31), atol=1e-10)


@pytest.mark.parametrize("phase", [0.0, 0.7, 2.0])
def test_vacuum_quadrature_mean_is_zero(phase):
    x = quadrature_operator(phase, 20)
    vac = fock_state(0, 20).amplitudes
    assert abs(vac.conj() @ x @ vac) < 1e-15


@pytest.mark.parametrize("phase", np.linspace(0, 3, 7))
def test_coherent_quadrature_mean(phase):
    alpha = 1.3
    psi = coherent_state(alpha, 40).amplitudes
    mean = (psi.conj() @ quadrature_operator(phase, 40) @ psi).real
    assert mean == pytest.approx(math.sqrt(2) * alpha * math.cos(phase), abs=1e-9)


def test_uniform_phases_half_open():
    phases = uniform_phases(20)
    assert phases[0] == 0
    assert phases[-1] < math.pi
    np.testing.assert_allclose(np.diff(phases), math.pi / 20)


def test_vacuum_sample_statistics():
    trace = sample_homodyne(fock_state(0, 30).density(), [0.0, 1.0], 100_000, seed=3)
    for row in trace.outcomes:
        se_mean = math.sqrt(0.5 / row.size)
        assert abs(row.mean()) < 3 * se_mean
        # variance of the sample variance for a Gaussian: 2 s^4 / n
        assert abs(row.var() - 0.5) < 3 * math.sqrt(2 * 0.25 / row.size)


def test_sampling_distribution_converges():
    rho = coherent_state(0.8, 30).density()
    trace = sample_homodyne(rho, [0.4], 100_000, seed=11)
    eig = quadrature_eigensystem(0.4, 30)
    probs = outcome_probabilities(rho, eig)
    # outcomes live on the eigenvalues, so the KS distance is the largest CDF
    # gap evaluated at those support points
    exact_cdf = np.cumsum(probs)
    samples = np.sort(trace.outcomes[0])
    empirical_cdf = np.searchsorted(samples, eig.eigenvalues, side="right") / samples.size
    assert np.max(np.abs(empirical_cdf - exact_cdf)) < 0.02


def test_coherent_trace_is_sinusoidal():
    alpha = math.sqrt(5)
    trace = sample_homodyne(coherent_state(alpha, 40).density(), 100, 100, seed=0)
    means = trace.outcomes.mean(axis=1)
    expected = math.sqrt(2) * alpha * np.cos(trace.phases)
    assert np.max(np.abs(means - expected)) < 5 * math.sqrt(0.5 / 100)
    fit = np.linalg.lstsq(np.column_stack([np.cos(trace.phases), np.sin(trace.phases)]), means, rcond=None)[0]
    assert fit[0] == pytest.approx(math.sqrt(2) * alpha, abs=0.05)


def test_sampling_is_deterministic():
    rho = coherent_state(0.5, 20).density()
    a = sample_homodyne(rho, 10, 50, seed=42)
    b = sample_homodyne(rho, 10, 50, seed=42)
    c = sample_homodyne(rho, 10, 50, seed=43)
    assert np.array_equal(a.outcomes, b.outcomes)
    assert not np.array_equal(a.outcomes, c.outcomes)


def test_angle_streams_are_independent_of_angle_count():
    rho = coherent_state(0.5, 20).density()
    phases = uniform_phases(4)
    a = sample_homodyne(rho, phases, 30, seed=7)
    b = sample_homodyne(rho, phases[:2], 30, seed=7)
    assert np.array_equal(a.outcomes[:2], b.outcomes)


def test_unscaled_outcomes_are_scaled_copies():
    rho = coherent_state(0.5, 20).density()
    a = sample_homodyne(rho, 3, 40, seed=1)
    b = sample_homodyne(rho, 3, 40, seed=1, convention="unscaled")
    np.testing.assert_allclose(b.outcomes, math.sqrt(2) * a.outcomes)


def test_unnormalized_state_is_rejected():
    rho = DensityOperator(0.5 * np.eye(3))
    with pytest.raises(NumericalError):
        sample_homodyne(rho, 2, 10, seed=0)


def test_trace_validation():
    with pytest.raises(ValueError):
        HomodyneTrace(np.array([0.0, math.pi]), np.zeros((2, 3)), 0)
    with pytest.raises(ValueError):
        HomodyneTrace(np.array([0.0]), np.zeros((2, 3)), 0)


def test_kernel_at_origin():
    assert radon_kernel(0.0, 2.0) == 2.0
    assert radon_kernel(0.0, 3.0) == pytest.approx(4.5)


@given(st.floats(-10, 10), st.floats(0.5, 4.0))
@settings(max_examples=100)
def test_kernel_is_even(z, k_c):
    assert radon_kernel(z, k_c) == radon_kernel(-z, k_c)


@pytest.mark.parametrize("k_c", [1.0, 2.0, 3.0, 4.0])
def test_kernel_matches_quadrature(k_c):
    zs = np.linspace(-10, 10, 401)
    ours = radon_kernel(zs, k_c)
    ref = np.array([radon_kernel_quad(z, k_c) for z in zs])
    np.testing.assert_allclose(ours, ref, atol=1e-8)


@pytest.mark.parametrize("k_c", [1.0, 2.0, 4.0])
def test_kernel_continuous_at_series_switch(k_c):
    edge = 0.1 / k_c
    lo = radon_kernel(np.nextafter(edge, 0), k_c)
    hi = radon_kernel(edge, k_c)
    assert abs(lo - hi) < 1e-12


def test_kernel_rejects_bad_cutoff():
    with pytest.raises(ValueError):
        radon_kernel(0.5, 0.0)


def test_similarity_extremes():
    rng = np.random.default_rng(0)
    a = WignerGrid(np.arange(4.0), np.arange(3.0), rng.normal(size=(4, 3)))
    b = WignerGrid(a.x, a.p, -a.values)
    assert frobenius_similarity(a, a) == pytest.approx(1.0)
    assert frobenius_similarity(a, b) == pytest.approx(-1.0)
    assert frobenius_similarity(a, 3 * a.values) == pytest.approx(1.0)


def test_similarity_errors():
    with pytest.raises(ValueError):
        frobenius_similarity(np.zeros((2, 2)), np.ones((2, 2)))
    with pytest.raises(ValueError):
        frobenius_similarity(np.ones((2, 2)), np.ones((3, 2)))


def test_coherent_reconstruction_centered():
    alpha = math.sqrt(5)
    rho = coherent_state(alpha, 40).density()
    trace = sample_homodyne(rho, 50, 2000, seed=5, convention="unscaled")
    x = np.linspace(-8, 8, 81)
    recon = inverse_radon(trace, RadonConfig(2.0, x))
    i, j = np.unravel_index(np.argmax(recon.values), recon.shape)
    # unscaled axes put the lobe at (2 Re alpha, 2 Im alpha)
    assert recon.x[i] == pytest.approx(2 * alpha, abs=0.3)
    assert recon.p[j] == pytest.approx(0.0, abs=0.3)


def test_unit_normalization_integrates_to_one():
    rho = coherent_state(1.0, 30).density()
    trace = sample_homodyne(rho, 40, 2000, seed=2, convention="unscaled")
    x = np.linspace(-10, 10, 101)
    unit = inverse_radon(trace, RadonConfig(2.0, x, normalization="unit"))
    pi_squared = inverse_radon(trace, RadonConfig(2.0, x, normalization="pi-squared"))
    assert unit.integral() == pytest.approx(1.0, abs=0.1)
    np.testing.assert_allclose(pi_squared.values, unit.values / math.pi)


def test_per_angle_mean_variant_uses_means():
    trace = HomodyneTrace(np.array([0.0, math.pi / 2]), np.array([[1.0, 3.0], [0.0, 0.0]]), 0)
    x = np.linspace(-3, 3, 7)
    grid = inverse_radon(trace, RadonConfig(1.5, x, variant="per-angle-mean"))
    X, P = np.meshgrid(x, x, indexing="ij")
    expected = (radon_kernel(X - 2.0, 1.5) + radon_kernel(P, 1.5)) / (2 * math.pi * 2)
    np.testing.assert_allclose(grid.values, expected, atol=1e-14)


def test_per_sample_grouping_matches_naive_sum():
    rho = coherent_state(0.6, 12).density()
    trace = sample_homodyne(rho, 3, 25, seed=9)
    x = np.linspace(-3, 3, 9)
    grid = inverse_radon(trace, RadonConfig(2.0, x))
    X, P = np.meshgrid(x, x, indexing="ij")
    naive = np.zeros_like(X)
    for phi, outs in trace.records():
        for v in outs:
            naive += radon_kernel(X * math.cos(phi) + P * math.sin(phi) - v, 2.0)
    naive /= 2 * math.pi * trace.n_phi * trace.n_shots
    np.testing.assert_allclose(grid.values, naive, atol=1e-13)


def test_reconstruction_is_deterministic():
    rho = coherent_state(0.6, 12).density()
    cfg = RadonConfig(2.0, np.linspace(-3, 3, 9))
    a = inverse_radon(sample_homodyne(rho, 5, 30, seed=1), cfg)
    b = inverse_radon(sample_homodyne(rho, 5, 30, seed=1), cfg)
    assert a.values.tobytes() == b.values.tobytes()


def test_internal_axes_underresolve_at_kc2():
    # the kernel cutoff acts on the axis scale: the same trace read on the
    # narrower internal axes loses more of the coherent lobe
    rho = coherent_state(math.sqrt(5), 40).density()
    out = {}
    for conv, scale in (("internal", 1.0), ("unscaled", math.sqrt(2))):
        x = np.linspace(-6, 6, 61) * scale
        trace = sample_homodyne(rho, 50, 4000, seed=1, convention=conv)
        exact = wigner_of_density(rho, x, convention=conv, check_normalization=False)
        out[conv] = frobenius_similarity(inverse_radon(trace, RadonConfig(2.0, x)), exact)
    assert out["unscaled"] > out["internal"]


@pytest.mark.parametrize("kwargs", [{"k_c": 0.0}, {"variant": "other"}, {"normalization": "other"}])
def test_radon_config_validation(kwargs):
    with pytest.raises(ValueError):
        RadonConfig(**kwargs)
