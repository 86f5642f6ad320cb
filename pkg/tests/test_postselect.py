import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hhgps.errors import DegenerateSelectionError, EmptySelectionError
from hhgps.fock import coherent_state, fidelity_with_pure, purity
from hhgps.postselect import (
    DiagonalSet,
    HHGOutputSpec,
    PostSelectionSpec,
    apply_detector_efficiency,
    apply_postselection,
    build_hhg_state,
    default_c,
    enumerate_diagonal,
    postselect,
)
from hhgps.wigner import wigner_of_density

from oracles import brute_force_postselect, wigner_closed_form

GRID = np.linspace(-6, 6, 201)


def keys(diag):
    return sorted(diag.keys())


def test_integer_partitions_for_unit_slope():
    hhg = HHGOutputSpec.make(3.0, -1.0, (1,), cutoff_q=6)
    diag = enumerate_diagonal(hhg, PostSelectionSpec((1,), c=4, n0=9))
    assert keys(diag) == [(0, 4), (1, 3), (2, 2), (3, 1), (4, 0)]
    assert all(t.support.tolist() == [5] for t in diag.tuples)


def test_steep_slope_excludes_harmonic_photons():
    hhg = HHGOutputSpec.make(3.0, -1.0, (13,), cutoff_q=6)
    diag = enumerate_diagonal(hhg, PostSelectionSpec((13,), c=4, n0=9))
    assert keys(diag) == [(4, 0)]


def test_half_integer_constant_admits_both_neighbours():
    hhg = HHGOutputSpec.make(3.0, -1.0, (3,))
    diag = enumerate_diagonal(hhg, PostSelectionSpec((3,), c=4.5, n0=9))
    assert keys(diag) == [(1, 1), (2, 1), (4, 0), (5, 0)]


def test_default_constant_is_floor_of_half_n0():
    assert default_c(1.44) == 0
    assert default_c(9.0) == 4
    assert default_c(4.0) == 2
    assert default_c(81.0) == 40


def test_output_amplitudes():
    hhg = HHGOutputSpec.make(1.2, -0.3, (13, 15))
    assert hhg.ir_amplitude == pytest.approx(0.9 / math.sqrt(2))
    assert hhg.layout.labels == ("t", "r", "q13", "q15")


def test_strong_field_harmonic_photon_number():
    hhg = HHGOutputSpec.make(25.0, -15.0, (13, 15), cutoff_t=1, cutoff_r=1, cutoff_q=1)
    assert abs(hhg.harmonics[0].chi) ** 2 == pytest.approx(225 / 13)


@pytest.mark.parametrize("orders", [(15, 13), (0, 3)])
def test_orders_validated(orders):
    with pytest.raises(ValueError):
        HHGOutputSpec.make(1.0, -0.1, orders)


@pytest.mark.parametrize("c", [None, 0, 3])
def test_no_depletion_wide_selection_is_identity(c):
    hhg = HHGOutputSpec.make(1.5, 0.0, (13, 15))
    assert all(h.chi == 0 for h in hhg.harmonics)
    res = postselect(hhg, PostSelectionSpec.for_output(hhg, sigma=1e6, c=c))
    assert all(m == (0, 0) for m in (t.ms for t in res.diagonal.tuples))
    ref = coherent_state(1.5 / math.sqrt(2), hhg.cutoff_t)
    assert fidelity_with_pure(res.rho, ref) >= 1 - 1e-8


def test_huge_width_approaches_identity():
    hhg = HHGOutputSpec.make(1.2, -0.3, (13, 15))
    res = postselect(hhg, PostSelectionSpec.for_output(hhg, sigma=1e6))
    ref = coherent_state(hhg.ir_amplitude, hhg.cutoff_t)
    assert fidelity_with_pure(res.rho, ref) >= 1 - 1e-6


def test_exact_rule_is_fock_diagonal():
    hhg = HHGOutputSpec.make(3.0, -1.0, (3, 5))
    rho = postselect(hhg, PostSelectionSpec.for_output(hhg, kappas=(1, 1), sigma=None)).rho.matrix
    off = rho - np.diag(np.diag(rho))
    assert np.max(np.abs(off)) < 1e-12


def test_exact_rule_yields_single_photon_for_weak_driving():
    hhg = HHGOutputSpec.make(1.2, -0.3, (13, 15))
    rho = postselect(hhg, PostSelectionSpec.for_output(hhg, sigma=None)).rho
    assert rho.photon_distribution()[1] == pytest.approx(1.0)


def test_fuzzy_rule_frozen_against_oracle():
    hhg = HHGOutputSpec.make(1.2, -0.3, (13, 15))
    res = postselect(hhg, PostSelectionSpec.for_output(hhg))
    grid = wigner_of_density(res.rho, GRID)
    # frozen from brute_force_postselect + wigner_closed_form on the same grid
    assert grid.values.min() == pytest.approx(-0.15577451022033945, abs=1e-9)
    assert grid.values.max() == pytest.approx(0.28242703828575977, abs=1e-9)
    assert res.success_probability == pytest.approx(0.1840367266070198, abs=1e-9)


@pytest.mark.parametrize(
    "kappa, w_min, gamma",
    [
        (1, -4.644290606081022e-05, 0.8318083448931309),
        (2, -0.012782338209421658, 0.9581641026363893),
        (3, -0.02467292556791501, 1.0),
    ],
)
def test_slope_sweep_frozen_against_oracle(kappa, w_min, gamma):
    hhg = HHGOutputSpec.make(3.0, -1.0, (3,))
    rho = postselect(hhg, PostSelectionSpec.for_output(hhg, kappas=(kappa,))).rho
    assert wigner_of_density(rho, GRID).values.min() == pytest.approx(w_min, abs=1e-9)
    assert purity(rho) == pytest.approx(gamma, abs=1e-9)


def test_purity_grows_with_slope_two_harmonics():
    hhg = HHGOutputSpec.make(3.0, -1.0, (3, 5))
    low = postselect(hhg, PostSelectionSpec.for_output(hhg, kappas=(1, 1))).rho
    high = postselect(hhg, PostSelectionSpec.for_output(hhg)).rho
    assert purity(high) >= purity(low)


def test_oracle_on_fixed_case():
    hhg = HHGOutputSpec.make(1.0, -0.4, (3, 5), cutoff_t=7, cutoff_r=7, cutoff_q=4)
    ps = PostSelectionSpec.for_output(hhg, kappas=(2.0, 1.0), c=1.5, sigma=0.9)
    res = postselect(hhg, ps, tol=1.0)
    ref, p = brute_force_postselect(
        1.0, -0.4, [3, 5], [h.chi.real for h in hhg.harmonics], [2.0, 1.0], 1.5, 0.9, hhg.layout.dims
    )
    np.testing.assert_allclose(res.rho.matrix, ref, atol=1e-10)
    assert res.success_probability == pytest.approx(p, abs=1e-12)


spec_strategy = st.fixed_dictionaries(
    {
        "alpha": st.floats(0.3, 2.0),
        "delta": st.floats(-0.8, 0.0),
        "orders": st.sampled_from([(3,), (5,), (3, 5), (13, 15)]),
        "kappa_scale": st.floats(0.1, 1.0),
        "c": st.integers(0, 4) | st.floats(0, 4),
        "sigma": st.none() | st.floats(0.2, 5.0),
        "eta": st.floats(0.2, 1.0),
        "cutoff": st.integers(2, 8),
    }
)


@given(spec_strategy)
@settings(max_examples=30, deadline=None)
def test_efficient_path_matches_brute_force(spec):
    orders = spec["orders"]
    qcut = 8 if len(orders) == 1 else 4
    hhg = HHGOutputSpec.make(
        spec["alpha"], spec["delta"], orders, cutoff_t=spec["cutoff"], cutoff_r=spec["cutoff"], cutoff_q=qcut
    )
    kappas = tuple(spec["kappa_scale"] * q for q in orders)
    ps = PostSelectionSpec(kappas, spec["c"], hhg.n0, spec["sigma"], efficiency=spec["eta"])
    diag = enumerate_diagonal(hhg, ps)
    args = (spec["alpha"], spec["delta"], list(orders), [h.chi.real for h in hhg.harmonics], list(kappas), spec["c"])
    if diag.empty:
        with pytest.raises(EmptySelectionError):
            postselect(hhg, ps, tol=1.0)
        return
    ref, p = brute_force_postselect(*args, spec["sigma"], hhg.layout.dims, efficiency=spec["eta"])
    if p == 0:
        # admitted tuples exist but carry no amplitude (e.g. vacuum harmonics)
        with pytest.raises(DegenerateSelectionError):
            apply_postselection(build_hhg_state(hhg, tol=1.0), diag)
        return
    res = apply_postselection(build_hhg_state(hhg, tol=1.0), diag)
    np.testing.assert_allclose(res.rho.matrix, ref, atol=1e-10)
    assert res.success_probability == pytest.approx(p, rel=1e-9)
    assert 0 < res.success_probability <= 1


@given(st.floats(0.2, 3.0), st.floats(1.01, 4.0), st.booleans())
@settings(max_examples=25, deadline=None)
def test_support_never_shrinks_with_width(sigma, factor, widen):
    hhg = HHGOutputSpec.make(3.0, -1.0, (3,))
    extra = {"band_sigmas": 1.0} if widen else {}
    narrow = enumerate_diagonal(hhg, PostSelectionSpec.for_output(hhg, sigma=sigma, **extra))
    wide = enumerate_diagonal(hhg, PostSelectionSpec.for_output(hhg, sigma=sigma * factor, **extra))
    assert len(wide) >= len(narrow)


def test_accumulation_is_order_independent():
    hhg = HHGOutputSpec.make(2.0, -0.7, (3,))
    ps = PostSelectionSpec.for_output(hhg, kappas=(1,))
    diag = enumerate_diagonal(hhg, ps)
    state = build_hhg_state(hhg)
    forward = apply_postselection(state, diag).rho.matrix
    shuffled = DiagonalSet(tuple(reversed(diag.tuples)), diag.labels, diag.cutoff_t, diag.dropped)
    backward = apply_postselection(state, shuffled).rho.matrix
    np.testing.assert_allclose(forward, backward, atol=1e-14)


def test_empty_selection_is_signalled():
    hhg = HHGOutputSpec.make(1.2, -0.3, (13, 15))
    ps = PostSelectionSpec.for_output(hhg, c=500)
    assert enumerate_diagonal(hhg, ps).empty
    with pytest.raises(EmptySelectionError):
        postselect(hhg, ps)


def test_out_of_range_targets_are_counted():
    hhg = HHGOutputSpec.make(1.2, -0.3, (3,), cutoff_q=6)
    diag = enumerate_diagonal(hhg, PostSelectionSpec((1,), c=3, n0=1.44))
    # targets 1.44 - 3 m - n_r with n_r + m = 3 are all negative
    assert diag.empty
    assert diag.dropped == 4


def test_gaussian_weights_pruned_below_floor():
    hhg = HHGOutputSpec.make(2.0, -0.5, (3,))
    diag = enumerate_diagonal(hhg, PostSelectionSpec.for_output(hhg, sigma=0.5, weight_floor=1e-3))
    for tup in diag.tuples:
        assert np.all(tup.weights >= 1e-3)
        assert np.all(tup.weights <= 1)


def test_detector_efficiency_scaling():
    ps = PostSelectionSpec((15.0, 5.0), c=2, n0=4)
    assert apply_detector_efficiency(ps, 1.0) == ps
    scaled = apply_detector_efficiency(ps, 0.2)
    assert scaled.kappas == pytest.approx((3.0, 1.0))
    assert scaled.c == ps.c
    with pytest.raises(ValueError):
        apply_detector_efficiency(ps, 0.0)
    with pytest.raises(ValueError):
        apply_detector_efficiency(ps, 1.5)


def test_efficiency_field_equals_scaled_slopes():
    hhg = HHGOutputSpec.make(3.0, -1.0, (15,))
    a = PostSelectionSpec.for_output(hhg, efficiency=0.2)
    b = apply_detector_efficiency(PostSelectionSpec.for_output(hhg), 0.2)
    assert a.effective_kappas == pytest.approx(b.effective_kappas)
    assert keys(enumerate_diagonal(hhg, a)) == keys(enumerate_diagonal(hhg, b))


@pytest.mark.parametrize(
    "kwargs",
    [{"sigma": -1.0}, {"sigma": math.inf}, {"efficiency": 0.0}, {"c": -1.0}, {"kappas": (-1.0,)}],
)
def test_spec_validation(kwargs):
    base = {"kappas": (3.0,), "c": 1.0, "n0": 4.0}
    base.update(kwargs)
    with pytest.raises(ValueError):
        PostSelectionSpec(**base)


def test_closed_form_wigner_agrees_on_postselected_state():
    hhg = HHGOutputSpec.make(2.0, -0.7, (13, 15))
    rho = postselect(hhg, PostSelectionSpec.for_output(hhg)).rho
    x = np.linspace(-4, 4, 41)
    np.testing.assert_allclose(
        wigner_of_density(rho, x, check_normalization=False).values, wigner_closed_form(rho.matrix, x, x), atol=1e-10
    )
