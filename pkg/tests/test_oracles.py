import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from leakygraph import specfun
from leakygraph.oracles import (cross_eigenvalue, line_threshold, nest_bound, polymer_alpha,
                                polymer_threshold, ring_exact, ring_levels, ring_spectrum,
                                star_bs_lowest)

PI = math.pi


@pytest.mark.parametrize("gamma,count", [(0.5, 3), (1.0, 5), (0.15, 1), (2.05, 11)])
def test_ring_level_count(gamma, count):
    # gamma R > 2 l decides whether sector l binds
    assert len(ring_levels(10.0, gamma)) == count


def test_ring_levels_solve_condition():
    for lev in ring_levels(10.0, 1.0):
        assert 10.0 * specfun.bessel_ik_product(lev.l, 10 * lev.kappa) == pytest.approx(1.0, abs=1e-12)
        assert lev.E == -lev.kappa ** 2


def test_ring_boundary_case_has_no_level():
    assert ring_exact(10.0, 0.2, 1) is None
    assert ring_exact(10.0, 0.2 + 1e-9, 1) is not None


def test_ring_levels_ordered_and_above_line_value():
    levels = ring_levels(10.0, 1.0)
    es = [v.E for v in levels]
    assert es == sorted(es)
    # a large ring binds close to the line threshold
    assert es[0] == pytest.approx(line_threshold(1.0), rel=2e-2)


def test_ring_spectrum_multiplicities():
    spec = ring_spectrum(10.0, 0.5)
    assert list(spec.multiplicities) == [1, 2, 2]
    assert spec.provenance == "oracle"
    assert np.allclose(spec.energies, [-0.06558, -0.052416, -0.020725], atol=1e-6)


def test_ring_bad_input():
    with pytest.raises(ValueError):
        ring_exact(-1.0, 1.0, 0)
    with pytest.raises(ValueError):
        ring_exact(1.0, 1.0, 0.5)


@pytest.mark.parametrize("gamma", [1.0, 0.1, 2.0])
def test_separable_values(gamma):
    assert line_threshold(gamma) == -gamma ** 2 / 4
    assert cross_eigenvalue(gamma) == -gamma ** 2 / 2
    assert cross_eigenvalue(gamma) < line_threshold(gamma)


def test_separable_bad_gamma():
    with pytest.raises(ValueError):
        line_threshold(0.0)
    with pytest.raises(ValueError):
        cross_eigenvalue(-1.0)


def test_polymer_reference_value():
    assert polymer_threshold(1.0, 1, 1.0) == pytest.approx(0.38673686, abs=1e-8)


@pytest.mark.parametrize("alpha,n,l0", [(1.0, 1, 1.0), (0.3, 4, 2.0), (3.0, 8, 1.0), (0.05, 2, 5.0)])
def test_polymer_residual(alpha, n, l0):
    k = polymer_threshold(alpha, n, l0)
    assert abs(polymer_alpha(k, n, l0) - alpha) < 1e-10


def relative_curvature(ns, a):
    line = np.polyval(np.polyfit(ns, a, 1), ns)
    return np.abs(a - line).max() / np.ptp(a)


def test_polymer_alpha_grows_linearly():
    kappa = polymer_threshold(1.0, 1, 1.0)
    ns = np.array([1, 2, 4, 8])
    a = np.array([polymer_alpha(kappa, n, 1.0) for n in ns])
    assert np.all(np.diff(a) > 0)
    assert relative_curvature(ns, a) < 1e-2


def test_polymer_curvature_comes_from_log_term():
    # alpha(n) = n/(2 l0 kappa) - log(n)/(2 pi) + smaller terms
    kappa, ns = 0.5, np.array([1, 2, 4, 8])
    a = np.array([polymer_alpha(kappa, n, 1.0) for n in ns])
    stripped = a + np.log(ns) / (2 * PI)
    assert relative_curvature(ns, stripped) < 0.2 * relative_curvature(ns, a)


def test_polymer_continuum_limit():
    # dense chain with coupling 1/(gamma h) approaches the line threshold -gamma^2/4
    gamma = 1.0
    errs = []
    for h in (0.1, 0.01, 0.001):
        k = polymer_threshold(1.0 / (gamma * h), 1, h)
        assert -k * k > line_threshold(gamma)
        errs.append(abs(-k * k - line_threshold(gamma)))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 5e-3 * abs(line_threshold(gamma))


def test_polymer_truncation_guard():
    with pytest.raises(ValueError):
        polymer_threshold(1.0, 1, 1.0, m_max=100)
    with pytest.raises(ValueError):
        polymer_threshold(1.0, 0, 1.0)


@given(st.floats(0.1, 10.0))
def test_polymer_alpha_decreasing_in_kappa(kappa):
    assert polymer_alpha(1.01 * kappa, 2, 1.0, m_max=10 ** 4) < polymer_alpha(kappa, 2, 1.0, m_max=10 ** 4)


def test_bs_straight_line_has_no_bound_state():
    assert star_bs_lowest(PI, 1.0, arm_length=10.0, nodes_per_arm=100).kappa is None


def test_bs_bent_line_binds():
    r = star_bs_lowest(PI / 2, 1.0, arm_length=15.0, nodes_per_arm=150)
    assert r.energy < line_threshold(1.0)
    assert r.lambda_max(r.kappa) == pytest.approx(1.0, abs=1e-8)


def test_bs_lambda_max_decreasing():
    r = star_bs_lowest(PI / 2, 1.0, arm_length=10.0, nodes_per_arm=80)
    vals = [r.lambda_max(k) for k in np.linspace(0.5, 2.0, 7)]
    assert np.all(np.diff(vals) < 0)


def test_bs_cross_approaches_separable_value():
    r = star_bs_lowest([PI / 2] * 3, 1.0, arm_length=15.0, nodes_per_arm=150)
    assert r.energy == pytest.approx(cross_eigenvalue(1.0), rel=2e-2)


def test_bs_bad_input():
    with pytest.raises(ValueError):
        star_bs_lowest(PI, 1.0, nodes_per_arm=10)
    with pytest.raises(ValueError):
        star_bs_lowest([PI, PI], 1.0)


def test_nest_bound_small_angle():
    beta = 1e-3
    coeff = 3 ** 1.5 / (8 * PI * math.sqrt(5))
    assert beta * nest_bound(beta) == pytest.approx(coeff, rel=1e-2)


def test_nest_bound_right_angle():
    s2 = math.sqrt(2)
    ref = (8 * s2 - 5) ** 1.5 / math.sqrt(8 * s2 - 3) / (16 * PI)
    assert nest_bound(PI / 2) == pytest.approx(ref, rel=1e-14)


def test_nest_bound_decreasing_before_minimum():
    beta = np.linspace(1e-3, PI - 1e-3, 4001)
    vals = nest_bound(beta)
    i = int(np.argmin(vals))
    assert 0 < i < len(beta) - 1
    assert np.all(np.diff(vals[: i + 1]) < 0)
    assert np.all(vals > 0)
    with pytest.raises(ValueError):
        nest_bound(PI)
