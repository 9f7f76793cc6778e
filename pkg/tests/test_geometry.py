import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from leakygraph.geometry import (GeometryError, _neck_halfwidth, NearLoop, Ring, Star, ZLine, bottleneck,
                                 calibrate_gap_angle, discretize, omega_loop, points_to_csv,
                                 spec_from_dict, spec_from_json, spec_to_json, transform)

PI = math.pi


def chain_gaps(points):
    return np.hypot(*np.diff(points, axis=0).T)


def test_closed_ring_points():
    g = discretize(Ring(10.0), 0.5, count=100)
    assert g.size == 100
    assert g.alpha == pytest.approx(1 / (0.5 * 20 * PI), rel=1e-15)
    assert g.alpha == pytest.approx(1 / (10 * PI), rel=1e-15)
    assert np.allclose(np.hypot(*g.points.T), 10.0, atol=1e-12)
    gaps = chain_gaps(np.vstack([g.points, g.points[:1]]))
    assert np.allclose(gaps, gaps[0], rtol=1e-12)
    assert g.threshold is None and not g.has_leads


def test_open_ring_midpoints():
    g = discretize(Ring(10.0, PI / 3), 1.0, count=60)
    assert g.total_length == pytest.approx(10 * (2 * PI - PI / 3), rel=1e-14)
    assert g.alpha == pytest.approx(3 / (50 * PI), rel=1e-14)
    ang = np.mod(np.arctan2(g.points[:, 1], g.points[:, 0]), 2 * PI)
    assert ang.max() < 2 * PI - PI / 3
    assert np.allclose(chain_gaps(g.points), chain_gaps(g.points)[0], rtol=1e-12)


def test_star_discretisation_matches_reference_count():
    g = discretize(Star([PI / 2], [300.0, 300.0]), 0.1, spacing=1.5)
    assert g.size == 401
    assert g.total_length == 600.0
    assert g.alpha == pytest.approx(1 / 60.0)
    assert g.threshold == pytest.approx(-0.0025)
    # arm points at h, 2h, ..., L along each direction
    arm = g.points[1:201]
    assert np.allclose(arm[:, 1], 0.0) and np.allclose(arm[:, 0], 1.5 * np.arange(1, 201))


def test_star_count_sets_first_arm():
    g = discretize(Star([PI / 2], [30.0, 60.0]), 1.0, count=30)
    assert g.size == 1 + 30 + 60


@given(st.floats(0.3, 2.9), st.floats(0.05, 0.5))
def test_zline_points_on_support(bend, h):
    z = ZLine(5.0, bend, 4.0)
    g = discretize(z, 1.0, spacing=h)
    u = PI - bend
    b2 = np.array([5 * math.cos(u), 5 * math.sin(u)])
    p = g.points
    on_left = (np.abs(p[:, 1]) < 1e-12) & (p[:, 0] <= 1e-12)
    on_right = (np.abs(p[:, 1] - b2[1]) < 1e-9) & (p[:, 0] >= b2[0] - 1e-9)
    t = p @ np.array([math.cos(u), math.sin(u)])
    perp = np.abs(p[:, 0] * math.sin(u) - p[:, 1] * math.cos(u))
    on_mid = (perp < 1e-9) & (t > -1e-9) & (t < 5 + 1e-9)
    assert np.all(on_left | on_right | on_mid)
    assert g.total_length == pytest.approx(13.0)


def test_nearloop_points_on_support_and_uniform():
    nl = NearLoop(5.0, 1.0, 1.2, 6.0)
    g = discretize(nl, 1.0, spacing=0.05)
    dense = np.vstack([e.at(np.linspace(0, e.length, 20001)) for e in nl.edges()])
    from scipy.spatial import cKDTree
    d, _ = cKDTree(dense).query(g.points)
    assert d.max() < 1e-3
    gaps = chain_gaps(g.points)
    assert gaps.max() / gaps.min() < 1.05
    assert len(np.unique(np.round(g.points, 9), axis=0)) == g.size


def test_empirical_measure_converges():
    spec = Ring(3.0, 1.0)
    f = lambda p: p[:, 0] ** 2 + p[:, 1]
    arc = spec.edges()[0]
    exact, _ = integrate.quad(lambda s: f(arc.at(np.array([s])))[0], 0, arc.length,
                              epsabs=0, epsrel=1e-13)
    errs = []
    for n in (20, 40, 80, 160):
        g = discretize(spec, 1.0, count=n)
        errs.append(abs(g.total_length * f(g.points).mean() - exact))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios >= 1.9)


def test_neck_without_flare_is_chord():
    # without flares the legs of a real near-loop would cross, so the
    # closed-form neck is checked directly
    for phi in (0.2, 0.7, 1.4):
        assert 2 * _neck_halfwidth(4.0, phi, 0.0) == pytest.approx(2 * 4.0 * math.sin(phi / 2),
                                                                  rel=1e-13)


@pytest.mark.parametrize("flare", [0.0, 0.6, 2.6])
def test_neck_increases_with_gap(flare):
    widths = [_neck_halfwidth(10.0, phi, flare) for phi in np.linspace(0.4, 1.6, 9)]
    assert np.all(np.diff(widths) > 0)


@pytest.mark.parametrize("target", [1.9, 2.9, 5.2])
def test_calibrate_gap_angle(target):
    phi = calibrate_gap_angle(10.0, 2.6, target)
    assert bottleneck(NearLoop(10.0, phi, 2.6, 10.0)) == pytest.approx(target, abs=1e-10)


@pytest.mark.parametrize("width,phi", [(1.9, 1.15875), (2.9, 1.21910), (5.2, 1.36311)])
def test_omega_loop(width, phi):
    nl = omega_loop(10.0, width, 3.0)
    assert nl.gap_angle == pytest.approx(phi, abs=1e-5)
    assert nl.flare_angle == pytest.approx(PI - phi / 2)
    assert bottleneck(nl) == pytest.approx(width, rel=1e-12)
    leg = nl.edges()[-1]
    assert math.sin(leg.direction) == pytest.approx(0.0, abs=1e-12)


def test_omega_loop_rejects_wide_neck():
    with pytest.raises(GeometryError):
        omega_loop(5.0, 10.0, 3.0)


def test_intersecting_flares_rejected():
    with pytest.raises(GeometryError):
        bottleneck(NearLoop(5.0, 0.3, 1.5, 3.0))


@given(st.floats(-PI, PI), st.floats(-50, 50), st.floats(-50, 50))
def test_transform_is_isometry(rot, tx, ty):
    g = discretize(Star([1.0, 2.0], [3.0, 4.0, 5.0]), 1.0, spacing=0.5)
    t = transform(g, rot, (tx, ty))
    from scipy.spatial.distance import pdist
    assert np.allclose(pdist(t.points), pdist(g.points), atol=1e-10)
    assert t.alpha == g.alpha and t.gamma == g.gamma


@pytest.mark.parametrize("spec", [Ring(10.0), Ring(2.0, 0.5), Star([1.0], [2.0, 3.0]),
                                  ZLine(1.0, 2.0, 3.0), NearLoop(5.0, 1.0, 0.5, 2.0)])
def test_json_round_trip(spec):
    assert spec_from_json(spec_to_json(spec)) == spec


def test_unknown_field_rejected():
    d = json.loads(spec_to_json(Ring(10.0)))
    d["colour"] = "red"
    with pytest.raises(GeometryError):
        spec_from_dict(d)
    with pytest.raises(GeometryError):
        spec_from_dict({"type": "hexagon"})


@pytest.mark.parametrize("make", [
    lambda: Ring(-1.0),
    lambda: Ring(1.0, 2 * PI),
    lambda: Star([PI, PI], [1.0, 1.0, 1.0]),
    lambda: Star([0.0], [1.0, 1.0]),
    lambda: Star([1.0], [1.0]),
    lambda: ZLine(1.0, 0.0, 1.0),
    lambda: NearLoop(1.0, PI, 0.1, 1.0),
])
def test_invalid_specs(make):
    with pytest.raises(GeometryError):
        make()


def test_discretize_errors():
    with pytest.raises(GeometryError):
        discretize(Ring(1.0), 1.0)
    with pytest.raises(GeometryError):
        discretize(Ring(1.0), 1.0, count=10, spacing=0.1)
    with pytest.raises(GeometryError):
        discretize(Ring(1.0), -1.0, count=10)
    with pytest.raises(GeometryError):
        discretize(Star([1.0], [1.0, 0.2]), 1.0, spacing=0.5)


def test_points_csv():
    g = discretize(Ring(1.0), 1.0, count=4)
    rows = points_to_csv(g).strip().splitlines()
    assert rows[0] == "x,y" and len(rows) == 5
    assert float(rows[1].split(",")[0]) == 1.0
