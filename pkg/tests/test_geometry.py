"""Geometry contracts: coordinate maps, membership, samplers, boundary labels."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stirflow import geometry as geo

TANK = geo.GeometryConfig()
ANNULUS = geo.GeometryConfig.annulus()

coord = st.floats(-0.1, 0.1, allow_nan=False, allow_infinity=False)


# ---------------------------------------------------------------- coordinates

@given(coord, coord)
def test_cart_polar_round_trip(x, y):
    r, phi = geo.cart_to_polar(x, y)
    assert r >= 0.0
    assert 0.0 <= phi < 2.0 * np.pi
    x2, y2 = geo.polar_to_cart(r, phi)
    assert abs(x2 - x) < 1e-14 and abs(y2 - y) < 1e-14


def test_cart_to_polar_quadrants():
    r, phi = geo.cart_to_polar(0.0, -1.0)
    assert r == 1.0
    assert abs(phi - 1.5 * np.pi) < 1e-15
    _, phi = geo.cart_to_polar(-2.0, 0.0)
    assert abs(phi - np.pi) < 1e-15


def test_point2_validation():
    p = geo.Point2.polar(0.05, 1.0)
    x, y = p.cartesian()
    assert abs(x - 0.05 * np.cos(1.0)) < 1e-16
    with pytest.raises(ValueError):
        geo.Point2.polar(-0.1, 0.0)
    with pytest.raises(ValueError):
        geo.Point2.polar(0.1, 7.0)


@given(coord, coord)
def test_reflect_to_quarter(x, y):
    xq, yq, k = geo.reflect_to_quarter(np.array([x]), np.array([y]))
    r, phi = geo.cart_to_polar(xq[0], yq[0])
    phi_signed = phi if phi < np.pi else phi - 2.0 * np.pi
    if r > 0:
        assert -np.pi / 4 - 1e-12 <= phi_signed < np.pi / 4 + 1e-12
    assert k[0] in (0, 1, 2, 3)
    # rotating the reflected point back restores the original
    a = k[0] * np.pi / 2
    xb = xq[0] * np.cos(a) - yq[0] * np.sin(a)
    yb = xq[0] * np.sin(a) + yq[0] * np.cos(a)
    assert abs(xb - x) < 1e-13 and abs(yb - y) < 1e-13


def test_stirrer_velocity_hand_values():
    v = geo.stirrer_velocity(np.array([0.02]), np.array([0.0]), 0.625)
    assert v.shape == (1, 2)
    assert v[0, 0] == 0.0 and v[0, 1] == -0.0125
    v = geo.stirrer_velocity(np.array([0.0]), np.array([0.03]), 0.625)
    np.testing.assert_allclose(v[0], [0.01875, 0.0], atol=1e-18)


# ----------------------------------------------------------------- membership

def test_config_validation():
    with pytest.raises(ValueError):
        geo.GeometryConfig(r_stirrer=0.09, r_baffle=0.085)
    with pytest.raises(ValueError):
        geo.GeometryConfig(t_baffle=-0.001)


def test_membership_tank():
    diag = np.cos(np.pi / 4)
    x = np.array([0.09 * diag, 0.07 * diag, 0.02, 0.02, 0.11, 0.09, 0.0])
    y = np.array([0.09 * diag, 0.07 * diag, 0.0, 1e-6, 0.0, 0.0, 0.0])
    got = geo.in_fluid_domain(TANK, x, y)
    #      baffle  fluid  blade  fluid  outside fluid origin-on-blade
    want = [False, True, False, True, False, True, False]
    assert got.tolist() == want


def test_membership_annulus():
    x = np.array([0.02, 0.07 * np.cos(1.0), 0.105])
    y = np.array([0.0, 0.07 * np.sin(1.0), 0.0])
    assert geo.in_fluid_domain(ANNULUS, x, y).tolist() == [False, True, False]


def test_closed_domain_accepts_boundary_nodes():
    # wall node and baffle-face node both belong to the closure
    x = np.array([0.1, 0.09 * np.cos(np.pi / 4) + 0.0025 * np.sin(np.pi / 4)])
    y = np.array([0.0, 0.09 * np.sin(np.pi / 4) - 0.0025 * np.cos(np.pi / 4)])
    assert geo.in_closed_domain(TANK, x, y).all()
    assert not geo.in_closed_domain(TANK, np.array([0.102]), np.array([0.0]))[0]


# ------------------------------------------------------------------- samplers

def test_domain_sampler_deterministic():
    a = geo.sample_domain(TANK, "full", 64, seed=3)
    b = geo.sample_domain(TANK, "full", 64, seed=3)
    c = geo.sample_domain(TANK, "full", 64, seed=4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("region,kw", [
    ("full", {}),
    ("quarter", {}),
    ("inner", {"r_inter": 0.07}),
    ("inner-axis", {"r_inter": 0.07}),
    ("outer", {"r_inter": 0.07}),
    ("band", {"r_inter": 0.075, "band_width": 0.01}),
])
def test_domain_samples_lie_in_region(region, kw):
    pts = geo.sample_domain(TANK, region, 500, seed=11, **kw)
    assert pts.shape == (500, 2)
    x, y = pts[:, 0], pts[:, 1]
    r = np.hypot(x, y)
    assert geo.in_fluid_domain(TANK, x, y).all()
    if region in ("inner", "inner-axis"):
        assert (r > TANK.r_stirrer).all() and (r < kw["r_inter"]).all()
    if region == "inner-axis":
        assert (y == 0.0).all()
    if region == "outer":
        assert (r > kw["r_inter"]).all()
    if region == "band":
        assert (np.abs(r - kw["r_inter"]) < kw["band_width"] / 2).all()
    if region in ("quarter", "outer", "band"):
        assert (np.abs(np.arctan2(y, x)) < np.pi / 4).all()


def test_region_fractions_match_areas():
    """Monte-Carlo occupancy of sub-annuli agrees with grid quadrature to 3 sigma."""
    n = 100_000
    pts = geo.sample_domain(TANK, "full", n, seed=7)
    r = np.hypot(pts[:, 0], pts[:, 1])
    r_inter = 0.07
    edges = [TANK.r_stirrer, r_inter]

    g = np.linspace(-0.1, 0.1, 1601)
    gx, gy = np.meshgrid(g, g)
    keep = geo.in_fluid_domain(TANK, gx.ravel(), gy.ravel())
    gr = np.hypot(gx.ravel()[keep], gy.ravel()[keep])
    for lo, hi in [(0.0, edges[0]), (edges[0], edges[1]), (edges[1], 0.2)]:
        p_grid = ((gr >= lo) & (gr < hi)).mean()
        p_mc = ((r >= lo) & (r < hi)).mean()
        sigma = np.sqrt(p_grid * (1 - p_grid) / n)
        assert abs(p_mc - p_grid) < 3.0 * sigma + 1e-3


@pytest.mark.parametrize("label,kw", [
    ("wall", {}),
    ("wall", {"quarter": True}),
    ("stirrer", {}),
    ("stirrer", {"quarter": True}),
    ("symmetry", {"r_range": (0.0, 0.085)}),
    ("interface", {"r_inter": 0.07}),
    ("gamma_c", {"r_split": 0.0851}),
    ("gamma_d", {"r_split": 0.0851}),
    ("overlap-in", {"r_inter": 0.075, "band_width": 0.01}),
    ("overlap-out", {"r_inter": 0.075, "band_width": 0.01}),
    ("baffle", {"r_split": 0.0851}),
])
def test_boundary_samples_on_their_boundary(label, kw):
    pts = geo.sample_boundary(TANK, label, 256, seed=5, **kw)
    assert pts.shape == (256, 2)
    d = geo.boundary_distance(TANK, label, pts, **kw)
    assert d.max() < 1e-12


def test_wall_samples_avoid_baffle_gaps():
    pts = geo.sample_boundary(TANK, "wall", 4096, seed=2)
    phi = np.arctan2(pts[:, 1], pts[:, 0])
    gap = np.arcsin(0.5 * TANK.t_baffle / TANK.r_reactor)
    for beta in TANK.baffle_angles:
        delta = np.angle(np.exp(1j * (phi - beta)))
        assert (np.abs(delta) > gap - 1e-12).all()


def test_symmetry_pairs_share_radii():
    pts = geo.sample_boundary(TANK, "symmetry", 128, seed=9, r_range=(0.07, 0.085))
    a, b = pts[:64], pts[64:]
    ra, rb = np.hypot(a[:, 0], a[:, 1]), np.hypot(b[:, 0], b[:, 1])
    np.testing.assert_allclose(ra, rb, rtol=1e-15)
    assert np.allclose(np.arctan2(a[:, 1], a[:, 0]), np.pi / 4, atol=1e-12)
    assert np.allclose(np.arctan2(b[:, 1], b[:, 0]), -np.pi / 4, atol=1e-12)
    assert (ra > 0.07).all() and (ra < 0.085).all()


def test_gamma_d_angular_span():
    pts = geo.sample_boundary(TANK, "gamma_d", 512, seed=1, r_split=0.0851)
    phi = np.arctan2(pts[:, 1], pts[:, 0])
    assert (np.abs(phi) <= 0.3 + 1e-12).all()
    np.testing.assert_allclose(np.hypot(pts[:, 0], pts[:, 1]), 0.0851, rtol=1e-14)


def test_annulus_stirrer_is_inner_circle():
    pts = geo.sample_boundary(ANNULUS, "stirrer", 64, seed=0)
    np.testing.assert_allclose(np.hypot(pts[:, 0], pts[:, 1]), 0.04, rtol=1e-14)
    wall = geo.sample_boundary(ANNULUS, "wall", 64, seed=0)
    np.testing.assert_allclose(np.hypot(wall[:, 0], wall[:, 1]), 0.1, rtol=1e-14)


def test_boundary_sampler_deterministic():
    a = geo.sample_boundary(TANK, "stirrer", 32, seed=12)
    b = geo.sample_boundary(TANK, "stirrer", 32, seed=12)
    assert np.array_equal(a, b)


def test_child_seed_paths_are_independent():
    s1 = geo.child_seed(42, 0)
    s2 = geo.child_seed(42, 1)
    s3 = geo.child_seed(43, 0)
    assert len({s1, s2, s3}) == 3
    assert s1 == geo.child_seed(42, 0)
