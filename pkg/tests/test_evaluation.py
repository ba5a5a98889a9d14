"""Error metrics, reference ingestion, and the analytic annulus benchmark."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stirflow import evaluation as ev
from stirflow import geometry as geo
from stirflow.errors import ConfigError, MetricError


def test_reynolds_map_is_exact_at_design_point():
    assert ev.reynolds_number(0.625) == 4000.0
    assert ev.omega_of_reynolds(4000.0) == 0.625


@given(st.floats(0.1, 2.0))
def test_reynolds_round_trip(omega):
    assert abs(ev.omega_of_reynolds(ev.reynolds_number(omega)) - omega) < 1e-12


def test_couette_cartesian_matches_stirrer_at_inner_wall():
    omega = 0.625
    x = np.array([0.04, 0.0, -0.04])
    y = np.array([0.0, 0.04, 0.0])
    vel, _ = ev.couette_cartesian(x, y, omega)
    want = geo.stirrer_velocity(x, y, omega)
    np.testing.assert_allclose(vel, want, atol=1e-15)


def make_reference(n=20, seed=0):
    return ev.make_couette_reference(n, seed, omega=0.625)


def test_reference_csv_round_trip(tmp_path):
    ref = make_reference()
    path = tmp_path / "ref.csv"
    ev.save_reference(path, ref)
    back = ev.load_reference(path, geo.GeometryConfig.annulus())
    np.testing.assert_array_equal(back.points, ref.points)
    np.testing.assert_array_equal(back.velocity, ref.velocity)
    np.testing.assert_array_equal(back.pressure, ref.pressure)


def test_load_reference_rejects_bad_rows(tmp_path):
    good = "x,y,v_x,v_y,p\n0.05,0.0,0.0,1.0,2.0\n"
    cases = [
        ("nan", good + "0.06,0.0,nan,0.0,0.0\n", "row 2"),
        ("outside", good + "0.5,0.0,0.0,0.0,0.0\n", "row 2"),
        ("text", good + "0.06,0.0,a,0.0,0.0\n", "row 2"),
        ("short", good + "0.06,0.0,0.0\n", "row 2"),
    ]
    for name, content, needle in cases:
        path = tmp_path / f"{name}.csv"
        path.write_text(content)
        with pytest.raises(ConfigError, match=needle):
            ev.load_reference(path, geo.GeometryConfig.annulus())
    bad_header = tmp_path / "hdr.csv"
    bad_header.write_text("x,y,u,v,p\n0.05,0.0,0.0,1.0,2.0\n")
    with pytest.raises(ConfigError, match="columns"):
        ev.load_reference(bad_header, geo.GeometryConfig.annulus())


def test_metrics_vanish_when_prediction_equals_reference():
    ref = make_reference(50)
    rep = ev.error_metrics(ref.velocity, ref.pressure, ref, omega=0.625, n_eval=50)
    assert rep.delta_l1_v == 0.0 and rep.delta_l2_v == 0.0
    assert rep.delta_l1_p == 0.0 and rep.delta_l2_p == 0.0


def test_metrics_constant_speed_offset_hand_value():
    """A uniform 0.0025 m/s speed error at omega = 0.625 is a 10% error."""
    n = 16
    speeds = 0.0025 * np.arange(1, n + 1)
    pts = np.stack([np.linspace(0.05, 0.09, n), np.zeros(n)], axis=1)
    ref = ev.ReferenceSolution(pts, np.stack([speeds, np.zeros(n)], 1), np.arange(n, dtype=float))
    pred_v = np.stack([speeds + 0.0025, np.zeros(n)], 1)
    rep = ev.error_metrics(pred_v, ref.pressure.copy(), ref, omega=0.625, n_eval=n)
    assert abs(rep.delta_l1_v - 0.1) < 1e-14
    assert abs(rep.delta_l2_v - 0.1) < 1e-14
    assert rep.delta_l1_p == 0.0


def test_metrics_pressure_offset_invariance():
    ref = make_reference(200, seed=4)
    rng = np.random.default_rng(5)
    pred_v = ref.velocity + 1e-4 * rng.normal(size=ref.velocity.shape)
    pred_p = ref.pressure + 1e-3 * rng.normal(size=ref.pressure.shape)
    base = ev.error_metrics(pred_v, pred_p, ref, omega=0.625, n_eval=200)
    # shift both fields by a constant of the order of the pressure range
    for c in (-0.5, 0.2, 3.0):
        shifted = ev.ReferenceSolution(ref.points, ref.velocity, ref.pressure + c)
        rep = ev.error_metrics(pred_v, pred_p + c, shifted, omega=0.625, n_eval=200)
        assert abs(rep.delta_l1_p - base.delta_l1_p) <= 1e-12 * base.delta_l1_p
        assert abs(rep.delta_l2_p - base.delta_l2_p) <= 1e-12 * base.delta_l2_p


def test_metrics_ten_point_synthetic_identity():
    """Pin the definitions on a case small enough to do by hand."""
    n = 10
    pts = np.stack([np.linspace(0.05, 0.09, n), np.zeros(n)], axis=1)
    ref_speed = 0.01 * np.arange(1, n + 1)
    ref = ev.ReferenceSolution(pts, np.stack([ref_speed, np.zeros(n)], 1),
                               np.arange(n, dtype=float))
    pred_v = np.stack([ref_speed + 0.001, np.zeros(n)], 1)
    pred_p = ref.pressure.copy()
    pred_p[0] += 1.0  # pressures become [1, 1, 2, ..., 9] after the bump
    rep = ev.error_metrics(pred_v, pred_p, ref, omega=0.625, n_eval=10)
    v_norm = 0.625 * 0.04
    assert abs(rep.delta_l1_v - 0.001 / v_norm) < 1e-12
    assert abs(rep.delta_l2_v - 0.001 / v_norm) < 1e-12
    # aligned: pred [-8,-8,-7,...,0], ref [-9,-8,...,0]; f_p = [-1,0,...,0]
    assert abs(rep.delta_l1_p - (1.0 / 9.0) * (1.0 / 10.0)) < 1e-12
    assert abs(rep.delta_l2_p - np.sqrt(1.0 / 10.0) / 9.0) < 1e-12


def test_metrics_subset_is_seeded_and_bounded():
    ref = make_reference(100)
    pred_v = ref.velocity * 1.01
    a = ev.error_metrics(pred_v, ref.pressure, ref, omega=0.625, n_eval=40, seed=9)
    b = ev.error_metrics(pred_v, ref.pressure, ref, omega=0.625, n_eval=40, seed=9)
    c = ev.error_metrics(pred_v, ref.pressure, ref, omega=0.625, n_eval=40, seed=10)
    assert a.delta_l1_v == b.delta_l1_v
    assert a.delta_l1_v != c.delta_l1_v
    with pytest.raises(MetricError):
        ev.error_metrics(pred_v, ref.pressure, ref, omega=0.625, n_eval=101)


def test_metrics_reject_constant_reference_pressure():
    ref = make_reference(30)
    flat = ev.ReferenceSolution(ref.points, ref.velocity, np.zeros(30))
    with pytest.raises(MetricError):
        ev.error_metrics(ref.velocity, ref.pressure, flat, omega=0.625, n_eval=30)


def test_field_export_and_profile(tmp_path):
    ref = make_reference(30)
    out = tmp_path / "fields.csv"
    ev.export_fields(out, ref.points, ref.velocity, ref.pressure, ref=ref)
    header = out.read_text().splitlines()[0]
    assert header == "x,y,v_x,v_y,p,f_err_v,f_err_p"

    def predict(pts):
        return ev.couette_cartesian(pts[:, 0], pts[:, 1], 0.625)

    prof = tmp_path / "profile.csv"
    radii, v_r, v_phi, p = ev.extract_profile(prof, predict, phi=0.0,
                                              r_range=(0.04, 0.1), n=50)
    assert prof.exists()
    assert np.abs(v_r).max() < 1e-15
    want, _ = ev.couette_analytic(radii, 0.625)
    np.testing.assert_allclose(v_phi, want, rtol=1e-12)
