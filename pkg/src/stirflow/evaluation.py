"""Reference solutions, analytic benchmarks, and error metrics.

Velocity errors are measured on magnitudes and normalized by the stirrer tip
speed; pressure errors are measured after shifting predicted and reference
pressure by their own maxima over the same evaluation subset, normalized by
the reference pressure range over that subset.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import ConfigError, MetricError
from .physics import FluidProps


def reynolds_number(omega, r_stirrer=0.040, props=FluidProps()):
    """Re = rho * omega * (2 r_stirrer)^2 / mu."""
    return props.rho * omega * (2.0 * r_stirrer) ** 2 / props.mu


def omega_of_reynolds(re, r_stirrer=0.040, props=FluidProps()):
    return re * props.mu / (props.rho * (2.0 * r_stirrer) ** 2)


# ----------------------------------------------------------- analytic flow


def couette_analytic(r, omega, r_inner=0.040, r_outer=0.100, props=FluidProps()):
    """Steady flow between a rotating inner and a fixed outer cylinder.

    Returns (v_phi, p) at radius r, with v_phi positive along the rotation
    (so v_phi(r_inner) = omega * r_inner) and the gauge p(r_inner) = 0.
    """
    r = np.asarray(r, dtype=float)
    a = omega * r_inner**2 / (r_inner**2 - r_outer**2)
    b = -a * r_outer**2
    v_phi = a * r + b / r

    def pressure_term(s):
        return a**2 * s**2 / 2.0 + 2.0 * a * b * np.log(s) - b**2 / (2.0 * s**2)

    p = props.rho * (pressure_term(r) - pressure_term(r_inner))
    return v_phi, p


def couette_cartesian(x, y, omega, r_inner=0.040, r_outer=0.100, props=FluidProps()):
    """Analytic annulus solution as (velocity (n,2), pressure (n,)) in x-y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    v_phi, p = couette_analytic(r, omega, r_inner, r_outer, props)
    # clockwise-positive v_phi maps to (v_phi*sin, -v_phi*cos) of the angle
    vel = np.stack([v_phi * y / r, -v_phi * x / r], axis=1)
    return vel, p


# ------------------------------------------------------------- references


@dataclass(frozen=True)
class ReferenceSolution:
    """Pointwise reference fields on scattered nodes."""

    points: np.ndarray  # (n, 2)
    velocity: np.ndarray  # (n, 2)
    pressure: np.ndarray  # (n,)

    def __len__(self):
        return self.points.shape[0]


REFERENCE_COLUMNS = ("x", "y", "v_x", "v_y", "p")


def load_reference(path, config=None):
    """Read a reference CSV with columns x, y, v_x, v_y, p.

    Rows with non-finite entries, or points outside the fluid domain of
    ``config``, fail with the 1-based data row in the message.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty reference file") from None
        header = tuple(h.strip() for h in header)
        if header != REFERENCE_COLUMNS:
            raise ConfigError(
                f"{path}: expected columns {','.join(REFERENCE_COLUMNS)}, "
                f"got {','.join(header)}"
            )
        rows = []
        for i, row in enumerate(reader, start=1):
            if len(row) != 5:
                raise ConfigError(f"{path}: row {i} has {len(row)} fields")
            try:
                vals = [float(v) for v in row]
            except ValueError:
                raise ConfigError(f"{path}: row {i} is not numeric") from None
            if not np.all(np.isfinite(vals)):
                raise ConfigError(f"{path}: row {i} contains a non-finite value")
            rows.append(vals)
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    data = np.asarray(rows)
    if config is not None:
        ok = geometry.in_closed_domain(config, data[:, 0], data[:, 1])
        if not ok.all():
            bad = int(np.flatnonzero(~ok)[0]) + 1
            raise ConfigError(f"{path}: row {bad} lies outside the fluid domain")
    return ReferenceSolution(data[:, :2], data[:, 2:4], data[:, 4])


def save_reference(path, ref):
    data = np.column_stack([ref.points, ref.velocity, ref.pressure])
    _write_csv(path, REFERENCE_COLUMNS, data)


def make_couette_reference(n, seed, omega, r_inner=0.040, r_outer=0.100,
                           props=FluidProps()):
    """Synthetic reference on the annulus from the analytic solution."""
    config = geometry.GeometryConfig.annulus(r_inner, r_outer)
    pts = geometry.sample_domain(config, "full", n, seed)
    vel, p = couette_cartesian(pts[:, 0], pts[:, 1], omega, r_inner, r_outer, props)
    return ReferenceSolution(pts, vel, p)


# ---------------------------------------------------------------- metrics


@dataclass
class ErrorReport:
    """Velocity and pressure error fractions over one evaluation subset."""

    delta_l1_v: float
    delta_l2_v: float
    delta_l1_p: float
    delta_l2_p: float
    n_eval: int
    seed: int
    omega: float
    extrapolated: bool = False

    def as_dict(self):
        return {
            "delta_l1_v": self.delta_l1_v,
            "delta_l2_v": self.delta_l2_v,
            "delta_l1_p": self.delta_l1_p,
            "delta_l2_p": self.delta_l2_p,
            "n_eval": self.n_eval,
            "seed": self.seed,
            "omega": self.omega,
            "extrapolated": int(self.extrapolated),
        }


def align_pressure(p, subset_max):
    """Shift a pressure field so its subset maximum sits at zero."""
    return p - subset_max


def error_metrics(pred_velocity, pred_pressure, ref, omega, n_eval=10_000,
                  seed=0, r_stirrer=0.040):
    """Normalized l1 and l2 error fractions against a reference.

    Predictions must be evaluated at ``ref.points``. A random subset of
    n_eval rows (drawn without replacement from ``seed``) is used for both
    the pressure alignment and the error averages.
    """
    n = len(ref)
    if pred_velocity.shape[0] != n or pred_pressure.shape[0] != n:
        raise MetricError("prediction arrays must match the reference nodes")
    if n_eval > n:
        raise MetricError(f"n_eval={n_eval} exceeds the reference size {n}")
    if n_eval < 1:
        raise MetricError("n_eval must be at least 1")
    idx = np.arange(n) if n_eval == n else np.sort(
        np.random.default_rng(seed).choice(n, n_eval, replace=False))

    v_norm = omega * r_stirrer
    speed_pred = np.hypot(pred_velocity[idx, 0], pred_velocity[idx, 1])
    speed_ref = np.hypot(ref.velocity[idx, 0], ref.velocity[idx, 1])
    f_v = speed_pred - speed_ref

    p_pred = align_pressure(pred_pressure[idx], pred_pressure[idx].max())
    p_ref = align_pressure(ref.pressure[idx], ref.pressure[idx].max())
    p_norm = p_ref.max() - p_ref.min()
    if p_norm == 0.0:
        raise MetricError("reference pressure is constant over the subset")
    f_p = np.abs(p_pred) - np.abs(p_ref)

    return ErrorReport(
        delta_l1_v=float(np.abs(f_v).mean() / v_norm),
        delta_l2_v=float(np.sqrt((f_v**2).mean()) / v_norm),
        delta_l1_p=float(np.abs(f_p).mean() / p_norm),
        delta_l2_p=float(np.sqrt((f_p**2).mean()) / p_norm),
        n_eval=int(n_eval),
        seed=int(seed),
        omega=float(omega),
    )


# ----------------------------------------------------------------- export


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in np.asarray(rows):
            writer.writerow([repr(float(v)) for v in row])


def save_report(path, reports):
    """Write one or more ErrorReports as CSV."""
    if isinstance(reports, ErrorReport):
        reports = [reports]
    keys = list(reports[0].as_dict())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=keys)
        writer.writeheader()
        for rep in reports:
            writer.writerow(rep.as_dict())


def export_fields(path, points, velocity, pressure, ref=None):
    """Dump predicted fields, with pointwise magnitude errors if a reference is given."""
    cols = ["x", "y", "v_x", "v_y", "p"]
    data = [points[:, 0], points[:, 1], velocity[:, 0], velocity[:, 1], pressure]
    if ref is not None:
        cols += ["f_err_v", "f_err_p"]
        data.append(np.hypot(velocity[:, 0], velocity[:, 1])
                    - np.hypot(ref.velocity[:, 0], ref.velocity[:, 1]))
        p_pred = align_pressure(pressure, pressure.max())
        p_ref = align_pressure(ref.pressure, ref.pressure.max())
        data.append(np.abs(p_pred) - np.abs(p_ref))
    _write_csv(path, cols, np.column_stack(data))


def extract_profile(path, predict, phi=0.0, r_range=(0.0, 0.100), n=200):
    """Sample a radial profile at fixed angle and write r, v_r, v_phi, p.

    ``predict`` maps an (n, 2) point array to (velocity (n, 2), pressure).
    v_phi is reported clockwise-positive.
    """
    radii = np.linspace(r_range[0], r_range[1], n)
    x, y = geometry.polar_to_cart(radii, phi + np.zeros(n))
    vel, p = predict(np.stack([x, y], axis=1))
    c, s = np.cos(phi), np.sin(phi)
    v_r = vel[:, 0] * c + vel[:, 1] * s
    v_phi = vel[:, 0] * s - vel[:, 1] * c
    _write_csv(path, ["r", "v_r", "v_phi", "p"], np.column_stack([radii, v_r, v_phi, p]))
    return radii, v_r, v_phi, p
