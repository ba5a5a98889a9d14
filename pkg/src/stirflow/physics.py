"""Flow residuals and weighted loss assembly.

All residual functions are plain array arithmetic: they accept field values
and their input derivatives as arrays (numpy or jax, both work) and return a
dict of residual arrays keyed by component id. Polar quantities use the
clockwise-positive convention: the angle coordinate eta increases along the
stirrer rotation and v_phi is the speed in that direction, so the stirrer
boundary condition reads v_phi = +omega*r.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

LOG_FLOOR = 1e-16


@dataclass(frozen=True)
class FluidProps:
    """Density [kg/m^3] and dynamic viscosity [Pa s]."""

    rho: float = 1000.0
    mu: float = 0.001

    def __post_init__(self):
        if self.rho <= 0.0 or self.mu <= 0.0:
            raise ValueError(f"rho and mu must be positive, got {self.rho}, {self.mu}")


class LossWeights:
    """Non-negative weights keyed by residual component id."""

    def __init__(self, weights):
        for key, val in weights.items():
            if not np.isfinite(val) or val < 0.0:
                raise ValueError(f"weight {key!r} must be finite and >= 0, got {val}")
        self._w = dict(weights)

    def __getitem__(self, key):
        return self._w[key]

    def __contains__(self, key):
        return key in self._w

    def components(self):
        return tuple(self._w)

    def items(self):
        return self._w.items()

    def as_dict(self):
        return dict(self._w)


@dataclass
class LossBreakdown:
    """Per-component means plus the weighted, regularized and log totals."""

    per_component: dict
    weighted: float
    reg: float
    total: float
    log_total: float


# ---------------------------------------------------------------- residuals


def residual_ns_cartesian(u, du, d2u, props):
    """Steady incompressible momentum and mass residuals in (x, y).

    u: (n, 3) columns (v_x, v_y, p); du: (n, 3, 2); d2u: (n, 3, 2, 2).
    """
    rho, mu = props.rho, props.mu
    vx, vy = u[:, 0], u[:, 1]
    conv_x = vx * du[:, 0, 0] + vy * du[:, 0, 1]
    conv_y = vx * du[:, 1, 0] + vy * du[:, 1, 1]
    lap_x = d2u[:, 0, 0, 0] + d2u[:, 0, 1, 1]
    lap_y = d2u[:, 1, 0, 0] + d2u[:, 1, 1, 1]
    return {
        "momentum_x": rho * conv_x + du[:, 2, 0] - mu * lap_x,
        "momentum_y": rho * conv_y + du[:, 2, 1] - mu * lap_y,
        "mass": du[:, 0, 0] + du[:, 1, 1],
    }


def residual_ns_polar(r, u, du, d2u, props):
    """Steady incompressible residuals in polar coordinates (r, eta).

    u: (n, 3) columns (v_r, v_phi, p); derivatives are with respect to
    (r, eta). Written for the clockwise-positive convention, which leaves
    the textbook cylindrical form unchanged.
    """
    rho, mu = props.rho, props.mu
    vr, vp = u[:, 0], u[:, 1]
    dvr_r, dvr_e = du[:, 0, 0], du[:, 0, 1]
    dvp_r, dvp_e = du[:, 1, 0], du[:, 1, 1]
    dp_r, dp_e = du[:, 2, 0], du[:, 2, 1]
    lap_vr = d2u[:, 0, 0, 0] + dvr_r / r + d2u[:, 0, 1, 1] / r**2
    lap_vp = d2u[:, 1, 0, 0] + dvp_r / r + d2u[:, 1, 1, 1] / r**2
    mom_r = (
        rho * (vr * dvr_r + vp / r * dvr_e - vp**2 / r)
        + dp_r
        - mu * (lap_vr - vr / r**2 - 2.0 / r**2 * dvp_e)
    )
    mom_p = (
        rho * (vr * dvp_r + vp / r * dvp_e + vr * vp / r)
        + dp_e / r
        - mu * (lap_vp - vp / r**2 + 2.0 / r**2 * dvr_e)
    )
    return {
        "momentum_r": mom_r,
        "momentum_phi": mom_p,
        "mass": dvr_r + vr / r + dvp_e / r,
    }


def residual_swirl_ode(r, v_phi, dv_dr, d2v_dr2, dp_dr, props):
    """Purely azimuthal flow reduced to two radial equations.

    The radial momentum balance couples pressure to the swirl, and the
    azimuthal balance is the equidimensional equation solved by A*r + B/r.
    """
    return {
        "momentum_r": v_phi**2 / r - dp_dr / props.rho,
        "momentum_phi": d2v_dr2 + dv_dr / r - v_phi / r**2,
    }


# ------------------------------------------------- boundary-type residuals


def _xp(arr):
    """numpy for numpy inputs, jax.numpy once anything is traced."""
    if isinstance(arr, np.ndarray):
        return np
    import jax.numpy as jnp

    return jnp


def bc_residuals(label, u, points=None, omega=0.0, frame="cartesian"):
    """Mismatch of predicted fields against the labeled Dirichlet condition.

    u holds predicted fields as columns: (v_x, v_y, ...) in the Cartesian
    frame, (v_r, v_phi, ...) in the polar one. ``wall`` and ``stirrer``
    return (n, 2) velocity mismatches (the stirrer needs the Cartesian
    ``points``); ``symmetry`` pairs the first half of the rows with the
    second half and returns their differences over all supplied columns.
    """
    xp = _xp(u)
    if label == "wall":
        return u[:, :2]
    if label == "stirrer":
        x, y = points[:, 0], points[:, 1]
        if frame == "polar":
            r = xp.hypot(x, y)
            return xp.stack([u[:, 0], u[:, 1] - omega * r], axis=1)
        return xp.stack([u[:, 0] - omega * y, u[:, 1] + omega * x], axis=1)
    if label == "symmetry":
        if u.shape[0] % 2:
            raise ConfigError("symmetry residual needs paired rows (even batch)")
        half = u.shape[0] // 2
        return u[:half] - u[half:]
    raise ConfigError(f"unknown boundary label {label!r}")


def coupling_residuals(inner_u, inner_dv_dr, outer_u, outer_dv_dr):
    """Mismatches tying the two subregion nets together on their interface.

    inner_u: (n, 2) columns (v_phi, p) from the radial net and inner_dv_dr
    its swirl derivative; outer_u: (n, 3) columns (v_r, v_phi, p) with
    outer_dv_dr the radial derivative of the outer swirl. The radial
    velocity couples to zero because the inner model has none. Equality of
    the flow residuals across the interface is deliberately not enforced.
    """
    return {
        "coupling_vr": outer_u[:, 0],
        "coupling_vphi": outer_u[:, 1] - inner_u[:, 0],
        "coupling_p": outer_u[:, 2] - inner_u[:, 1],
        "coupling_dvphi": outer_dv_dr - inner_dv_dr,
    }


def split_residuals(u1, u2, du1_dr=None, du2_dr=None):
    """Continuity of the two outer swirl branches across the split circle.

    Value mismatch on the full-arc batch; the radial-derivative mismatch is
    added only when derivatives are given (its arc is the narrow one).
    """
    out = {"gamma_c": u1 - u2}
    if du1_dr is not None:
        out["gamma_d"] = du1_dr - du2_dr
    return out


def data_residual(u, target):
    """Componentwise prediction minus labeled value."""
    return u - target


# ------------------------------------------------------------------- loss


def assemble_loss(residuals, weights, params=None, l1=0.0, l2=0.0):
    """Weighted sum of per-component mean squares plus norm penalties.

    residuals: dict id -> array of shape (n,) or (n, k); a (n, k) array is
    averaged per column and the k means are summed under one weight. The
    component ids must match the weight table exactly.
    """
    missing = [k for k in weights.components() if k not in residuals]
    orphan = [k for k in residuals if k not in weights]
    if missing or orphan:
        raise ConfigError(
            f"loss components and weights disagree: missing={missing} orphan={orphan}"
        )
    per_component = {}
    weighted = 0.0
    for key, res in residuals.items():
        if res.shape[0] == 0:
            raise ConfigError(f"component {key!r} has an empty batch")
        sq = (res**2).mean(axis=0)
        comp = sq.sum() if sq.ndim else sq
        per_component[key] = comp
        weighted = weighted + weights[key] * comp
    reg = 0.0
    if params is not None and (l1 or l2):
        reg = l1 * abs(params).sum() + l2 * (params**2).sum()
    total = weighted + reg
    # optimize the log of the loss; the floor keeps it finite at exact zero
    if isinstance(total, (float, np.floating, np.ndarray)):
        log_total = np.log(total + LOG_FLOOR)
    else:  # jax tracer or device array
        import jax.numpy as jnp

        log_total = jnp.log(total + LOG_FLOOR)
    return LossBreakdown(per_component, weighted, reg, total, log_total)
