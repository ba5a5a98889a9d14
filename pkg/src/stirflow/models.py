"""Model families tying networks to the tank physics.

A model owns one or two networks plus everything wrapped around them in
physical coordinates: the affine input maps, the output scales that bring
raw network values to physical units, the mask fields and lifting profile
of the built-in Dirichlet ansatzes, and the batch samplers feeding the
loss. Every family exposes the same surface:

    batches(seed, index)        training point sets (boundary sets fixed,
                                interior sets fresh for each index)
    loss_breakdown(theta, b)    weighted residual loss, jax traceable
    predict(theta, pts[, omega])  velocity and pressure on Cartesian points
    point_function(name)        composed single-point field function
    derivative_function(name)   its batched value/Jacobian/Hessian

The composed point functions take physical inputs, so their derivatives
are physical derivatives and feed the flow residuals directly.

Families: ``CartesianModel`` is one net on the full cross-section (with
optional strong or hybrid Dirichlet ansatz), ``PolarQuarterModel`` is one
net on a symmetry quarter in polar components, ``DDModel`` splits the
domain at an interface circle into a swirl-only radial net and a full
outer net (with optional swirl split, stirring-rate input and blended
overlap band), and ``OdeSegmentModel`` is the radial net alone on a
segment, used for benchmarks.
"""

import jax
import jax.numpy as jnp
import numpy as np

from . import liftfield, physics
from .errors import ConfigError, DomainError
from .geometry import GeometryConfig, child_seed, sample_boundary, sample_domain
from .liftfield import build_distance_field, eval_field, field_jax
from .network import NetworkSpec, ParamPacker, input_derivatives
from .physics import FluidProps, LossWeights, assemble_loss

# stirring rates for Reynolds numbers 1000 to 10000 (exact binary fractions)
OMEGA_MIN = 0.15625
OMEGA_MAX = 1.5625

RADIAL_REF_SPEED = 8e-4  # fixed radial-velocity scale of the outer nets
SPLIT_SWIRL_SCALE = 1e-3  # output scale of the past-the-baffle swirl branch

QUARTER = np.pi / 4.0
HALF_PI = np.pi / 2.0

_LABEL_IDS = {"wall": 0, "stirrer": 1, "symmetry": 2, "interface": 3,
              "gamma_c": 4, "gamma_d": 5, "baffle": 6}


# ------------------------------------------------------------- input maps


def premap_disk(x, r_reactor):
    """Scale a disk coordinate so the vessel radius maps to one."""
    return x / r_reactor


def premap_span(r, lo, hi):
    """Affine map sending [lo, hi] onto [0, 1], exact at both ends."""
    return (r - lo) / (hi - lo)


def premap_outer(r, r_inter, r_reactor):
    """Affine map sending [r_inter, r_reactor] onto [1, 3], exact at both
    ends (written around r_inter so the endpoint values carry no roundoff)."""
    return (r - r_inter) / (0.5 * (r_reactor - r_inter)) + 1.0


def premap_quarter_angle(eta):
    """Affine map sending the quarter-sector angle onto [-1, 1]."""
    return 4.0 * eta / np.pi


def omega_tilde(omega, omega_min=OMEGA_MIN, omega_max=OMEGA_MAX):
    """Center and scale a stirring rate so the studied interval hits
    [-1, 1] exactly, with zero at the interval midpoint."""
    avg = 0.5 * (omega_min + omega_max)
    return (omega - avg) / (omega_max - avg)


def radial_velocity_scale(omega):
    """Rate-dependent radial-velocity scale of the parameterized models."""
    return 4e-4 * omega**2 + 1.2e-3 * omega


def swirl_scale(omega, r_inter, r_stirrer=0.040, r_star=liftfield.R_STAR):
    """Swirl scale of the outer net: the lifting profile at the interface."""
    unit = float(liftfield.v_bc_phi(np.asarray(r_inter, dtype=float), 1.0,
                                    r_stirrer, r_star))
    return omega * unit


# -------------------------------------------------------------- base class


class _FlowModel:
    """Shared plumbing: rate checks, derivative hooks, prediction guards."""

    parameterized = False
    omega_range = None
    band_width = None

    def _finish(self):
        """Build vmapped forwards and derivative sweeps from point fns."""
        self._forwards = {
            name: jax.vmap(fn, in_axes=(None, 0))
            for name, fn in self._point_fns.items()
        }
        self._derivs = {
            name: input_derivatives(fn) for name, fn in self._point_fns.items()
        }

    def point_function(self, name):
        try:
            return self._point_fns[name]
        except KeyError:
            raise ConfigError(
                f"unknown field function {name!r}, have {sorted(self._point_fns)}"
            ) from None

    def derivative_function(self, name):
        self.point_function(name)
        return self._derivs[name]

    def _resolve_rate(self, omega):
        if self.parameterized:
            if omega is None:
                raise ConfigError("parameterized model needs a stirring rate")
            return omega
        if omega is not None and omega != self.omega:
            raise ConfigError(
                f"model is built for the fixed stirring rate {self.omega}, "
                f"got {omega}"
            )
        return self.omega

    def _rate_column(self, omega, n):
        omega = np.asarray(self._resolve_rate(omega), dtype=float)
        if omega.ndim == 0:
            return np.full(n, float(omega))
        if omega.shape != (n,):
            raise ConfigError(f"need one rate or {n} rates, got {omega.shape}")
        return omega

    def _guard_inside(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ConfigError(f"points must be (n, 2), got {pts.shape}")
        r = np.hypot(pts[:, 0], pts[:, 1])
        if np.any(r > self.config.r_reactor + 1e-9):
            raise DomainError(
                f"points up to r={r.max():.6f} lie outside the vessel "
                f"radius {self.config.r_reactor}"
            )
        return pts, r


def _quarter_rows(pts):
    """Cartesian points to (radius, clockwise angle) rows."""
    r = np.hypot(pts[:, 0], pts[:, 1])
    eta = -np.arctan2(pts[:, 1], pts[:, 0])
    return np.stack([r, eta], axis=1)


def _reflect_angle(eta):
    """Fold a clockwise angle into the quarter sector [-pi/4, pi/4)."""
    k = np.floor((eta + QUARTER) / HALF_PI)
    return eta - k * HALF_PI


# ------------------------------------------------------- cartesian family


class CartesianModel:
    """One network for (v_x, v_y, p) over the whole cross-section.

    ansatz=None trains all boundary conditions weakly; "strong" multiplies
    the velocity by a mask vanishing on stirrer and wall and adds the
    wall-scaled lifting, so both Dirichlet sets hold by construction;
    "hybrid" masks only the stirrer and keeps the wall condition weak.
    The pressure is never masked.
    """

    family = "cartesian"
    parameterized = False
    omega_range = None
    band_width = None

    def __init__(self, config, omega, weights, *, hidden=(100, 100),
                 activation="tanh", ansatz=None, l1=1e-7, l2=1e-7,
                 n_domain=2048, boundary_counts=None, data=None, props=None):
        if ansatz not in (None, "strong", "hybrid"):
            raise ConfigError(f"unknown ansatz {ansatz!r}")
        self.config = config
        self.omega = float(omega)
        self.weights = weights if isinstance(weights, LossWeights) else LossWeights(weights)
        self.ansatz = ansatz
        self.l1, self.l2 = l1, l2
        self.n_domain = int(n_domain)
        self.boundary_counts = dict(boundary_counts or {})
        self.props = props or FluidProps()
        self.packer = ParamPacker([NetworkSpec("flow", 2, 3, hidden, activation)])
        if data is not None:
            pts, vals = data
            data = (np.asarray(pts, dtype=float), np.asarray(vals, dtype=float))
        self.data = data
        self.mask_field = None
        self._build_point_fn()

    def _build_point_fn(self):
        cfg = self.config
        omega = self.omega
        v_tip = omega * cfg.r_stirrer
        p_scale = self.props.rho * v_tip**2
        apply = self.packer.apply_fn("flow")

        if self.ansatz is None:

            def point_fn(theta, xy):
                raw = apply(theta, premap_disk(xy, cfg.r_reactor))
                return jnp.stack([v_tip * raw[0], v_tip * raw[1],
                                  p_scale * raw[2]])

        else:
            self.mask_field = build_distance_field(self.ansatz, cfg)
            mask_eval = field_jax(self.mask_field)
            radial_mask = self.mask_field.radial
            wall = (build_distance_field("wall-spline", cfg)
                    if self.ansatz == "strong" else None)
            vphi_fn = liftfield.v_bc_phi_jax(omega, cfg.r_stirrer,
                                             wall_field=wall)

            def point_fn(theta, xy):
                raw = apply(theta, premap_disk(xy, cfg.r_reactor))
                # guarded radius: keeps derivatives finite at the center
                r2 = xy[0] ** 2 + xy[1] ** 2
                r = jnp.sqrt(jnp.where(r2 > 0.0, r2, 1.0))
                r = jnp.where(r2 > 0.0, r, 0.0)
                ratio = jnp.where(
                    r2 > 0.0,
                    vphi_fn(r) / jnp.where(r2 > 0.0, r, 1.0),
                    omega,
                )
                lift = jnp.stack([ratio * xy[1], -ratio * xy[0]])
                g = mask_eval(r) if radial_mask else mask_eval(xy)
                vel = lift + g * v_tip * raw[:2]
                return jnp.concatenate([vel, p_scale * raw[2:]])

        self._point_fns = {"flow": point_fn}
        _FlowModel._finish(self)

    point_function = _FlowModel.point_function
    derivative_function = _FlowModel.derivative_function
    _resolve_rate = _FlowModel._resolve_rate
    _guard_inside = _FlowModel._guard_inside

    def batches(self, seed, index=0):
        out = {"domain": sample_domain(self.config, "full", self.n_domain,
                                       child_seed(seed, 0, index))}
        for label, count in self.boundary_counts.items():
            out[label] = sample_boundary(self.config, label, count,
                                         child_seed(seed, 1, _LABEL_IDS[label]))
        if self.data is not None:
            out["data_points"], out["data_values"] = self.data
        return out

    def loss_breakdown(self, theta, batches):
        forward = self._forwards["flow"]
        u, du, d2u = self._derivs["flow"](theta, batches["domain"])
        res = physics.residual_ns_cartesian(u, du, d2u, self.props)
        if "wall" in batches:
            res["wall"] = physics.bc_residuals("wall",
                                               forward(theta, batches["wall"]))
        if "stirrer" in batches:
            res["impeller"] = physics.bc_residuals(
                "stirrer", forward(theta, batches["stirrer"]),
                points=batches["stirrer"], omega=self.omega)
        if "data_points" in batches:
            res["data"] = physics.data_residual(
                forward(theta, batches["data_points"]), batches["data_values"])
        return assemble_loss(res, self.weights, theta, self.l1, self.l2)

    def predict(self, theta, pts, omega=None):
        self._resolve_rate(omega)
        pts, _ = self._guard_inside(pts)
        u = np.asarray(self._forwards["flow"](jnp.asarray(theta), pts))
        return u[:, :2].copy(), u[:, 2].copy()

    def describe(self):
        return {
            "family": self.family,
            "omega": self.omega,
            "ansatz": self.ansatz,
            "networks": self.packer.describe(),
            "weights": self.weights.as_dict(),
            "regularization": {"l1": self.l1, "l2": self.l2},
            "sampling": {"n_domain": self.n_domain,
                         "boundary": dict(self.boundary_counts),
                         "n_data": 0 if self.data is None else len(self.data[0])},
        }


# ----------------------------------------------------------- polar family


class PolarQuarterModel:
    """One network for (v_r, v_phi, p) on a symmetry quarter.

    Inputs are the radius and the clockwise angle from the blade; angles
    are folded back into the quarter for prediction, which is exact for a
    four-fold symmetric field. All boundary conditions are weak.
    """

    family = "polar-quarter"
    parameterized = False
    omega_range = None
    band_width = None
    mask_field = None
    ansatz = None

    def __init__(self, config, omega, weights, *, hidden=(100, 100),
                 activation="tanh", l1=1e-7, l2=1e-7, n_domain=4096,
                 boundary_counts=None, v_ref_r=RADIAL_REF_SPEED, props=None):
        self.config = config
        self.omega = float(omega)
        self.weights = weights if isinstance(weights, LossWeights) else LossWeights(weights)
        self.l1, self.l2 = l1, l2
        self.n_domain = int(n_domain)
        self.boundary_counts = dict(boundary_counts or {})
        self.v_ref_r = float(v_ref_r)
        self.props = props or FluidProps()
        self.packer = ParamPacker([NetworkSpec("flow", 2, 3, hidden, activation)])

        cfg = config
        v_tip = self.omega * cfg.r_stirrer
        p_scale = self.props.rho * v_tip**2
        vr_scale = self.v_ref_r
        apply = self.packer.apply_fn("flow")

        def point_fn(theta, z):
            feats = jnp.stack([premap_span(z[0], cfg.r_stirrer, cfg.r_reactor),
                               premap_quarter_angle(z[1])])
            raw = apply(theta, feats)
            return jnp.stack([vr_scale * raw[0], v_tip * raw[1],
                              p_scale * raw[2]])

        self._point_fns = {"flow": point_fn}
        _FlowModel._finish(self)

    point_function = _FlowModel.point_function
    derivative_function = _FlowModel.derivative_function
    _resolve_rate = _FlowModel._resolve_rate
    _guard_inside = _FlowModel._guard_inside

    def batches(self, seed, index=0):
        cfg = self.config
        out = {"domain": _quarter_rows(sample_domain(
            cfg, "quarter", self.n_domain, child_seed(seed, 0, index)))}
        for label, count in self.boundary_counts.items():
            pts = sample_boundary(cfg, label, count,
                                  child_seed(seed, 1, _LABEL_IDS[label]),
                                  quarter=True)
            out[label] = _quarter_rows(pts)
        return out

    def loss_breakdown(self, theta, batches):
        forward = self._forwards["flow"]
        u, du, d2u = self._derivs["flow"](theta, batches["domain"])
        res = physics.residual_ns_polar(batches["domain"][:, 0], u, du, d2u,
                                        self.props)
        if "wall" in batches:
            uw = physics.bc_residuals("wall", forward(theta, batches["wall"]))
            res["wall_vr"], res["wall_vphi"] = uw[:, 0], uw[:, 1]
        if "stirrer" in batches:
            us = forward(theta, batches["stirrer"])
            res["impeller_vr"] = us[:, 0]
            res["impeller_vphi"] = us[:, 1] - self.omega * batches["stirrer"][:, 0]
        if "symmetry" in batches:
            d = physics.bc_residuals("symmetry",
                                     forward(theta, batches["symmetry"]))
            res["symmetry_vr"] = d[:, 0]
            res["symmetry_vphi"] = d[:, 1]
            res["symmetry_p"] = d[:, 2]
        return assemble_loss(res, self.weights, theta, self.l1, self.l2)

    def predict_polar(self, theta, rows):
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        return np.asarray(self._forwards["flow"](jnp.asarray(theta), rows))

    def predict(self, theta, pts, omega=None):
        self._resolve_rate(omega)
        pts, r = self._guard_inside(pts)
        eta = -np.arctan2(pts[:, 1], pts[:, 0])
        rows = np.stack([r, _reflect_angle(eta)], axis=1)
        u = self.predict_polar(theta, rows)
        phi = np.arctan2(pts[:, 1], pts[:, 0])
        vx = u[:, 0] * np.cos(phi) + u[:, 1] * np.sin(phi)
        vy = u[:, 0] * np.sin(phi) - u[:, 1] * np.cos(phi)
        return np.stack([vx, vy], axis=1), u[:, 2].copy()

    def describe(self):
        return {
            "family": self.family,
            "omega": self.omega,
            "networks": self.packer.describe(),
            "weights": self.weights.as_dict(),
            "regularization": {"l1": self.l1, "l2": self.l2},
            "v_ref_r": self.v_ref_r,
            "sampling": {"n_domain": self.n_domain,
                         "boundary": dict(self.boundary_counts)},
        }


# ------------------------------------------------- domain decomposition


class DDModel:
    """Radial swirl net inside an interface circle, full polar net outside.

    The inner net sees only the radius (the region is swirl-dominated and
    angle-independent there) and carries the stirrer condition strongly:
    its swirl is the lifting profile plus a mask that vanishes at the
    stirrer radius, and the mask clamp extends rigid rotation over the
    swirling disk below it. The outer net predicts all three fields on the
    quarter sector. Variants: ``r_split`` adds a fourth output holding the
    swirl past the baffle circle, with continuity conditions across the
    split; ``omega_range`` feeds the normalized stirring rate to both nets
    and makes the output scales rate-dependent; ``band_width`` replaces the
    sharp interface by a blended overlap band.
    """

    family = "domain-decomposition"

    def __init__(self, config, weights, *, omega=0.625, omega_range=None,
                 r_inter=0.07, hidden_inner=(25, 25), hidden_outer=(100, 100),
                 activation="tanh", l1=1e-7, l2=1e-7, n_domain=4096,
                 ratio_inner_outer=0.2, boundary_counts=None, r_split=None,
                 band_width=None, n_band=0, v_ref_r=RADIAL_REF_SPEED,
                 props=None):
        self.config = config
        self.weights = weights if isinstance(weights, LossWeights) else LossWeights(weights)
        self.r_inter = float(r_inter)
        self.l1, self.l2 = l1, l2
        self.n_domain = int(n_domain)
        self.ratio_inner_outer = float(ratio_inner_outer)
        self.boundary_counts = dict(boundary_counts or {})
        self.r_split = None if r_split is None else float(r_split)
        self.band_width = None if band_width is None else float(band_width)
        self.n_band = int(n_band)
        self.v_ref_r = float(v_ref_r)
        self.props = props or FluidProps()

        self.parameterized = omega_range is not None
        self.split = self.r_split is not None
        self.overlap = self.band_width is not None
        if self.split and (self.parameterized or self.overlap):
            raise ConfigError(
                "the swirl-split variant is a fixed-rate, sharp-interface model"
            )
        if self.parameterized:
            lo, hi = (float(v) for v in omega_range)
            if not lo < hi:
                raise ConfigError(f"empty rate interval ({lo}, {hi})")
            self.omega_range = (lo, hi)
            self.omega = None
        else:
            self.omega_range = None
            self.omega = float(omega)

        extra = 1 if self.parameterized else 0
        self.packer = ParamPacker([
            NetworkSpec("inner", 1 + extra, 2, hidden_inner, activation),
            NetworkSpec("outer", 2 + extra, 4 if self.split else 3,
                        hidden_outer, activation),
        ])
        self.mask_field = build_distance_field("hybrid", config,
                                               r_inter=self.r_inter,
                                               radial=True)
        self.overlap_field = (
            build_distance_field("overlap", config, r_inter=self.r_inter,
                                 band_width=self.band_width)
            if self.overlap else None)
        self._build_point_fns()

    def _build_point_fns(self):
        cfg = self.config
        rho = self.props.rho
        r_s, r_r, r_i = cfg.r_stirrer, cfg.r_reactor, self.r_inter
        param = self.parameterized
        rate_span = self.omega_range if param else None
        fixed_omega = self.omega
        mask_eval = field_jax(self.mask_field)
        shape_fn = liftfield.v_bc_phi_jax(1.0, r_s)
        swirl_unit = swirl_scale(1.0, r_i, r_s)
        apply_inner = self.packer.apply_fn("inner")
        apply_outer = self.packer.apply_fn("outer")
        v_ref_r = self.v_ref_r
        split, r_split = self.split, self.r_split

        def rate_of(z):
            return z[-1] if param else fixed_omega

        def inner_fn(theta, z):
            r = z[0]
            om = rate_of(z)
            feats = [premap_span(r, r_s, r_i)]
            if param:
                feats.append(omega_tilde(om, *rate_span))
            raw = apply_inner(theta, jnp.stack(feats))
            v_tip = om * r_s
            v_phi = om * shape_fn(r) + mask_eval(r) * (v_tip * raw[0])
            return jnp.stack([v_phi, rho * v_tip**2 * raw[1]])

        def outer_raw_fn(theta, z):
            r, eta = z[0], z[1]
            om = rate_of(z)
            feats = [premap_outer(r, r_i, r_r), premap_quarter_angle(eta)]
            if param:
                feats.append(omega_tilde(om, *rate_span))
            raw = apply_outer(theta, jnp.stack(feats))
            vr_s = radial_velocity_scale(om) if param else v_ref_r
            vp_s = om * swirl_unit
            p_s = rho * (vr_s**2 + vp_s**2)
            cols = [vr_s * raw[0], vp_s * raw[1], p_s * raw[2]]
            if split:
                cols.append(SPLIT_SWIRL_SCALE * raw[3])
            return jnp.stack(cols)

        if split:

            def outer_fn(theta, z):
                u = outer_raw_fn(theta, z)
                v_phi = jnp.where(z[0] <= r_split, u[1], u[3])
                return jnp.stack([u[0], v_phi, u[2]])

        else:
            outer_fn = outer_raw_fn

        self._point_fns = {"inner": inner_fn, "outer": outer_fn}
        self._outer_raw_fn = outer_raw_fn
        self._fwd_outer_raw = jax.vmap(outer_raw_fn, in_axes=(None, 0))
        self._derivs_outer_raw = input_derivatives(outer_raw_fn)

        if self.overlap:
            ov_eval = field_jax(self.overlap_field)

            def band_fn(theta, z):
                ui = inner_fn(theta, jnp.stack([z[0], z[-1]]) if param else z[:1])
                uo = outer_raw_fn(theta, z)
                g = ov_eval(z[0])
                return jnp.stack([uo[0],
                                  g * ui[0] + (1.0 - g) * uo[1],
                                  g * ui[1] + (1.0 - g) * uo[2]])

            self._point_fns["band"] = band_fn

        _FlowModel._finish(self)

    point_function = _FlowModel.point_function
    derivative_function = _FlowModel.derivative_function
    _resolve_rate = _FlowModel._resolve_rate
    _rate_column = _FlowModel._rate_column
    _guard_inside = _FlowModel._guard_inside

    # ------------------------------------------------------------ batches

    def _attach_rates(self, rows, rate_seed, paired=False):
        if not self.parameterized:
            return rows
        rng = np.random.default_rng(rate_seed)
        lo, hi = self.omega_range
        if paired:
            half = rng.uniform(lo, hi, len(rows) // 2)
            om = np.concatenate([half, half])
        else:
            om = rng.uniform(lo, hi, len(rows))
        return np.column_stack([rows, om])

    def batches(self, seed, index=0):
        cfg, r_i, bw = self.config, self.r_inter, self.band_width
        ratio = self.ratio_inner_outer
        n_inner = int(round(self.n_domain * ratio / (1.0 + ratio)))
        n_outer = self.n_domain - n_inner

        inner_pts = sample_domain(cfg, "inner-axis", n_inner,
                                  child_seed(seed, 0, index, 0),
                                  r_inter=r_i, band_width=bw)
        outer_pts = sample_domain(cfg, "outer", n_outer,
                                  child_seed(seed, 0, index, 1),
                                  r_inter=r_i, band_width=bw)
        out = {
            "inner": self._attach_rates(inner_pts[:, :1],
                                        child_seed(seed, 0, index, 10)),
            "outer": self._attach_rates(_quarter_rows(outer_pts),
                                        child_seed(seed, 0, index, 11)),
        }
        if self.overlap:
            band_pts = sample_domain(cfg, "band", self.n_band,
                                     child_seed(seed, 0, index, 2),
                                     r_inter=r_i, band_width=bw)
            out["band"] = self._attach_rates(_quarter_rows(band_pts),
                                             child_seed(seed, 0, index, 12))

        for label, count in self.boundary_counts.items():
            j = _LABEL_IDS[label]
            pts = sample_boundary(
                cfg, label, count, child_seed(seed, 1, j), quarter=True,
                r_inter=r_i, r_split=self.r_split,
                r_range=(r_i, cfg.r_baffle) if label == "symmetry" else None)
            rows = self._attach_rates(_quarter_rows(pts), child_seed(seed, 2, j),
                                      paired=(label == "symmetry"))
            if label == "interface":
                out["interface_outer"] = rows
                out["interface_inner"] = rows[:, [0, 2]] if self.parameterized \
                    else rows[:, [0]]
            else:
                out[label] = rows
        return out

    # --------------------------------------------------------------- loss

    def loss_breakdown(self, theta, batches):
        res = {}
        ui, ji, hi = self._derivs["inner"](theta, batches["inner"])
        ode = physics.residual_swirl_ode(batches["inner"][:, 0], ui[:, 0],
                                         ji[:, 0, 0], hi[:, 0, 0, 0],
                                         ji[:, 1, 0], self.props)
        res["momentum_r_inner"] = ode["momentum_r"]
        res["momentum_phi_inner"] = ode["momentum_phi"]

        uo, jo, ho = self._derivs["outer"](theta, batches["outer"])
        flow = physics.residual_ns_polar(batches["outer"][:, 0], uo,
                                         jo[:, :, :2], ho[:, :, :2, :2],
                                         self.props)
        if self.overlap:
            ub, jb, hb = self._derivs["band"](theta, batches["band"])
            band = physics.residual_ns_polar(batches["band"][:, 0], ub,
                                             jb[:, :, :2], hb[:, :, :2, :2],
                                             self.props)
            flow = {k: jnp.concatenate([flow[k], band[k]]) for k in flow}
        res["momentum_r_outer"] = flow["momentum_r"]
        res["momentum_phi_outer"] = flow["momentum_phi"]
        res["mass_outer"] = flow["mass"]

        if "interface_outer" in batches:
            if self.overlap:
                uo_if = self._fwd_outer_raw(theta, batches["interface_outer"])
                res["coupling_vr"] = uo_if[:, 0]
            else:
                ui_if, ji_if, _ = self._derivs["inner"](
                    theta, batches["interface_inner"])
                uo_if, jo_if, _ = self._derivs["outer"](
                    theta, batches["interface_outer"])
                res.update(physics.coupling_residuals(
                    ui_if, ji_if[:, 0, 0], uo_if, jo_if[:, 1, 0]))

        if "wall" in batches:
            uw = self._fwd_outer_raw(theta, batches["wall"])
            res["wall_vr"] = uw[:, 0]
            res["wall_vphi"] = uw[:, 3] if self.split else uw[:, 1]
        if "symmetry" in batches:
            d = physics.bc_residuals(
                "symmetry", self._fwd_outer_raw(theta, batches["symmetry"]))
            res["symmetry_vr"] = d[:, 0]
            res["symmetry_vphi"] = d[:, 1]
            res["symmetry_p"] = d[:, 2]
        if self.split:
            uc = self._fwd_outer_raw(theta, batches["gamma_c"])
            res["gamma_c"] = physics.split_residuals(uc[:, 1], uc[:, 3])["gamma_c"]
            ug, jg, _ = self._derivs_outer_raw(theta, batches["gamma_d"])
            res["gamma_d"] = physics.split_residuals(
                ug[:, 1], ug[:, 3], jg[:, 1, 0], jg[:, 3, 0])["gamma_d"]
            res["baffle"] = self._fwd_outer_raw(theta, batches["baffle"])[:, 1]
        return assemble_loss(res, self.weights, theta, self.l1, self.l2)

    # --------------------------------------------------------- prediction

    def predict_inner(self, theta, r, omega=None):
        r = np.asarray(r, dtype=float).ravel()
        rows = r[:, None]
        if self.parameterized:
            rows = np.column_stack([r, self._rate_column(omega, len(r))])
        u = np.asarray(self._forwards["inner"](jnp.asarray(theta), rows))
        return u[:, 0].copy(), u[:, 1].copy()

    def _outer_rows(self, rows, omega):
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        want = 3 if self.parameterized else 2
        if self.parameterized and rows.shape[1] == 2:
            rows = np.column_stack([rows, self._rate_column(omega, len(rows))])
        if rows.shape[1] != want:
            raise ConfigError(f"outer rows must have {want} columns, "
                              f"got {rows.shape}")
        return rows

    def predict_outer_raw(self, theta, rows, omega=None):
        rows = self._outer_rows(rows, omega)
        return np.asarray(self._fwd_outer_raw(jnp.asarray(theta), rows))

    def predict_band(self, theta, rows, omega=None):
        if not self.overlap:
            raise ConfigError("model has no overlap band")
        rows = self._outer_rows(rows, omega)
        return np.asarray(self._forwards["band"](jnp.asarray(theta), rows))

    def predict(self, theta, pts, omega=None):
        pts, r = self._guard_inside(pts)
        eta_q = _reflect_angle(-np.arctan2(pts[:, 1], pts[:, 0]))
        om_col = (self._rate_column(omega, len(r))
                  if self.parameterized else None)
        rows_in = r[:, None]
        rows_out = np.stack([r, eta_q], axis=1)
        if self.parameterized:
            rows_in = np.column_stack([rows_in, om_col])
            rows_out = np.column_stack([rows_out, om_col])
        else:
            self._resolve_rate(omega)
        theta = jnp.asarray(theta)
        ui = np.asarray(self._forwards["inner"](theta, rows_in))
        uo = np.asarray(self._fwd_outer_raw(theta, rows_out))
        if self.split:
            swirl = np.where(r <= self.r_split, uo[:, 1], uo[:, 3])
            uo = np.stack([uo[:, 0], swirl, uo[:, 2]], axis=1)
        if self.overlap:
            g = eval_field(self.overlap_field, r)
            edge_in = self.r_inter - 0.5 * self.band_width
            v_r = np.where(r < edge_in, 0.0, uo[:, 0])
        else:
            g = np.where(r < self.r_inter, 1.0,
                         np.where(r > self.r_inter, 0.0, 0.5))
            v_r = (1.0 - g) * uo[:, 0]
        v_phi = g * ui[:, 0] + (1.0 - g) * uo[:, 1]
        p = g * ui[:, 1] + (1.0 - g) * uo[:, 2]
        phi = np.arctan2(pts[:, 1], pts[:, 0])
        vx = v_r * np.cos(phi) + v_phi * np.sin(phi)
        vy = v_r * np.sin(phi) - v_phi * np.cos(phi)
        return np.stack([vx, vy], axis=1), p

    def describe(self):
        variant = "plain"
        if self.split:
            variant = "swirl-split"
        elif self.overlap:
            variant = "overlap"
        out = {
            "family": self.family,
            "variant": variant,
            "omega": self.omega,
            "omega_range": list(self.omega_range) if self.parameterized else None,
            "r_inter": self.r_inter,
            "networks": self.packer.describe(),
            "weights": self.weights.as_dict(),
            "regularization": {"l1": self.l1, "l2": self.l2},
            "v_ref_r": self.v_ref_r,
            "sampling": {"n_domain": self.n_domain,
                         "ratio_inner_outer": self.ratio_inner_outer,
                         "boundary": dict(self.boundary_counts),
                         "n_band": self.n_band},
        }
        if self.split:
            out["r_split"] = self.r_split
        if self.overlap:
            out["band_width"] = self.band_width
        return out


# ------------------------------------------------------------ ode segment


class OdeSegmentModel:
    """The radial swirl net alone on a segment [r_lo, r_hi].

    Carries the stirrer condition strongly at r_lo through the same mask
    and lifting construction as the decomposed models; labeled values at
    the segment ends (or anywhere else) enter through a data term.
    """

    family = "swirl-segment"
    parameterized = False
    omega_range = None
    band_width = None

    def __init__(self, omega, weights, *, r_lo=0.040, r_hi=0.070,
                 hidden=(25, 25), activation="tanh", l1=1e-7, l2=1e-7,
                 n_domain=512, data=None, props=None, config=None):
        if config is None:
            config = GeometryConfig.annulus(r_inner=r_lo,
                                            r_outer=max(0.1, 1.5 * r_hi))
        self.config = config
        self.omega = float(omega)
        self.weights = weights if isinstance(weights, LossWeights) else LossWeights(weights)
        self.r_lo, self.r_hi = float(r_lo), float(r_hi)
        self.l1, self.l2 = l1, l2
        self.n_domain = int(n_domain)
        self.props = props or FluidProps()
        self.packer = ParamPacker([NetworkSpec("swirl", 1, 2, hidden, activation)])
        if data is not None:
            radii, vals = data
            data = (np.asarray(radii, dtype=float).reshape(-1, 1),
                    np.asarray(vals, dtype=float))
        self.data = data
        self.mask_field = build_distance_field("hybrid", config,
                                               r_inter=self.r_hi, radial=True)

        rho = self.props.rho
        omega_ = self.omega
        v_tip = omega_ * self.r_lo
        mask_eval = field_jax(self.mask_field)
        shape_fn = liftfield.v_bc_phi_jax(1.0, self.r_lo)
        apply = self.packer.apply_fn("swirl")
        r_lo_, r_hi_ = self.r_lo, self.r_hi

        def point_fn(theta, z):
            r = z[0]
            raw = apply(theta, jnp.stack([premap_span(r, r_lo_, r_hi_)]))
            v_phi = omega_ * shape_fn(r) + mask_eval(r) * (v_tip * raw[0])
            return jnp.stack([v_phi, rho * v_tip**2 * raw[1]])

        self._point_fns = {"swirl": point_fn}
        _FlowModel._finish(self)

    point_function = _FlowModel.point_function
    derivative_function = _FlowModel.derivative_function
    _resolve_rate = _FlowModel._resolve_rate

    def batches(self, seed, index=0):
        pts = sample_domain(self.config, "inner-axis", self.n_domain,
                            child_seed(seed, 0, index), r_inter=self.r_hi)
        out = {"domain": pts[:, :1]}
        if self.data is not None:
            out["data_points"], out["data_values"] = self.data
        return out

    def loss_breakdown(self, theta, batches):
        ui, ji, hi = self._derivs["swirl"](theta, batches["domain"])
        ode = physics.residual_swirl_ode(batches["domain"][:, 0], ui[:, 0],
                                         ji[:, 0, 0], hi[:, 0, 0, 0],
                                         ji[:, 1, 0], self.props)
        res = {"momentum_r_inner": ode["momentum_r"],
               "momentum_phi_inner": ode["momentum_phi"]}
        if "data_points" in batches:
            res["data"] = physics.data_residual(
                self._forwards["swirl"](theta, batches["data_points"]),
                batches["data_values"])
        return assemble_loss(res, self.weights, theta, self.l1, self.l2)

    def predict_profile(self, theta, r):
        rows = np.asarray(r, dtype=float).reshape(-1, 1)
        u = np.asarray(self._forwards["swirl"](jnp.asarray(theta), rows))
        return u[:, 0].copy(), u[:, 1].copy()

    def describe(self):
        return {
            "family": self.family,
            "omega": self.omega,
            "segment": [self.r_lo, self.r_hi],
            "networks": self.packer.describe(),
            "weights": self.weights.as_dict(),
            "regularization": {"l1": self.l1, "l2": self.l2},
            "sampling": {"n_domain": self.n_domain,
                         "n_data": 0 if self.data is None else len(self.data[0])},
        }
