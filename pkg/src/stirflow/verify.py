"""Release-gate checks behind the ``verify`` command.

Each check exercises one independent oracle: manufactured flows that zero
the strong-form residuals exactly, central finite differences against the
engine derivatives, exactness of the boundary-locking output transforms at
their construction points, blend-weight endpoint values, and the error
metric identities. ``run_checks`` returns a result list; the CLI renders
it as a pass/fail table and an exit code.
"""

from dataclasses import dataclass

import numpy as np

from . import evaluation, geometry, liftfield, models, physics

RIGID_TOL = 1e-10
COUETTE_TOL = 1e-9
FD_REL_TOL = 1e-5
FD_FLOOR = 1e-8
GRAD_REL_TOL = 1e-4
EXACT_TOL = 1e-9
BLEND_TOL = 1e-12
METRIC_TOL = 1e-12


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _result(name, err, tol):
    return CheckResult(name, bool(err <= tol), f"max {err:.3e} (tol {tol:.0e})")


def _max_abs(residuals):
    return max(float(np.max(np.abs(v))) for v in residuals.values())


def _rel_gap(got, want, floor=FD_FLOOR):
    got, want = np.asarray(got), np.asarray(want)
    return float(np.max(np.abs(got - want) / np.maximum(np.abs(want), floor)))


# ------------------------------------------------- manufactured solutions


def _rigid_rotation_cartesian(pts, omega, props):
    x, y = pts[:, 0], pts[:, 1]
    n = len(x)
    p = 0.5 * props.rho * omega**2 * (x**2 + y**2)
    u = np.stack([omega * y, -omega * x, p], axis=1)
    du = np.zeros((n, 3, 2))
    du[:, 0, 1] = omega
    du[:, 1, 0] = -omega
    du[:, 2, 0] = props.rho * omega**2 * x
    du[:, 2, 1] = props.rho * omega**2 * y
    d2u = np.zeros((n, 3, 2, 2))
    d2u[:, 2, 0, 0] = props.rho * omega**2
    d2u[:, 2, 1, 1] = props.rho * omega**2
    return u, du, d2u


def _rigid_rotation_polar(r, omega, props):
    n = len(r)
    u = np.stack([np.zeros(n), omega * r, 0.5 * props.rho * omega**2 * r**2], axis=1)
    du = np.zeros((n, 3, 2))
    du[:, 1, 0] = omega
    du[:, 2, 0] = props.rho * omega**2 * r
    d2u = np.zeros((n, 3, 2, 2))
    d2u[:, 2, 0, 0] = props.rho * omega**2
    return u, du, d2u


def _couette_polar(r, omega, props, r_inner=0.040, r_outer=0.100):
    a = omega * r_inner**2 / (r_inner**2 - r_outer**2)
    b = -a * r_outer**2
    v = a * r + b / r
    dv = a - b / r**2
    d2v = 2.0 * b / r**3
    _, p = evaluation.couette_analytic(r, omega, r_inner, r_outer, props)
    n = len(r)
    u = np.stack([np.zeros(n), v, p], axis=1)
    du = np.zeros((n, 3, 2))
    du[:, 1, 0] = dv
    du[:, 2, 0] = props.rho * v**2 / r
    d2u = np.zeros((n, 3, 2, 2))
    d2u[:, 1, 0, 0] = d2v
    d2u[:, 2, 0, 0] = props.rho * (2.0 * v * dv * r - v**2) / r**2
    return u, du, d2u, v, dv, d2v


def check_rigid_rotation_cartesian(residual_fn=None, omega=0.625, n=1000, seed=11):
    fn = residual_fn or physics.residual_ns_cartesian
    props = physics.FluidProps()
    pts = geometry.sample_domain(geometry.GeometryConfig(), "full", n, seed)
    u, du, d2u = _rigid_rotation_cartesian(pts, omega, props)
    return _result("rigid-rotation-cartesian", _max_abs(fn(u, du, d2u, props)),
                   RIGID_TOL)


def check_rigid_rotation_polar(residual_fn=None, omega=0.625, n=1000, seed=12):
    fn = residual_fn or physics.residual_ns_polar
    props = physics.FluidProps()
    r = np.random.default_rng(seed).uniform(0.041, 0.099, n)
    u, du, d2u = _rigid_rotation_polar(r, omega, props)
    return _result("rigid-rotation-polar", _max_abs(fn(r, u, du, d2u, props)),
                   RIGID_TOL)


def check_couette_polar(omega=0.625, n=1000, seed=13):
    props = physics.FluidProps()
    r = np.random.default_rng(seed).uniform(0.041, 0.099, n)
    u, du, d2u, _, _, _ = _couette_polar(r, omega, props)
    return _result("couette-polar", _max_abs(
        physics.residual_ns_polar(r, u, du, d2u, props)), COUETTE_TOL)


def check_couette_swirl_ode(omega=0.625, n=1000, seed=14):
    props = physics.FluidProps()
    r = np.random.default_rng(seed).uniform(0.041, 0.099, n)
    _, du, _, v, dv, d2v = _couette_polar(r, omega, props)
    res = physics.residual_swirl_ode(r, v, dv, d2v, du[:, 2, 0], props)
    return _result("couette-swirl-ode", _max_abs(res), COUETTE_TOL)


# --------------------------------------------------- derivative agreement


def _fd_sample_points(n, seed):
    """Interior points clear of the output-transform kinks.

    The lifting profile changes branch at the stirrer radius and the blend
    clamps saturate near boundaries, so sampled radii keep a margin from
    both circles.
    """
    rng = np.random.default_rng(seed)
    r = rng.uniform(0.050, 0.092, n)
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)


def _fd_model_derivatives(model, name, theta, pts, h=1e-6):
    derivs = model.derivative_function(name)
    _, du, d2u = derivs(theta, pts)

    def shift(axis, delta):
        moved = np.array(pts)
        moved[:, axis] += delta
        return moved

    worst = 0.0
    for axis in range(2):
        u_plus, j_plus, _ = derivs(theta, shift(axis, h))
        u_minus, j_minus, _ = derivs(theta, shift(axis, -h))
        fd_j = (np.asarray(u_plus) - np.asarray(u_minus)) / (2.0 * h)
        worst = max(worst, _rel_gap(np.asarray(du)[:, :, axis], fd_j))
        fd_h = (np.asarray(j_plus) - np.asarray(j_minus)) / (2.0 * h)
        worst = max(worst, _rel_gap(np.asarray(d2u)[:, :, :, axis], fd_h))
    return worst


def check_derivatives_fd(n_points=8, seed=21):
    config = geometry.GeometryConfig()
    weights = {"momentum_x": 1.0, "momentum_y": 1.0, "mass": 1.0,
               "wall": 1.0, "impeller": 1.0}
    plain = models.CartesianModel(config, 0.625, weights, hidden=(8,),
                                  n_domain=16,
                                  boundary_counts={"wall": 8, "stirrer": 8})
    strong = models.CartesianModel(
        config, 0.625, {"momentum_x": 1.0, "momentum_y": 1.0, "mass": 1.0},
        hidden=(8,), ansatz="strong", n_domain=16, boundary_counts={})
    pts = _fd_sample_points(n_points, seed)
    worst = 0.0
    for model in (plain, strong):
        theta = model.packer.init(seed)
        worst = max(worst, _fd_model_derivatives(model, "flow", theta, pts))
    return _result("derivatives-fd", worst, FD_REL_TOL)


def check_parameter_gradient_fd(seed=22, n_coords=5):
    import jax

    config = geometry.GeometryConfig()
    weights = {"momentum_x": 1.0, "momentum_y": 1.0, "mass": 1.0,
               "wall": 1.0, "impeller": 1.0}
    model = models.CartesianModel(config, 0.625, weights, hidden=(6,),
                                  n_domain=12,
                                  boundary_counts={"wall": 6, "stirrer": 6})
    batches = model.batches(seed)
    theta = model.packer.init(seed)

    def objective(th):
        return model.loss_breakdown(th, batches).log_total

    value, grad = jax.value_and_grad(objective)(theta)
    grad = np.asarray(grad)
    rng = np.random.default_rng(seed)
    coords = rng.choice(theta.size, n_coords, replace=False)
    worst = 0.0
    for i in coords:
        h = 1e-6 * max(1.0, abs(float(theta[i])))
        plus, minus = np.array(theta), np.array(theta)
        plus[i] += h
        minus[i] -= h
        fd = (float(objective(plus)) - float(objective(minus))) / (2.0 * h)
        worst = max(worst, abs(fd - grad[i]) / max(abs(fd), FD_FLOOR))
    return _result("parameter-gradient-fd", worst, GRAD_REL_TOL)


# --------------------------------------------------- boundary-locking maps


def check_strong_ansatz_exactness(n_theta=3):
    config = geometry.GeometryConfig()
    worst = 0.0
    for ansatz in ("hybrid", "strong"):
        keys = {"momentum_x": 1.0, "momentum_y": 1.0, "mass": 1.0}
        if ansatz == "hybrid":
            keys["wall"] = 1.0
        model = models.CartesianModel(config, 0.625, keys, hidden=(6,),
                                      ansatz=ansatz, n_domain=8,
                                      boundary_counts=(
                                          {"wall": 8} if ansatz == "hybrid" else {}))
        for label, pts in model.mask_field.zero_samples.items():
            target = (geometry.stirrer_velocity(pts[:, 0], pts[:, 1], 0.625)
                      if label == "stirrer" else np.zeros((len(pts), 2)))
            for k in range(n_theta):
                theta = model.packer.init(100 + k)
                vel, _ = model.predict(theta, pts)
                worst = max(worst, float(np.max(np.abs(vel - target))))
    return _result("strong-ansatz-exactness", worst, EXACT_TOL)


def check_overlap_blend_endpoints(r_inter=0.070, band_width=0.010):
    config = geometry.GeometryConfig.annulus()
    blend = liftfield.build_distance_field("overlap", config, r_inter=r_inter,
                                           band_width=band_width)
    edges = np.array([r_inter - band_width / 2.0, r_inter + band_width / 2.0])
    got = liftfield.eval_field(blend, edges)
    err = float(max(abs(got[0] - 1.0), abs(got[1])))
    return _result("overlap-blend-endpoints", err, BLEND_TOL)


# ----------------------------------------------------- metric invariances


def check_metric_identities(seed=31):
    ref = evaluation.make_couette_reference(400, seed=seed, omega=0.625)
    zero = evaluation.error_metrics(ref.velocity, ref.pressure, ref, 0.625,
                                    n_eval=400)
    err = max(abs(zero.delta_l1_v), abs(zero.delta_l2_v),
              abs(zero.delta_l1_p), abs(zero.delta_l2_p))
    shifted = evaluation.error_metrics(ref.velocity, ref.pressure + 3.7, ref,
                                       0.625, n_eval=400)
    err = max(err, abs(shifted.delta_l1_p), abs(shifted.delta_l2_p))
    err = max(err, abs(evaluation.reynolds_number(0.625) - 4000.0))
    err = max(err, abs(evaluation.omega_of_reynolds(
        evaluation.reynolds_number(0.859375)) - 0.859375))
    return _result("metric-identities", err, METRIC_TOL)


# ----------------------------------------------------------------- driver

CHECKS = (
    check_rigid_rotation_cartesian,
    check_rigid_rotation_polar,
    check_couette_polar,
    check_couette_swirl_ode,
    check_derivatives_fd,
    check_parameter_gradient_fd,
    check_strong_ansatz_exactness,
    check_overlap_blend_endpoints,
    check_metric_identities,
)


def run_checks(cartesian_residual=None, polar_residual=None):
    """Run every check; residual functions are injectable for mutation tests."""
    results = [check_rigid_rotation_cartesian(cartesian_residual),
               check_rigid_rotation_polar(polar_residual)]
    for check in CHECKS[2:]:
        results.append(check())
    return results
