"""L-BFGS training with periodic collocation resampling.

The optimizer is a limited-memory BFGS with a strong-Wolfe line search,
minimizing the log-transformed total loss. Training runs in segments of
``resample_every`` iterations: each segment draws a fresh interior batch
(boundary batches are seeded independently of the segment index, so they
stay fixed) and starts with an empty curvature history, since the objective
changed under the optimizer. Per-iteration loss components are recorded for
the history CSV at no extra cost, riding along as the auxiliary output of
the jitted value-and-gradient.
"""

import time
from dataclasses import dataclass

import jax
import jax.numpy as jnp
import numpy as np

from .errors import TrainingAbort
from .physics import LOG_FLOOR
from .presets import build_model

_ALPHA_MAX = 1e10


# -------------------------------------------------------------- optimizer


@dataclass
class MinimizeResult:
    x: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    n_evals: int
    reason: str
    values: np.ndarray
    aux: object = None


def _call(fun, x):
    out = fun(x)
    if len(out) == 2:
        (f, g), aux = out, None
    else:
        f, g, aux = out
    return float(f), np.asarray(g, dtype=float), aux


def _zoom(phi, a_lo, f_lo, d_lo, a_hi, f_hi, f0, d0, c1, c2):
    """Shrink [a_lo, a_hi] onto a strong-Wolfe point; a_lo always satisfies
    the sufficient-decrease condition. Falls back to the best
    sufficient-decrease point if the interval collapses first."""
    best = None
    for _ in range(30):
        h = a_hi - a_lo
        # quadratic through (a_lo, f_lo, d_lo) and (a_hi, f_hi), safeguarded
        a = None
        if np.isfinite(f_hi):
            curv = (f_hi - f_lo - d_lo * h) / h**2
            if np.isfinite(curv) and curv > 0.0:
                t = -d_lo / (2.0 * curv)
                if np.isfinite(t) and 0.1 <= t / h <= 0.9:
                    a = a_lo + t
        if a is None:
            a = a_lo + 0.5 * h
        f, g, aux, dphi = phi(a)
        if not np.isfinite(f) or f > f0 + c1 * a * d0 or f >= f_lo:
            a_hi, f_hi = a, f
        else:
            if abs(dphi) <= -c2 * d0:
                return a, f, g, aux
            best = (a, f, g, aux)
            if dphi * (a_hi - a_lo) >= 0.0:
                a_hi, f_hi = a_lo, f_lo
            a_lo, f_lo, d_lo = a, f, dphi
        if abs(a_hi - a_lo) <= 1e-12 * max(1.0, abs(a_lo)):
            break
    if best is not None and best[1] < f0:
        return best
    return None


def _line_search(fun, x, d, f0, g0, a_init, c1, c2):
    """Strong-Wolfe search along d. Returns (alpha, f, g, aux) or None."""
    d0 = float(g0 @ d)
    if d0 >= 0.0 or not np.isfinite(d0):
        return None

    def phi(a):
        f, g, aux = _call(fun, x + a * d)
        return f, g, aux, float(g @ d)

    a_prev, f_prev, d_prev = 0.0, f0, d0
    a = a_init
    for i in range(25):
        f, g, aux, dphi = phi(a)
        if not np.isfinite(f) or f > f0 + c1 * a * d0 or (i > 0 and f >= f_prev):
            return _zoom(phi, a_prev, f_prev, d_prev, a, f, f0, d0, c1, c2)
        if abs(dphi) <= -c2 * d0:
            return a, f, g, aux
        if dphi >= 0.0:
            return _zoom(phi, a, f, dphi, a_prev, f_prev, f0, d0, c1, c2)
        a_prev, f_prev, d_prev = a, f, dphi
        a = min(2.0 * a, _ALPHA_MAX)
        if a == a_prev:
            break
    return None


def _two_loop(g, mem):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(mem):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if mem:
        s, y, _ = mem[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(mem, reversed(alphas)):
        q += s * (a - rho * (y @ q))
    return -q


def minimize_lbfgs(fun, x0, *, max_iter, memory=50, grad_tol=1e-12,
                   obj_tol=0.0, c1=1e-4, c2=0.9, callback=None):
    """Minimize fun(x) -> (value, gradient[, aux]) from x0.

    Stops on the iteration budget, the gradient infinity-norm dropping to
    grad_tol, the relative objective decrease dropping to obj_tol (if
    positive), or an unrecoverable line-search failure; the reason is
    reported verbatim on the result. A failed search is retried once from
    the steepest-descent direction with the curvature memory cleared.
    Raises TrainingAbort if the objective is not finite at x0.
    """
    x = np.asarray(x0, dtype=float).copy()
    n_evals = 0

    def counted(z):
        nonlocal n_evals
        n_evals += 1
        return fun(z)

    f, g, aux = _call(counted, x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise TrainingAbort(
            "objective is not finite at the starting point", breakdown=aux)

    mem = []
    values = []
    reason = "max iterations"
    iterations = 0
    while iterations < max_iter:
        if np.max(np.abs(g)) <= grad_tol:
            reason = "gradient tolerance"
            break
        d = _two_loop(g, mem)
        if not np.all(np.isfinite(d)) or float(g @ d) >= 0.0:
            mem.clear()
            d = -g
        fresh = not mem
        a_init = 1.0 if mem else min(1.0, 1.0 / max(np.linalg.norm(g), 1e-8))
        step = _line_search(counted, x, d, f, g, a_init, c1, c2)
        if step is None and not fresh:
            # retry once along steepest descent with the memory cleared
            mem.clear()
            d = -g
            a_init = min(1.0, 1.0 / max(np.linalg.norm(g), 1e-8))
            step = _line_search(counted, x, d, f, g, a_init, c1, c2)
        if step is None:
            reason = "line search failure"
            break
        alpha, f_new, g_new, aux = step
        s = alpha * d
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            mem.append((s, y, 1.0 / sy))
            if len(mem) > memory:
                mem.pop(0)
        x = x + s
        f_prev, f, g = f, f_new, g_new
        iterations += 1
        values.append(f)
        if callback is not None:
            callback(iterations, f, aux)
        if obj_tol > 0.0 and (f_prev - f) <= obj_tol * max(1.0, abs(f_prev),
                                                           abs(f)):
            reason = "objective tolerance"
            break
    return MinimizeResult(x=x, value=f, grad_norm=float(np.max(np.abs(g))),
                          iterations=iterations, n_evals=n_evals,
                          reason=reason, values=np.asarray(values), aux=aux)


# ----------------------------------------------------------- training loop


@dataclass
class RunRecord:
    preset: str
    seed: int
    iterations: int
    n_segments: int
    reason: str
    wall_time: float
    theta: np.ndarray
    history: dict
    final: dict


def _segment_lengths(epochs, resample_every):
    full, rem = divmod(int(epochs), int(resample_every))
    return [resample_every] * full + ([rem] if rem else [])


def _loss_value_and_grad(model):
    def raw(theta, batches):
        bd = model.loss_breakdown(theta, batches)
        return bd.log_total, (bd.total, bd.per_component)

    return jax.jit(jax.value_and_grad(raw, has_aux=True))


def train_model(model, *, epochs, resample_every=1000, seed=0, memory=50,
                grad_tol=1e-12, obj_tol=0.0, callback=None):
    """Run the resample-and-minimize loop on a model; returns a RunRecord.

    One epoch is one accepted L-BFGS iteration. The interior batch is
    redrawn and the curvature memory dropped every ``resample_every``
    epochs; a stop for any reason other than the per-segment iteration
    budget ends the whole run.
    """
    t0 = time.perf_counter()
    value_and_grad = _loss_value_and_grad(model)
    theta = model.packer.init(seed)

    rows = {"iteration": [], "segment": [], "total": [], "log_total": []}
    component_keys = sorted(model.weights.components()) \
        if hasattr(model.weights, "components") else sorted(model.weights)

    def add_row(iteration, segment, log_total, aux):
        total, comps = aux
        rows["iteration"].append(float(iteration))
        rows["segment"].append(float(segment))
        rows["total"].append(total)
        rows["log_total"].append(log_total)
        for key in component_keys:
            rows.setdefault(key, []).append(comps[key])

    lengths = _segment_lengths(epochs, resample_every)
    iterations = 0
    segments_run = 0
    reason = "max iterations"
    final_aux = None
    for segment, seg_len in enumerate(lengths):
        batches = {key: jnp.asarray(val)
                   for key, val in model.batches(seed, segment).items()}

        def fun(x, _b=batches):
            (val, aux), grad = value_and_grad(jnp.asarray(x), _b)
            total, comps = aux
            host = (float(total), {k: float(v) for k, v in comps.items()})
            return float(val), np.asarray(grad), host

        segments_run += 1
        if segment == 0:
            f0, _, aux0 = _call(fun, theta)
            add_row(0, 0, f0, aux0)
            final_aux = aux0

        base = iterations

        def per_iter(k, f, aux, _base=base, _seg=segment):
            add_row(_base + k, _seg, f, aux)
            if callback is not None:
                callback(_base + k, f, aux)

        res = minimize_lbfgs(fun, theta, max_iter=seg_len, memory=memory,
                             grad_tol=grad_tol, obj_tol=obj_tol,
                             callback=per_iter)
        theta = res.x
        iterations += res.iterations
        if res.aux is not None:
            final_aux = res.aux
        if res.reason != "max iterations":
            reason = res.reason
            break

    history = {key: np.asarray(vals) for key, vals in rows.items()}
    total, comps = final_aux
    final = {"total": total,
             "log_total": float(np.log(total + LOG_FLOOR)), **comps}
    return RunRecord(preset=None, seed=seed, iterations=iterations,
                     n_segments=segments_run, reason=reason,
                     wall_time=time.perf_counter() - t0, theta=theta,
                     history=history, final=final)


def train(preset, *, seed=0, data=None, **kwargs):
    """Build the preset's model and train it on the preset's schedule."""
    model = build_model(preset, data=data)
    record = train_model(model, epochs=preset.epochs,
                         resample_every=preset.resample_every, seed=seed,
                         **kwargs)
    record.preset = preset.name
    return record


def write_history(path, record):
    """Write the per-iteration loss history as a CSV with a header row."""
    keys = list(record.history)
    table = np.column_stack([record.history[key] for key in keys])
    np.savetxt(path, table, delimiter=",", header=",".join(keys),
               comments="", fmt="%.17e")


# ------------------------------------------------------------- robustness


@dataclass
class RobustnessResult:
    deltas: np.ndarray
    mean: float
    std: float
    records: list


def robustness_run(preset, n_seeds, evaluate, *, base_seed=0, data=None,
                   **kwargs):
    """Train the preset once per seed and collect an error per run.

    ``evaluate(model, theta) -> float`` maps each trained parameter vector
    to the scalar error being studied. The model (and its compiled loss)
    is shared across seeds; only the initialization and sampling change.
    Reports the sample standard deviation.
    """
    model = build_model(preset, data=data)
    records, deltas = [], []
    for k in range(int(n_seeds)):
        record = train_model(model, epochs=preset.epochs,
                             resample_every=preset.resample_every,
                             seed=base_seed + k, **kwargs)
        record.preset = preset.name
        records.append(record)
        deltas.append(float(evaluate(model, record.theta)))
    deltas = np.asarray(deltas)
    std = float(deltas.std(ddof=1)) if len(deltas) > 1 else 0.0
    return RobustnessResult(deltas=deltas, mean=float(deltas.mean()), std=std,
                            records=records)
