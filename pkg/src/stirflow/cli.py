"""Command-line front end: train, evaluate, sweep, robustness, verify.

Every command writes its outputs into one run directory (``--out``, or a
name derived from the preset under ``$STIRFLOW_OUT``, default ``runs``)
and a ``manifest.json`` recording the full preset dump, overrides, seed,
library versions, and timings, so any run can be reproduced from its
manifest alone.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 training hit a non-finite loss.
"""

import argparse
import json
import os
import platform
import sys
import time

import numpy as np

from . import evaluation, geometry, presets, training, verify
from .errors import (ConfigError, DomainError, FieldBuildError, MetricError,
                     TrainingAbort)
from .geometry import child_seed
from .network import load_checkpoint, save_checkpoint

DEFAULT_RE_LIST = (1000, 4000, 6000, 8000, 10000)


def _out_root():
    return os.environ.get("STIRFLOW_OUT", "runs")


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def _versions():
    import jax

    from . import __version__

    return {"python": platform.python_version(), "numpy": np.__version__,
            "jax": jax.__version__, "stirflow": __version__}


def _parse_overrides(pairs):
    overrides = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {pair!r} is not KEY=VALUE")
        try:
            overrides[key] = json.loads(value)
        except json.JSONDecodeError:
            overrides[key] = value
    return overrides


def _write_manifest(outdir, payload):
    payload = dict(payload, versions=_versions())
    path = os.path.join(outdir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _geometry_config(preset):
    return (geometry.GeometryConfig() if preset.geometry == "tank"
            else geometry.GeometryConfig.annulus())


def _load_training_data(preset, path, seed):
    """Draw the preset's labeled rows from a reference file, or None."""
    if not preset.n_data:
        return None
    if path is None:
        raise ConfigError(
            f"preset {preset.name!r} trains on {preset.n_data} labeled "
            f"points; pass --data with a reference CSV")
    ref = evaluation.load_reference(path, _geometry_config(preset))
    if preset.n_data > len(ref):
        raise ConfigError(
            f"reference {path} holds {len(ref)} rows, need {preset.n_data}")
    rng = np.random.default_rng(child_seed(seed, 3))
    idx = np.sort(rng.choice(len(ref), preset.n_data, replace=False))
    values = np.column_stack([ref.velocity[idx], ref.pressure[idx]])
    return ref.points[idx], values


def _resolved_preset(args):
    preset = presets.load_preset(args.preset)
    overrides = _parse_overrides(getattr(args, "override", None))
    if overrides:
        preset = presets.apply_overrides(preset, overrides)
    return preset, overrides


# ------------------------------------------------------------------ train


def cmd_train(args):
    preset, overrides = _resolved_preset(args)
    data = _load_training_data(preset, args.data, args.seed)
    model = presets.build_model(preset, data=data)
    outdir = _ensure_dir(args.out or os.path.join(
        _out_root(), f"{preset.name}-seed{args.seed}"))

    t0 = time.perf_counter()
    record = training.train_model(model, epochs=preset.epochs,
                                  resample_every=preset.resample_every,
                                  seed=args.seed)
    record.preset = preset.name
    train_s = time.perf_counter() - t0

    ckpt = os.path.join(outdir, "checkpoint.bin")
    save_checkpoint(ckpt, record.theta, header={
        "preset": preset.name, "overrides": overrides, "seed": args.seed,
        "model": model.describe()})
    history = os.path.join(outdir, "history.csv")
    training.write_history(history, record)
    _write_manifest(outdir, {
        "command": "train", "preset": preset.name, "overrides": overrides,
        "seed": args.seed, "preset_dump": presets.preset_dump(preset),
        "data_file": args.data, "iterations": record.iterations,
        "reason": record.reason,
        "final": {k: float(v) for k, v in record.final.items()},
        "timings": {"train_s": train_s},
        "outputs": {"checkpoint": "checkpoint.bin", "history": "history.csv"}})
    print(f"trained {preset.name} seed={args.seed}: {record.iterations} "
          f"iterations ({record.reason}) in {train_s:.1f}s")
    print(f"final total {record.final['total']:.6e} -> {ckpt}")
    return 0


# --------------------------------------------------------------- evaluate


def _model_from_checkpoint(path):
    if not os.path.isfile(path):
        raise ConfigError(f"checkpoint {path!r} does not exist")
    theta, header = load_checkpoint(path)
    name = header.get("preset")
    if not name:
        raise ConfigError(f"checkpoint {path!r} carries no preset name")
    preset = presets.load_preset(name)
    overrides = header.get("overrides") or {}
    if overrides:
        preset = presets.apply_overrides(preset, overrides)
    if preset.n_data:
        # the data term shapes training only; prediction needs no labels
        preset = presets.apply_overrides(preset, {"n_data": 0})
    model = presets.build_model(preset)
    if model.packer.size != theta.size:
        raise ConfigError(
            f"checkpoint holds {theta.size} parameters, preset "
            f"{preset.name!r} expects {model.packer.size}")
    return model, preset, theta


def _resolve_eval_rate(model, preset, omega_arg):
    if model.parameterized:
        if omega_arg is None:
            raise ConfigError(
                "rate-parameterized checkpoint: pass --omega (or sweep over "
                "--re)")
        return float(omega_arg), True
    if omega_arg is not None and omega_arg != preset.omega:
        raise ConfigError(
            f"checkpoint was trained at rate {preset.omega}, got --omega "
            f"{omega_arg}")
    return preset.omega, False


def _reference_for(args, preset, omega):
    if args.oracle == "couette":
        if preset.geometry != "annulus":
            raise ConfigError(
                "the analytic oracle lives on the annulus geometry; preset "
                f"{preset.name!r} uses {preset.geometry!r}")
        return evaluation.make_couette_reference(args.oracle_n,
                                                 seed=args.oracle_seed,
                                                 omega=omega)
    if args.reference is None:
        raise ConfigError("pass --reference FILE or --oracle couette")
    if not os.path.isfile(args.reference):
        raise ConfigError(f"reference {args.reference!r} does not exist")
    return evaluation.load_reference(args.reference, _geometry_config(preset))


def _report(model, theta, ref, omega, parameterized, n_eval, subset_seed):
    vel, p = model.predict(theta, ref.points,
                           omega=omega if parameterized else None)
    n_eval = min(n_eval or 10_000, len(ref))
    rep = evaluation.error_metrics(vel, p, ref, omega, n_eval=n_eval,
                                   seed=subset_seed)
    return rep, vel, p


def _print_report(rep):
    print(f"  delta_l1_v {100 * rep.delta_l1_v:8.4f}%   "
          f"delta_l2_v {100 * rep.delta_l2_v:8.4f}%")
    print(f"  delta_l1_p {100 * rep.delta_l1_p:8.4f}%   "
          f"delta_l2_p {100 * rep.delta_l2_p:8.4f}%")


def cmd_evaluate(args):
    model, preset, theta = _model_from_checkpoint(args.checkpoint)
    omega, parameterized = _resolve_eval_rate(model, preset, args.omega)
    ref = _reference_for(args, preset, omega)
    outdir = _ensure_dir(args.out or os.path.dirname(
        os.path.abspath(args.checkpoint)))

    t0 = time.perf_counter()
    rep, vel, p = _report(model, theta, ref, omega, parameterized,
                          args.n_eval, args.subset_seed)
    if parameterized and model.omega_range is not None:
        lo, hi = model.omega_range
        if not lo <= omega <= hi:
            rep.extrapolated = True
            print(f"warning: rate {omega} lies outside the trained interval "
                  f"[{lo}, {hi}]; results are extrapolation", file=sys.stderr)
    eval_s = time.perf_counter() - t0

    evaluation.save_report(os.path.join(outdir, "report.csv"), rep)
    evaluation.export_fields(os.path.join(outdir, "fields.csv"), ref.points,
                             vel, p, ref=ref)
    outputs = {"report": "report.csv", "fields": "fields.csv"}
    if args.profile is not None:
        phi = _parse_profile(args.profile)
        cfg = model.config

        def predict(pts):
            return model.predict(theta, pts,
                                 omega=omega if parameterized else None)

        evaluation.extract_profile(os.path.join(outdir, "profile.csv"),
                                   predict, phi=phi,
                                   r_range=(cfg.r_stirrer, cfg.r_reactor))
        outputs["profile"] = "profile.csv"
    _write_manifest(outdir, {
        "command": "evaluate", "checkpoint": os.path.abspath(args.checkpoint),
        "preset": preset.name, "omega": omega, "oracle": args.oracle,
        "reference": args.reference, "n_eval": rep.n_eval,
        "subset_seed": rep.seed, "report": rep.as_dict(),
        "timings": {"evaluate_s": eval_s}, "outputs": outputs})
    print(f"evaluated {preset.name} at rate {omega} on {len(ref)} reference "
          f"nodes (subset {rep.n_eval}):")
    _print_report(rep)
    return 0


def _parse_profile(text):
    key, sep, value = text.partition("=")
    if key != "phi" or not sep:
        raise ConfigError(f"--profile wants phi=ANGLE, got {text!r}")
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"--profile angle {value!r} is not a number") from None


# ------------------------------------------------------------------ sweep


def cmd_sweep(args):
    model, preset, theta = _model_from_checkpoint(args.checkpoint)
    if not model.parameterized:
        raise ConfigError(
            f"sweep needs a rate-parameterized checkpoint; preset "
            f"{preset.name!r} is fixed-rate")
    re_list = [float(v) for v in args.re.split(",") if v.strip()]
    if not re_list:
        raise ConfigError(f"empty Reynolds list {args.re!r}")
    outdir = _ensure_dir(args.out or os.path.dirname(
        os.path.abspath(args.checkpoint)))
    lo, hi = model.omega_range

    reports, summary_rows = [], []
    for re_value in re_list:
        omega = evaluation.omega_of_reynolds(re_value)
        extrapolated = not lo <= omega <= hi
        if extrapolated:
            print(f"warning: Re={re_value:g} (rate {omega:.6g}) lies outside "
                  f"the trained interval; flagged as extrapolation",
                  file=sys.stderr)
        if args.oracle == "couette":
            if preset.geometry != "annulus":
                raise ConfigError(
                    "the analytic oracle lives on the annulus geometry; "
                    f"preset {preset.name!r} uses {preset.geometry!r}")
            ref = evaluation.make_couette_reference(
                args.oracle_n, seed=args.oracle_seed, omega=omega)
        else:
            if args.reference_dir is None:
                raise ConfigError(
                    "pass --reference-dir with re-<value>.csv files or "
                    "--oracle couette")
            path = os.path.join(args.reference_dir, f"re-{re_value:g}.csv")
            if not os.path.isfile(path):
                raise ConfigError(f"no reference {path!r} for Re={re_value:g}")
            ref = evaluation.load_reference(path, _geometry_config(preset))
        rep, vel, _ = _report(model, theta, ref, omega, True, args.n_eval,
                              args.subset_seed)
        rep.extrapolated = extrapolated
        reports.append(rep)
        err = np.abs(np.hypot(vel[:, 0], vel[:, 1])
                     - np.hypot(ref.velocity[:, 0], ref.velocity[:, 1]))
        err = err / (omega * model.config.r_stirrer)
        summary_rows.append([re_value, omega, int(extrapolated), rep.n_eval,
                             rep.delta_l1_v, rep.delta_l2_v, rep.delta_l1_p,
                             rep.delta_l2_p, err.min(), err.mean(), err.max()])
        print(f"Re={re_value:7g} rate={omega:.6g} "
              f"delta_l1_v={100 * rep.delta_l1_v:7.3f}%"
              f"{'  [extrapolation]' if extrapolated else ''}")

    evaluation.save_report(os.path.join(outdir, "reports.csv"), reports)
    with open(os.path.join(outdir, "summary.csv"), "w", newline="") as fh:
        fh.write("re,omega,extrapolated,n_eval,delta_l1_v,delta_l2_v,"
                 "delta_l1_p,delta_l2_p,err_min,err_mean,err_max\n")
        for row in summary_rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    _write_manifest(outdir, {
        "command": "sweep", "checkpoint": os.path.abspath(args.checkpoint),
        "preset": preset.name, "re_list": re_list, "oracle": args.oracle,
        "reference_dir": args.reference_dir,
        "outputs": {"reports": "reports.csv", "summary": "summary.csv"}})
    return 0


# ------------------------------------------------------------- robustness


def cmd_robustness(args):
    preset, overrides = _resolved_preset(args)
    data = _load_training_data(preset, args.data, args.base_seed)
    omega = preset.omega
    if omega is None:
        raise ConfigError("robustness runs need a fixed-rate preset")
    if args.oracle == "couette":
        if preset.geometry != "annulus":
            raise ConfigError(
                "the analytic oracle lives on the annulus geometry; preset "
                f"{preset.name!r} uses {preset.geometry!r}")
        ref = evaluation.make_couette_reference(args.oracle_n,
                                                seed=args.oracle_seed,
                                                omega=omega)
    else:
        if args.reference is None:
            raise ConfigError("pass --reference FILE or --oracle couette")
        ref = evaluation.load_reference(args.reference,
                                        _geometry_config(preset))
    outdir = _ensure_dir(args.out or os.path.join(
        _out_root(), f"{preset.name}-robustness"))
    n_eval = min(args.n_eval or 10_000, len(ref))
    v_norm = omega * 0.040

    reports, pointwise = [], []

    def couette_delta(model, theta):
        vel, p = model.predict(theta, ref.points)
        rep = evaluation.error_metrics(vel, p, ref, omega, n_eval=n_eval,
                                       seed=args.subset_seed)
        reports.append(rep)
        pointwise.append(np.abs(np.hypot(vel[:, 0], vel[:, 1])
                                - np.hypot(ref.velocity[:, 0],
                                           ref.velocity[:, 1])) / v_norm)
        return rep.delta_l1_v

    t0 = time.perf_counter()
    result = training.robustness_run(preset, args.n_seeds, couette_delta,
                                     base_seed=args.base_seed, data=data)
    wall = time.perf_counter() - t0

    for rep, record in zip(reports, result.records):
        rep.seed = record.seed
    evaluation.save_report(os.path.join(outdir, "reports.csv"), reports)
    _write_error_profile(os.path.join(outdir, "error_profile.csv"),
                         ref.points, pointwise)
    summary = {"preset": preset.name, "overrides": overrides,
               "n_seeds": args.n_seeds, "base_seed": args.base_seed,
               "omega": omega, "deltas_l1_v": [float(d) for d in result.deltas],
               "mean": float(result.mean), "std": float(result.std),
               "wall_s": wall}
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(outdir, {
        "command": "robustness", "preset": preset.name,
        "overrides": overrides, "n_seeds": args.n_seeds,
        "base_seed": args.base_seed, "oracle": args.oracle,
        "reference": args.reference, "summary": summary,
        "timings": {"total_s": wall},
        "outputs": {"reports": "reports.csv", "summary": "summary.json",
                    "error_profile": "error_profile.csv"}})
    print(f"{args.n_seeds} seeds of {preset.name}: mean delta_l1_v "
          f"{100 * result.mean:.3f}%, std {100 * result.std:.3f}% "
          f"({wall:.0f}s)")
    return 0


def _write_error_profile(path, points, pointwise, n_bins=32):
    """Radial profile of the per-seed normalized velocity error."""
    radii = np.hypot(points[:, 0], points[:, 1])
    edges = np.linspace(radii.min(), radii.max(), n_bins + 1)
    idx = np.clip(np.digitize(radii, edges) - 1, 0, n_bins - 1)
    per_seed = np.full((len(pointwise), n_bins), np.nan)
    for s, err in enumerate(pointwise):
        for b in range(n_bins):
            mask = idx == b
            if mask.any():
                per_seed[s, b] = err[mask].mean()
    mid = 0.5 * (edges[:-1] + edges[1:])
    with open(path, "w", newline="") as fh:
        fh.write("r,err_mean,err_min,err_max\n")
        for b in range(n_bins):
            row = (mid[b], per_seed[:, b].mean(), per_seed[:, b].min(),
                   per_seed[:, b].max())
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


# ------------------------------------------------------------------ verify


def cmd_verify(args):
    t0 = time.perf_counter()
    results = verify.run_checks()
    wall = time.perf_counter() - t0
    width = max(len(r.name) for r in results)
    for res in results:
        print(f"{'PASS' if res.passed else 'FAIL'}  {res.name:{width}}  "
              f"{res.detail}")
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed "
          f"({wall:.1f}s)")
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


# ------------------------------------------------------------------- main


def _add_eval_source(sub):
    sub.add_argument("--reference", help="reference CSV (x,y,v_x,v_y,p)")
    sub.add_argument("--oracle", choices=["couette"],
                     help="evaluate against the analytic annulus solution")
    sub.add_argument("--oracle-n", type=int, default=20_000,
                     help="oracle reference size (default 20000)")
    sub.add_argument("--oracle-seed", type=int, default=7,
                     help="oracle node-sampling seed (default 7)")
    sub.add_argument("--n-eval", type=int, default=None,
                     help="evaluation subset size (default min(10000, nodes))")
    sub.add_argument("--subset-seed", type=int, default=0,
                     help="subset-draw seed (default 0)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stirflow",
        description="Train and evaluate stirred-tank flow models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a preset to a checkpoint")
    p_train.add_argument("--preset", required=True)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--out", help="run directory")
    p_train.add_argument("--override", action="append", metavar="KEY=VALUE",
                         help="preset field override, repeatable")
    p_train.add_argument("--data", help="reference CSV for labeled points")
    p_train.set_defaults(fn=cmd_train)

    p_eval = sub.add_parser("evaluate",
                            help="error metrics for a checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--omega", type=float,
                        help="stirring rate for parameterized checkpoints")
    p_eval.add_argument("--out", help="output directory")
    p_eval.add_argument("--profile", metavar="phi=ANGLE",
                        help="also write a radial profile at this angle")
    _add_eval_source(p_eval)
    p_eval.set_defaults(fn=cmd_evaluate)

    p_sweep = sub.add_parser("sweep",
                             help="evaluate over a list of Reynolds numbers")
    p_sweep.add_argument("--checkpoint", required=True)
    p_sweep.add_argument("--re", default=",".join(
        str(v) for v in DEFAULT_RE_LIST), help="comma-separated Re values")
    p_sweep.add_argument("--reference-dir",
                         help="directory of re-<value>.csv references")
    p_sweep.add_argument("--out", help="output directory")
    _add_eval_source(p_sweep)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_rob = sub.add_parser("robustness",
                           help="repeat training across seeds and compare")
    p_rob.add_argument("--preset", required=True)
    p_rob.add_argument("--n-seeds", type=int, default=10)
    p_rob.add_argument("--base-seed", type=int, default=0)
    p_rob.add_argument("--override", action="append", metavar="KEY=VALUE")
    p_rob.add_argument("--data", help="reference CSV for labeled points")
    p_rob.add_argument("--out", help="run directory")
    _add_eval_source(p_rob)
    p_rob.set_defaults(fn=cmd_robustness)

    p_verify = sub.add_parser("verify", help="run the release-gate checks")
    p_verify.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, DomainError, MetricError, FieldBuildError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except TrainingAbort as err:
        print(f"training aborted: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
