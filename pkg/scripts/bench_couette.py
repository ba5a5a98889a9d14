"""Train the couette-bench preset and report errors against the analytic profile.

Usage: python scripts/bench_couette.py [--epochs N] [--seed S]
"""

import argparse
import time

import numpy as np

from stirflow import evaluation, presets, training


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--epochs", type=int, default=None)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-domain", type=int, default=None)
    args = ap.parse_args()

    preset = presets.load_preset("couette-bench")
    overrides = {}
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if args.n_domain is not None:
        overrides["n_domain"] = args.n_domain
    if overrides:
        preset = presets.apply_overrides(preset, overrides)

    model = presets.build_model(preset)
    t0 = time.perf_counter()
    record = training.train_model(model, epochs=preset.epochs,
                                  resample_every=preset.resample_every,
                                  seed=args.seed)
    wall = time.perf_counter() - t0

    ref = evaluation.make_couette_reference(20_000, seed=7, omega=preset.omega)
    vel, p = model.predict(record.theta, ref.points)
    report = evaluation.error_metrics(vel, p, ref, preset.omega, n_eval=10_000)

    print(f"epochs={preset.epochs} reason={record.reason!r} "
          f"iterations={record.iterations} wall={wall:.1f}s")
    print(f"delta_l1_v={100 * report.delta_l1_v:.3f}%  "
          f"delta_l2_v={100 * report.delta_l2_v:.3f}%")
    print(f"delta_l1_p={100 * report.delta_l1_p:.3f}%  "
          f"delta_l2_p={100 * report.delta_l2_p:.3f}%")
    final = {k: float(v) for k, v in record.final.items()}
    print("final:", {k: f"{v:.3e}" for k, v in sorted(final.items())})
    rng = np.random.default_rng(3)
    r = rng.uniform(0.041, 0.099, 5)
    pts = np.stack([r, np.zeros_like(r)], axis=1)
    pv, _ = model.predict(record.theta, pts)
    av, _ = evaluation.couette_analytic(r, preset.omega)
    print("sample v_phi pred vs exact:")
    for ri, pvi, avi in zip(r, -pv[:, 1], av):
        print(f"  r={ri:.4f}  pred={pvi:+.6f}  exact={avi:+.6f}")


if __name__ == "__main__":
    main()
