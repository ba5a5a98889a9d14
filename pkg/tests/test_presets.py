"""Preset catalogue: fidelity against the checked-in transcription,
model construction for every family, and override handling."""

import json
from pathlib import Path

import numpy as np
import pytest

from stirflow import presets
from stirflow.errors import ConfigError
from stirflow.evaluation import couette_analytic
from stirflow.models import (OMEGA_MAX, OMEGA_MIN, CartesianModel, DDModel,
                             OdeSegmentModel, PolarQuarterModel)

TRANSCRIPTION = Path(__file__).parent / "data" / "preset_transcription.json"

TABLE_PRESETS = [
    "baseline", "baseline-data", "baseline-scaled", "baseline-polar",
    "strong-bc", "hybrid-bc", "dd", "dd-split", "dd-param", "dd-param-overlap",
]
BENCH_PRESETS = ["couette-bench", "ode-bench"]


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        out = {}
        for key, val in obj.items():
            out.update(_flatten(val, f"{prefix}{key}."))
        return out
    if isinstance(obj, list):
        obj = tuple(obj)
    return {prefix[:-1]: obj}


def _build(name):
    preset = presets.load_preset(name)
    data = None
    if preset.n_data:
        if preset.family == "swirl-segment":
            ends = np.array([preset.r_lo, preset.r_hi])
            v_phi, p = couette_analytic(ends, preset.omega)
            data = (ends, np.stack([v_phi, p], axis=1))
        else:
            pts = np.array([[0.05, 0.0], [0.0, -0.06]])
            data = (pts, np.zeros((2, 3)))
    return preset, presets.build_model(preset, data=data)


# ------------------------------------------------------------- fidelity


@pytest.mark.parametrize("name", TABLE_PRESETS)
def test_dump_matches_checked_in_transcription(name):
    table = _flatten(json.loads(TRANSCRIPTION.read_text())[name])
    dump = _flatten(presets.preset_dump(presets.load_preset(name)))
    missing = sorted(set(table) - set(dump))
    extra = sorted(set(dump) - set(table))
    assert not missing and not extra, f"field sets differ: -{missing} +{extra}"
    for key, want in table.items():
        assert dump[key] == want, f"{name}.{key}: dump has {dump[key]!r}, " \
                                  f"transcription has {want!r}"


def test_catalogue_contains_every_preset():
    names = presets.list_presets()
    for name in TABLE_PRESETS + BENCH_PRESETS:
        assert name in names


def test_unknown_preset_rejected():
    with pytest.raises(ConfigError):
        presets.load_preset("no-such-model")


def test_dump_is_json_serializable():
    for name in TABLE_PRESETS + BENCH_PRESETS:
        json.dumps(presets.preset_dump(presets.load_preset(name)))


# ---------------------------------------------------------- construction


def test_baseline_builds_weak_cartesian_model():
    preset, model = _build("baseline")
    assert isinstance(model, CartesianModel)
    assert model.ansatz is None
    assert model.omega == 0.625
    b = model.batches(seed=0)
    assert b["domain"].shape == (2048, 2)
    assert b["stirrer"].shape == (1024, 2)
    assert b["wall"].shape == (1024, 2)


def test_baseline_data_requires_labeled_values():
    preset = presets.load_preset("baseline-data")
    with pytest.raises(ConfigError):
        presets.build_model(preset)


def test_baseline_data_carries_values_through():
    preset, model = _build("baseline-data")
    b = model.batches(seed=3)
    assert b["data_points"].shape == (2, 2)
    assert b["data_values"].shape == (2, 3)


def test_strong_bc_has_no_boundary_batches():
    preset, model = _build("strong-bc")
    assert model.ansatz == "strong"
    assert set(model.batches(seed=0)) == {"domain"}


def test_hybrid_bc_keeps_weak_wall():
    preset, model = _build("hybrid-bc")
    assert model.ansatz == "hybrid"
    assert set(model.batches(seed=0)) == {"domain", "wall"}


def test_polar_build():
    preset, model = _build("baseline-polar")
    assert isinstance(model, PolarQuarterModel)
    assert model.v_ref_r == 8e-4
    b = model.batches(seed=0)
    assert b["domain"].shape == (4096, 2)
    assert b["symmetry"].shape == (1024, 2)


def test_dd_build():
    preset, model = _build("dd")
    assert isinstance(model, DDModel)
    assert (model.parameterized, model.split, model.overlap) == (False, False, False)
    assert model.r_inter == 0.07
    assert model.packer.specs["inner"].hidden == (25, 25)
    assert model.packer.specs["outer"].hidden == (100, 100)
    assert model.packer.specs["outer"].out_dim == 3


def test_dd_split_build():
    preset, model = _build("dd-split")
    assert model.split and model.r_split == 0.0851
    assert model.r_inter == 0.08
    assert model.packer.specs["outer"].out_dim == 4
    b = model.batches(seed=1)
    for label in ("gamma_c", "gamma_d", "baffle"):
        assert label in b, label
    assert b["wall"].shape == (528, 2)


def test_dd_param_build():
    preset, model = _build("dd-param")
    assert model.parameterized
    assert model.omega_range == (OMEGA_MIN, OMEGA_MAX)
    b = model.batches(seed=0)
    assert b["inner"].shape[1] == 2
    assert b["outer"].shape[1] == 3


def test_dd_param_overlap_build():
    preset, model = _build("dd-param-overlap")
    assert model.overlap and model.band_width == 0.01
    b = model.batches(seed=0)
    assert b["band"].shape == (1536, 3)


def test_couette_bench_is_annulus():
    preset, model = _build("couette-bench")
    assert isinstance(model, CartesianModel)
    assert model.config.kind == "annulus"
    assert model.omega == 0.625
    assert model.packer.specs["flow"].hidden == (64, 64)
    assert preset.epochs <= 5000


def test_ode_bench_build():
    preset, model = _build("ode-bench")
    assert isinstance(model, OdeSegmentModel)
    assert (model.r_lo, model.r_hi) == (0.04, 0.07)
    b = model.batches(seed=0)
    assert "data_points" in b and b["data_values"].shape[1] == 2


# -------------------------------------------------------------- overrides


def test_overrides_replace_fields_without_touching_original():
    preset = presets.load_preset("baseline")
    changed = presets.apply_overrides(
        preset, {"epochs": 123, "weights.mass": 2.0, "hidden": [8, 8]})
    assert changed.epochs == 123
    assert changed.weights["mass"] == 2.0
    assert changed.hidden == (8, 8)
    assert preset.epochs == 25000
    assert preset.weights["mass"] == 1.0
    assert presets.preset_dump(changed)["epochs"] == 123


def test_override_boundary_count():
    preset = presets.load_preset("dd")
    changed = presets.apply_overrides(preset, {"boundary_counts.wall": 16})
    assert changed.boundary_counts["wall"] == 16
    assert preset.boundary_counts["wall"] == 256


def test_override_regularization():
    preset = presets.load_preset("baseline")
    changed = presets.apply_overrides(preset, {"regularization.l2": 0.0})
    assert changed.l2 == 0.0 and changed.l1 == 1e-7


def test_override_rejects_unknown_and_fixed_fields():
    preset = presets.load_preset("baseline")
    with pytest.raises(ConfigError):
        presets.apply_overrides(preset, {"no_such_field": 1})
    with pytest.raises(ConfigError):
        presets.apply_overrides(preset, {"family": "polar-quarter"})


def test_negative_weight_rejected():
    preset = presets.load_preset("baseline")
    with pytest.raises(ConfigError):
        presets.apply_overrides(preset, {"weights.mass": -1.0})
