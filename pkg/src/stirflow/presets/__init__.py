"""Shipped training presets and the factory that builds models from them.

Each preset is a read-only JSON file next to this module, fully describing
one model: family, architecture, loss weights, sampling counts, and the
optimization schedule. ``load_preset`` parses and validates a file into a
frozen :class:`ModelPreset`; ``preset_dump`` turns it back into the same
plain mapping, which is what the fidelity tests diff against the checked-in
transcription. ``build_model`` instantiates the matching model family.
"""

import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources

from ..errors import ConfigError
from ..geometry import GeometryConfig
from ..models import CartesianModel, DDModel, OdeSegmentModel, PolarQuarterModel
from ..physics import FluidProps

FAMILIES = ("cartesian", "polar-quarter", "domain-decomposition",
            "swirl-segment")
GEOMETRIES = ("tank", "annulus")

# fields that may be swapped out with apply_overrides; name, family and
# optimizer identify the preset and stay fixed
_OVERRIDABLE = {
    "geometry", "ansatz", "hidden", "hidden_inner", "hidden_outer",
    "activation", "omega", "omega_range", "epochs", "n_domain",
    "resample_every", "n_data", "r_inter", "ratio_inner_outer", "r_split",
    "band_width", "n_band", "v_ref_r", "r_lo", "r_hi", "mu",
}


@dataclass(frozen=True)
class ModelPreset:
    name: str
    family: str
    weights: dict
    epochs: int
    n_domain: int
    resample_every: int = 1000
    boundary_counts: dict = field(default_factory=dict)
    hidden: tuple = None
    hidden_inner: tuple = None
    hidden_outer: tuple = None
    activation: str = "tanh"
    ansatz: str = None
    omega: float = None
    omega_range: tuple = None
    l1: float = 1e-7
    l2: float = 1e-7
    mu: float = None
    n_data: int = 0
    r_inter: float = None
    ratio_inner_outer: float = None
    r_split: float = None
    band_width: float = None
    n_band: int = 0
    v_ref_r: float = None
    r_lo: float = None
    r_hi: float = None
    geometry: str = "tank"
    optimizer: str = "lbfgs"


def list_presets():
    """Names of all shipped presets."""
    names = []
    for entry in resources.files(__package__).iterdir():
        if entry.name.endswith(".json"):
            names.append(entry.name[:-5])
    return sorted(names)


def _validate(preset):
    if preset.family not in FAMILIES:
        raise ConfigError(f"unknown model family {preset.family!r}")
    if preset.geometry not in GEOMETRIES:
        raise ConfigError(f"unknown geometry {preset.geometry!r}")
    if (preset.omega is None) == (preset.omega_range is None):
        raise ConfigError(
            f"preset {preset.name!r} must set exactly one of a fixed "
            f"stirring rate or a rate interval")
    for key, value in preset.weights.items():
        if value < 0.0:
            raise ConfigError(f"weight {key!r} is negative ({value})")
    for key, value in preset.boundary_counts.items():
        if int(value) < 0:
            raise ConfigError(f"boundary count {key!r} is negative")
    for key in ("epochs", "n_domain", "resample_every"):
        if getattr(preset, key) < 1:
            raise ConfigError(f"{key} must be at least 1")
    if preset.mu is not None and preset.mu <= 0.0:
        raise ConfigError(f"viscosity override must be positive, got {preset.mu}")
    if preset.family == "domain-decomposition":
        for key in ("hidden_inner", "hidden_outer", "r_inter",
                    "ratio_inner_outer"):
            if getattr(preset, key) is None:
                raise ConfigError(f"decomposed preset needs {key}")
        if preset.n_data:
            raise ConfigError("decomposed presets take no labeled points")
    else:
        if preset.hidden is None:
            raise ConfigError(f"preset {preset.name!r} needs hidden layer sizes")
        if preset.ansatz is not None and preset.family != "cartesian":
            raise ConfigError("only the cartesian family takes an ansatz")
    if (preset.band_width is None) != (preset.n_band == 0):
        raise ConfigError("band_width and n_band go together")
    if preset.family == "swirl-segment" and (preset.r_lo is None
                                             or preset.r_hi is None):
        raise ConfigError("segment preset needs r_lo and r_hi")
    return preset


def _as_tuple(value):
    return None if value is None else tuple(value)


def _from_mapping(name, raw):
    raw = dict(raw)
    if raw.pop("name", name) != name:
        raise ConfigError(f"preset file {name!r} names itself differently")
    reg = raw.pop("regularization", {})
    known = {f for f in ModelPreset.__dataclass_fields__} - {"name", "l1", "l2"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"preset {name!r} has unknown fields {unknown}")
    for key in ("hidden", "hidden_inner", "hidden_outer", "omega_range"):
        if key in raw:
            raw[key] = _as_tuple(raw[key])
    raw["weights"] = {k: float(v) for k, v in raw.get("weights", {}).items()}
    raw["boundary_counts"] = {k: int(v) for k, v in
                              raw.get("boundary_counts", {}).items()}
    preset = ModelPreset(name=name, l1=float(reg.get("l1", 1e-7)),
                         l2=float(reg.get("l2", 1e-7)), **raw)
    return _validate(preset)


@lru_cache(maxsize=None)
def load_preset(name):
    """Parse and validate the named shipped preset."""
    entry = resources.files(__package__).joinpath(f"{name}.json")
    if not entry.is_file():
        raise ConfigError(
            f"unknown preset {name!r}; shipped presets: {list_presets()}")
    return _from_mapping(name, json.loads(entry.read_text()))


def preset_dump(preset):
    """The preset as the plain mapping its JSON file holds (minus the name).

    Emits exactly the fields that apply to the preset's family, so the
    result can be diffed field-by-field against a table transcription.
    """
    out = {"family": preset.family, "geometry": preset.geometry}
    if preset.omega_range is not None:
        out["omega_range"] = list(preset.omega_range)
    else:
        out["omega"] = preset.omega
    if preset.family == "cartesian":
        out["ansatz"] = preset.ansatz
    if preset.family == "domain-decomposition":
        out["hidden_inner"] = list(preset.hidden_inner)
        out["hidden_outer"] = list(preset.hidden_outer)
    else:
        out["hidden"] = list(preset.hidden)
    out["activation"] = preset.activation
    out["regularization"] = {"l1": preset.l1, "l2": preset.l2}
    if preset.mu is not None:
        out["mu"] = preset.mu
    out["weights"] = dict(preset.weights)
    out["optimizer"] = preset.optimizer
    out["epochs"] = preset.epochs
    out["n_domain"] = preset.n_domain
    out["resample_every"] = preset.resample_every
    if preset.family == "domain-decomposition":
        out["r_inter"] = preset.r_inter
        out["ratio_inner_outer"] = preset.ratio_inner_outer
        if preset.r_split is not None:
            out["r_split"] = preset.r_split
        if preset.band_width is not None:
            out["band_width"] = preset.band_width
            out["n_band"] = preset.n_band
    out["boundary_counts"] = dict(preset.boundary_counts)
    if preset.v_ref_r is not None:
        out["v_ref_r"] = preset.v_ref_r
    if preset.family == "swirl-segment":
        out["r_lo"], out["r_hi"] = preset.r_lo, preset.r_hi
    if preset.n_data:
        out["n_data"] = preset.n_data
    return out


def apply_overrides(preset, overrides):
    """A copy of the preset with dotted-key overrides applied.

    Keys are either plain fields ("epochs"), weight entries
    ("weights.mass"), boundary counts ("boundary_counts.wall"), or
    regularization coefficients ("regularization.l1").
    """
    fields = {}
    weights = dict(preset.weights)
    counts = dict(preset.boundary_counts)
    for key, value in overrides.items():
        head, _, tail = key.partition(".")
        if head == "weights" and tail:
            weights[tail] = float(value)
        elif head == "boundary_counts" and tail:
            counts[tail] = int(value)
        elif head == "regularization" and tail in ("l1", "l2"):
            fields[tail] = float(value)
        elif key in _OVERRIDABLE:
            if key in ("hidden", "hidden_inner", "hidden_outer",
                       "omega_range"):
                value = _as_tuple(value)
            fields[key] = value
        else:
            raise ConfigError(f"cannot override {key!r}")
    changed = replace(preset, weights=weights, boundary_counts=counts,
                      **fields)
    return _validate(changed)


def build_model(preset, *, data=None):
    """Instantiate the model a preset describes.

    Presets with a data term need the labeled values handed in as
    ``data=(points, values)``; how many points the training protocol draws
    is recorded in ``n_data``.
    """
    if preset.n_data and data is None:
        raise ConfigError(
            f"preset {preset.name!r} trains on {preset.n_data} labeled "
            f"points; pass data=(points, values)")
    config = (GeometryConfig() if preset.geometry == "tank"
              else GeometryConfig.annulus())
    common = dict(activation=preset.activation, l1=preset.l1, l2=preset.l2,
                  n_domain=preset.n_domain)
    if preset.mu is not None:
        common["props"] = FluidProps(mu=preset.mu)
    if preset.family == "cartesian":
        return CartesianModel(config, preset.omega, preset.weights,
                              hidden=preset.hidden, ansatz=preset.ansatz,
                              boundary_counts=preset.boundary_counts,
                              data=data, **common)
    if preset.family == "polar-quarter":
        if preset.v_ref_r is not None:
            common["v_ref_r"] = preset.v_ref_r
        return PolarQuarterModel(config, preset.omega, preset.weights,
                                 hidden=preset.hidden,
                                 boundary_counts=preset.boundary_counts,
                                 **common)
    if preset.family == "domain-decomposition":
        if preset.v_ref_r is not None:
            common["v_ref_r"] = preset.v_ref_r
        rate = (dict(omega_range=preset.omega_range)
                if preset.omega_range is not None
                else dict(omega=preset.omega))
        return DDModel(config, preset.weights, r_inter=preset.r_inter,
                       hidden_inner=preset.hidden_inner,
                       hidden_outer=preset.hidden_outer,
                       ratio_inner_outer=preset.ratio_inner_outer,
                       boundary_counts=preset.boundary_counts,
                       r_split=preset.r_split, band_width=preset.band_width,
                       n_band=preset.n_band, **rate, **common)
    return OdeSegmentModel(preset.omega, preset.weights, r_lo=preset.r_lo,
                           r_hi=preset.r_hi, hidden=preset.hidden,
                           data=data, **common)
