"""Dense networks on a single flat parameter vector.

Every trainable array of every subnet lives in one flat float64 vector, so
the optimizer sees a plain unconstrained problem and never needs to know the
model structure. The packer records which slice of that vector is which
layer; forward passes reshape on the fly, which works for numpy and jax
arrays alike and keeps the whole pass traceable.

Checkpoint layout (also the only on-disk format we use for parameters):
one line of JSON, a newline, then the raw little-endian float64 bytes of
the flat vector. The header always carries ``format``, ``count`` and
``dtype``; callers may add their own fields (preset name, seed, net shapes).
"""

import json
from dataclasses import dataclass

import jax
import jax.numpy as jnp
import numpy as np

from .errors import ConfigError

_ACTIVATIONS = {"tanh": jnp.tanh}

CHECKPOINT_FORMAT = "stirflow-theta-1"


@dataclass(frozen=True)
class NetworkSpec:
    """Shape of one fully connected subnet.

    ``hidden`` may be empty, which makes the net a single affine layer; the
    activation is applied after every hidden layer and never after the last.
    """

    name: str
    in_dim: int
    out_dim: int
    hidden: tuple = (100, 100)
    activation: str = "tanh"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.activation not in _ACTIVATIONS:
            raise ConfigError(
                f"unknown activation {self.activation!r}, "
                f"have {sorted(_ACTIVATIONS)}"
            )
        if self.in_dim < 1 or self.out_dim < 1:
            raise ConfigError(
                f"net {self.name!r} needs positive in/out dims, "
                f"got {self.in_dim}/{self.out_dim}"
            )
        if any(h < 1 for h in self.hidden):
            raise ConfigError(f"net {self.name!r} has a non-positive hidden width")

    @property
    def layer_dims(self):
        return (self.in_dim, *self.hidden, self.out_dim)

    def as_dict(self):
        return {
            "name": self.name,
            "in_dim": self.in_dim,
            "out_dim": self.out_dim,
            "hidden": list(self.hidden),
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            name=data["name"],
            in_dim=int(data["in_dim"]),
            out_dim=int(data["out_dim"]),
            hidden=tuple(data["hidden"]),
            activation=data.get("activation", "tanh"),
        )


class ParamPacker:
    """Lays several subnets out in one flat vector.

    ``slices`` maps (net name, layer index, "w" or "b") to (slice, shape),
    in declaration order. Weight init is Glorot uniform, biases start at
    zero; draws come from one generator in layout order, so a seed pins the
    whole vector.
    """

    def __init__(self, specs):
        specs = list(specs)
        names = [spec.name for spec in specs]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate net names in {names}")
        self.specs = {spec.name: spec for spec in specs}
        self.slices = {}
        offset = 0
        for spec in specs:
            dims = spec.layer_dims
            for layer, (n_in, n_out) in enumerate(zip(dims[:-1], dims[1:])):
                for tag, shape in (("w", (n_in, n_out)), ("b", (n_out,))):
                    count = int(np.prod(shape))
                    self.slices[(spec.name, layer, tag)] = (
                        slice(offset, offset + count),
                        shape,
                    )
                    offset += count
        self.size = offset

    def init(self, seed):
        rng = np.random.default_rng(seed)
        theta = np.zeros(self.size)
        for (_, _, tag), (sl, shape) in self.slices.items():
            if tag == "w":
                limit = np.sqrt(6.0 / (shape[0] + shape[1]))
                theta[sl] = rng.uniform(-limit, limit, size=sl.stop - sl.start)
        return theta

    def layers(self, theta, name):
        """List of (w, b) views for one net, reshaped from the flat vector."""
        spec = self._spec(name)
        out = []
        for layer in range(len(spec.layer_dims) - 1):
            sl_w, shape_w = self.slices[(name, layer, "w")]
            sl_b, shape_b = self.slices[(name, layer, "b")]
            out.append((theta[sl_w].reshape(shape_w), theta[sl_b].reshape(shape_b)))
        return out

    def apply(self, theta, name, x):
        """Forward pass for one net; x is (in_dim,) or (n, in_dim)."""
        act = _ACTIVATIONS[self._spec(name).activation]
        layers = self.layers(theta, name)
        h = x
        for w, b in layers[:-1]:
            h = act(h @ w + b)
        w, b = layers[-1]
        return h @ w + b

    def apply_fn(self, name):
        """Single-point closure (theta, x) -> (out_dim,) for derivative use."""
        self._spec(name)
        return lambda theta, x: self.apply(theta, name, x)

    def describe(self):
        return [spec.as_dict() for spec in self.specs.values()]

    def _spec(self, name):
        try:
            return self.specs[name]
        except KeyError:
            raise ConfigError(
                f"unknown network {name!r}, have {sorted(self.specs)}"
            ) from None


def input_derivatives(fn):
    """Batch value/Jacobian/Hessian of a single-point function.

    ``fn(theta, x)`` must map one input point (in_dim,) to one output vector
    (out_dim,); the returned callable takes (theta, pts) with pts of shape
    (n, in_dim) and gives arrays of shape (n, out), (n, out, in) and
    (n, out, in, in). Both derivative levels ride the same nested
    forward-mode pass, so the primal is evaluated once per point.
    """

    def value_aux(theta, x):
        u = fn(theta, x)
        return u, u

    def jac_aux(theta, x):
        jac, u = jax.jacfwd(value_aux, argnums=1, has_aux=True)(theta, x)
        return jac, (u, jac)

    def all_orders(theta, x):
        hess, (u, jac) = jax.jacfwd(jac_aux, argnums=1, has_aux=True)(theta, x)
        return u, jac, hess

    return jax.vmap(all_orders, in_axes=(None, 0))


def save_checkpoint(path, theta, header=None):
    """Write the header line and the raw float64 payload."""
    theta = np.asarray(theta, dtype=np.float64)
    head = {"format": CHECKPOINT_FORMAT, "count": int(theta.size), "dtype": "<f8"}
    if header:
        head.update(header)
        head["format"] = CHECKPOINT_FORMAT
        head["count"] = int(theta.size)
    with open(path, "wb") as fh:
        fh.write(json.dumps(head).encode("utf-8") + b"\n")
        fh.write(theta.astype("<f8").tobytes())


def load_checkpoint(path):
    """Read a checkpoint back; returns (theta, header)."""
    with open(path, "rb") as fh:
        line = fh.readline()
        try:
            head = json.loads(line)
        except json.JSONDecodeError as err:
            raise ConfigError(f"checkpoint header is not valid JSON: {err}") from None
        if head.get("format") != CHECKPOINT_FORMAT:
            raise ConfigError(
                f"unknown checkpoint format {head.get('format')!r}, "
                f"expected {CHECKPOINT_FORMAT!r}"
            )
        blob = fh.read()
    count = int(head.get("count", -1))
    if count < 0 or len(blob) != count * 8:
        raise ConfigError(
            f"checkpoint payload is {len(blob)} bytes, expected {count * 8}"
        )
    theta = np.frombuffer(blob, dtype="<f8").astype(np.float64)
    return theta, head
