"""Physics-informed neural networks for steady 2D flow in a baffled stirred tank."""

from jax import config as _jax_config

# All numerics in this package assume float64; flip the switch before any
# submodule builds a jax array.
_jax_config.update("jax_enable_x64", True)

__version__ = "0.1.0"
