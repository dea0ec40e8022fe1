"""Adaptive collocation resampling for physics-informed neural networks."""

import jax

jax.config.update("jax_enable_x64", True)

__version__ = "0.1.0"
