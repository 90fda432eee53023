"""Bound motional states of atoms near an optical nanofiber and their phonon-limited spectra."""

__version__ = "0.1.0"

from .config import ConfigError, Params, load_config  # noqa: E402
from .eigensolver import NonConvergenceError, solve_bound_states  # noqa: E402

__all__ = ["ConfigError", "NonConvergenceError", "Params", "__version__", "load_config", "solve_bound_states"]
