"""Simulation and analysis of quantum-enhanced double-interferometer correlation measurements."""

from corrinterf.errors import ParameterError, StateError

__version__ = "0.1.0"

__all__ = ["ParameterError", "StateError", "__version__"]
