"""Simulation and spectral verification lab for a harmonic chain with swap noise."""
from .params import ScalingParams, SizingError

__version__ = "0.1.0"

__all__ = ["ScalingParams", "SizingError", "__version__"]
