"""Whirl solutions of incompressible nonlinear elliptic systems on annuli."""

from .geometry import Annulus
from .whirl import WhirlSpec, map_jet, rotation

__version__ = "0.1.0"

__all__ = ["Annulus", "WhirlSpec", "map_jet", "rotation", "__version__"]
