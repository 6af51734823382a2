"""Exact computations for the GHZ game and its parallel repetition."""
from ._accel import backend
from .f2linalg import AffinePowerCoset, F2Matrix, Subspace
from .games import Game, ProductStrategy, exact_value, ghz_game
from .partition import AffinePartition, ProductEvent
from .probdist import FiniteDist

__version__ = "0.1.0"

__all__ = [
    "AffinePartition",
    "AffinePowerCoset",
    "F2Matrix",
    "FiniteDist",
    "Game",
    "ProductEvent",
    "ProductStrategy",
    "Subspace",
    "backend",
    "exact_value",
    "ghz_game",
]
