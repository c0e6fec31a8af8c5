"""Multiple-point range of planar simple random walks.

Graph enumeration, lattice Green functions, Bessel-K0 graph integrals,
asymptotic moment expansions and walk oracles.
"""

from .feynman import GraphSumRecord, MissingCacheError
from .graph_enum import BalancedMatrix, LoopyMatrix, enumerate_balanced
from .lattice_green import PointConfig, PowerSeries, PrecisionError
from .moments import CharSeries, MomentExpansion
from .special_fn import NumericError
from .walk_oracle import SeedSpec, WalkStats

__version__ = "0.1.0"

__all__ = [
    "BalancedMatrix",
    "CharSeries",
    "GraphSumRecord",
    "LoopyMatrix",
    "MissingCacheError",
    "MomentExpansion",
    "NumericError",
    "PointConfig",
    "PowerSeries",
    "PrecisionError",
    "SeedSpec",
    "WalkStats",
    "enumerate_balanced",
]
