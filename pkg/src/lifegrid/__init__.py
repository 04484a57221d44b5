"""lifegrid: exact discrete-time engine for progressive enlargement of a
finite filtration by a random horizon, mortality-linked pricing, and
quadratic risk-minimization."""

from .enlargement import EnlargementBundle, enlarge
from .errors import LifegridError
from .space import (
    ADAPTED,
    INF,
    PREDICTABLE,
    RAW,
    FiniteFilteredSpace,
    ProcessPath,
    RandomTime,
    build_space,
    process,
    random_time,
)

__all__ = [
    "ADAPTED",
    "INF",
    "PREDICTABLE",
    "RAW",
    "EnlargementBundle",
    "FiniteFilteredSpace",
    "LifegridError",
    "ProcessPath",
    "RandomTime",
    "build_space",
    "enlarge",
    "process",
    "random_time",
]

__version__ = "0.1.0"
