"""coopmimo: cooperative data-assisted uplink detection for massive MIMO.

Simulator and analytical toolkit for an uplink scheme where base stations
re-estimate channels from already-detected data blocks (their own, and —
after a backhaul delay — their neighbours'), cancel what they can, and adapt
rate to a closed-form SINR distribution whose interference statistics can
also be learned online.
"""

from .errors import (
    CellOverflowError,
    ConfigError,
    CoopMimoError,
    IllConditionedError,
    NonConvergentTailError,
    NumericalError,
    ThresholdUndefinedError,
)

__version__ = "0.1.0"

__all__ = [
    "CellOverflowError",
    "ConfigError",
    "CoopMimoError",
    "IllConditionedError",
    "NonConvergentTailError",
    "NumericalError",
    "ThresholdUndefinedError",
    "__version__",
]
