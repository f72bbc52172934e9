"""Exception types shared across the package.

Exit-code mapping used by the command-line harness:

* ``ConfigError``            -> exit 2 (bad input: config files, argument
  combinations, geometry that cannot be built)
* ``NumericalError`` family  -> exit 3 (well-formed input, but the requested
  quantity does not exist or cannot be computed stably)
"""


class CoopMimoError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(CoopMimoError):
    """Invalid configuration, parameters, or input files."""


class CellOverflowError(ConfigError):
    """A cell was asked to hold more pilot-bearing users than pilots exist.

    Raised when resampling cannot bring every cell under the pilot budget,
    or when a caller plants users past the cap.
    """


class NumericalError(CoopMimoError):
    """A numerical procedure failed or the requested quantity is undefined."""


class IllConditionedError(NumericalError):
    """A linear system's conditioning exceeds the trusted range."""


class ThresholdUndefinedError(NumericalError):
    """No positive SINR threshold satisfies the requested outage target.

    Happens when the target outage is so strict (or interference statistics
    so heavy) that the Gaussian quantile pushes the inverse-SINR below zero.
    """


class NonConvergentTailError(NumericalError):
    """The far-field integral diverges for the given pathloss exponent.

    Interference moments over an unbounded region only converge for
    pathloss exponents strictly greater than 2.
    """
