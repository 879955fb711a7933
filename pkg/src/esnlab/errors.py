"""Exception and warning types shared across the package.

Two families matter to callers: validation failures (bad shapes, configs,
protocol misuse) and numerical failures (degenerate draws, non-convergent
factorizations). The CLI maps them to exit codes 1 and 2 respectively.
"""


class EsnLabError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(EsnLabError):
    """Invalid configuration value or incompatible dimensions."""


class DataError(EsnLabError):
    """Malformed numeric input (NaN/Inf, wrong length, empty)."""


class ProtocolError(EsnLabError):
    """Benchmark protocol misuse, e.g. a delay reaching before the sequence start."""


class NumericalError(EsnLabError):
    """A numerical routine failed to converge or produced a non-finite result."""


class InitializationError(NumericalError):
    """A freshly drawn weight matrix was too degenerate to rescale."""


VALIDATION_ERRORS = (ConfigurationError, DataError, ProtocolError)


class McBoundWarning(UserWarning):
    """Measured memory capacity exceeded the theoretical state-size bound."""


class ProtocolWarning(UserWarning):
    """Legal but suspicious protocol settings, e.g. washout shorter than k_max."""
