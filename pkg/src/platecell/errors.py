"""Exception taxonomy shared across the package.

Config/validation problems and numerical failures are kept distinct so the
command-line layer can map them to different exit codes (2 and 1).
"""


class ConfigError(ValueError):
    """Invalid configuration or arguments; message names the offending field."""


class NumericalError(RuntimeError):
    """A solver or sampling step failed (non-convergence, degenerate draw, ...)."""


class ConvergenceError(NumericalError):
    """Iterative solver did not reach the requested tolerance.

    Carries the relative residual history so callers can dump diagnostics.
    """

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = [] if residual_history is None else list(residual_history)


class DegenerateRealizationError(NumericalError):
    """A random draw produced an unusable realization (e.g. zero Poisson points)."""
