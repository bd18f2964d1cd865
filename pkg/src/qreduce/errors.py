"""Exception types raised across the package."""


class QReduceError(Exception):
    """Base class for domain errors."""


class CutoffTooSmall(QReduceError):
    """A coherent state does not fit under the Fock cutoff."""


class DimensionMismatch(QReduceError, ValueError):
    pass


class NonFiniteAmplitude(QReduceError, FloatingPointError):
    """The integrator produced NaN/Inf amplitudes (usually dt too large)."""


class CutoffExceeded(QReduceError):
    """Population leaked into the top Fock levels during a run."""


class DegenerateBranch(QReduceError, ValueError):
    pass


class EnsembleInvalid(QReduceError):
    pass


class InsufficientPoints(QReduceError, ValueError):
    pass


class NonPositiveInput(QReduceError, ValueError):
    pass


class EmptySample(QReduceError, ValueError):
    pass


class ConfigError(QReduceError, ValueError):
    pass


class NormDriftWarning(RuntimeWarning):
    pass
