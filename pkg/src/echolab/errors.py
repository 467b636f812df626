"""Exception types shared across the package."""


class EcholabError(Exception):
    """Base class for all echolab errors."""


class DimMismatchError(EcholabError, ValueError):
    """Operands have incompatible dimensions."""


class NotHermitianError(EcholabError, ValueError):
    """Matrix fails the Hermitian symmetry check."""


class NotUnitaryError(EcholabError, ValueError):
    """Matrix fails the unitarity check."""


class NoConvergenceError(EcholabError, RuntimeError):
    """An iterative eigensolver exceeded its iteration cap."""


class InvalidSpinError(EcholabError, ValueError):
    """Spin j is not a positive integer or half-integer."""


class WindowTooSmallError(EcholabError, ValueError):
    """Decay too fast to leave enough points for a rate fit."""


class FlatCurveError(EcholabError, ValueError):
    """Curve shows no decay at all; no rate can be fitted."""


class EmptyListError(EcholabError, ValueError):
    """An aggregation was asked to reduce zero inputs."""


class TooFewLevelsError(EcholabError, ValueError):
    """Not enough spectral levels for a meaningful statistic."""


class FitDivergedError(EcholabError, RuntimeError):
    """Nonlinear least squares failed to converge to a sane optimum."""


class CurveTooShortError(EcholabError, ValueError):
    """Curve does not extend far enough past its expected plateau onset."""


class ConfigError(EcholabError, ValueError):
    """Experiment configuration failed validation."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
