"""Exception hierarchy shared across the package."""


class FocalSWLError(Exception):
    """Base class for all errors raised by this package."""


class DataError(FocalSWLError):
    """Invalid input data: bad files, missing columns, empty selections."""


class EstimationError(FocalSWLError):
    """An estimator could not produce a valid fit."""


class ConvergenceError(EstimationError):
    """Iteration cap reached before meeting the gradient tolerance."""


class SeparationError(EstimationError):
    """Perfect separation detected (coefficient norm diverging)."""


class RankDeficiencyError(EstimationError):
    """Design matrix is rank deficient after adding the intercept."""
