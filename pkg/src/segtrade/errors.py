"""Exception types shared across the package."""


class SegtradeError(Exception):
    """Base class for all package errors."""


class ParameterError(SegtradeError, ValueError):
    """Invalid economy parameters or configuration values."""


class DomainError(SegtradeError, ValueError):
    """Formula evaluated outside its mathematical domain."""


class DegenerateEconomyError(SegtradeError, ValueError):
    """Economy structure makes the requested quantity undefined."""


class NumericalError(SegtradeError, ArithmeticError):
    """Non-finite value encountered during evaluation.

    ``index`` identifies the offending (region, series) entry when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConvergenceError(SegtradeError, RuntimeError):
    """Solver failed to reach tolerance.

    Carries the best iterate found so diagnosis does not require a re-run.
    """

    def __init__(self, message, best_wages=None, residual=None, iterations=None):
        super().__init__(message)
        self.best_wages = best_wages
        self.residual = residual
        self.iterations = iterations


class InternalConsistencyError(SegtradeError, RuntimeError):
    """Two independent computations of the same object disagree."""


class UnmappedCodeError(SegtradeError, KeyError):
    """Classification code not covered by a concordance table."""


class PanelFormatError(SegtradeError, ValueError):
    """Panel file or frame violates the documented schema."""


class SimulationError(SegtradeError, RuntimeError):
    """Panel simulation failed (e.g. solver did not converge in a period)."""


class EstimationError(SegtradeError, RuntimeError):
    """Estimator could not be computed on the given data."""


class SingularDesignError(EstimationError):
    """Design matrix is rank deficient; ``columns`` names the collinear set."""

    def __init__(self, message, columns=None):
        super().__init__(message)
        self.columns = columns or []
