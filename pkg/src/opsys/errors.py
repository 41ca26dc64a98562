"""Exception hierarchy shared by all modules."""


class OpsysError(Exception):
    """Base class for every error raised by the package."""


class NonHermitianInput(OpsysError):
    pass


class ConvergenceFailure(OpsysError):
    pass


class EmptySpan(OpsysError):
    pass


class NumericalBreakdown(OpsysError):
    pass


class LevelMismatch(OpsysError):
    pass


class NetNotIncreasing(OpsysError):
    pass


class DomainMismatch(OpsysError):
    pass


class CodomainNotMatrixAlgebra(OpsysError):
    pass


class BoundMismatch(OpsysError):
    """Upper and lower certificates for a norm disagree beyond tolerance."""

    def __init__(self, message, upper=None, lower=None):
        super().__init__(message)
        self.upper = upper
        self.lower = lower


class SeparationFailed(OpsysError):
    pass


class NotCCP(OpsysError):
    pass


class NotGenerating(OpsysError):
    pass


class ParseError(OpsysError):
    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + loc)
        self.line = line
        self.column = column


class AsymmetricMatrix(OpsysError):
    pass


class SolverError(OpsysError):
    """Raised when an SDP needed by a higher-level routine does not reach optimality."""

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution
