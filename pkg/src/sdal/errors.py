"""Exception hierarchy shared across the package."""


class SdalError(Exception):
    """Base class for all package errors."""


class DimensionError(SdalError, ValueError):
    """Array shapes or ambient dimensions do not agree."""


class NotOrthonormalError(SdalError, ValueError):
    """Columns of a basis are not orthonormal within tolerance."""


class DegenerateInputError(SdalError, ValueError):
    """Input carries no information (e.g. an all-zero snapshot matrix)."""


class ZeroNormColumnError(SdalError, ZeroDivisionError):
    """A snapshot column has zero 2-norm, so a relative error is undefined."""

    def __init__(self, column: int):
        super().__init__(f"snapshot column {column} has zero 2-norm")
        self.column = column


class InsufficientDataError(SdalError, ValueError):
    """Too few points to build pairs or fit an interpolant."""


class CandidatesExhaustedError(SdalError):
    """The candidate parameter set is empty."""


class ConsistencyError(SdalError, ValueError):
    """Training/candidate bookkeeping would be violated."""


class SingularSystemError(SdalError, ValueError):
    """Kernel system is singular, typically due to duplicate points."""


class ParameterError(SdalError, ValueError):
    """A physical parameter is outside its admissible range."""


class TimeRangeError(SdalError, ValueError):
    """Query time lies outside the stored time grid."""


class IngestionError(SdalError, ValueError):
    """Snapshot or artifact data is malformed or inconsistent."""


class EstimatorError(SdalError):
    """The error estimator cannot be evaluated."""


class FomError(SdalError, RuntimeError):
    """A full-order model query failed during active learning."""

    def __init__(self, iteration: int, mu, cause: BaseException):
        super().__init__(f"FOM query failed at iteration {iteration} (mu={list(mu)}): {cause}")
        self.iteration = iteration
        self.mu = mu
        self.cause = cause


class ConfigError(SdalError, ValueError):
    """Run configuration failed schema validation."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.key = key
        self.line = line
