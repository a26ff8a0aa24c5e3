"""Exception types shared across the package.

The CLI maps these onto exit codes, so keep the hierarchy shallow.
"""


class CosparseError(Exception):
    """Base class for all package errors."""


class DimensionError(CosparseError, ValueError):
    """Operand shapes do not agree."""


class MatrixFormatError(CosparseError, ValueError):
    """A matrix/vector text file could not be parsed.

    Carries the offending ``line`` and ``column`` (1-based token index
    within the data section) when known.
    """

    def __init__(self, message, line=None, column=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"token {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.column = column


class HeaderError(MatrixFormatError):
    pass


class EntryCountError(MatrixFormatError):
    pass


class TokenError(MatrixFormatError):
    pass


class InfeasibleCosparsityError(CosparseError, ValueError):
    """The drawn cosupport leaves only the zero vector."""


class LinearSolveError(CosparseError, ArithmeticError):
    """The weighted normal equations could not be solved.

    ``min_eig`` holds the smallest eigenvalue estimate of the system matrix.
    """

    def __init__(self, message, min_eig=None):
        super().__init__(message)
        self.min_eig = min_eig


class InfiniteWeightError(CosparseError, ArithmeticError):
    """Zero smoothing combined with a zero analysis coefficient."""


class ConfigError(CosparseError, ValueError):
    """Invalid solver or experiment configuration."""


class ConditionNumberError(CosparseError, ValueError):
    """The operator is too ill-conditioned for the recovery guarantee."""


class TheoryInapplicableError(CosparseError, ValueError):
    """Error-bound constants are undefined for the given inputs."""


class CombinatorialGuardError(CosparseError, ValueError):
    """Brute-force enumeration would be too large."""
