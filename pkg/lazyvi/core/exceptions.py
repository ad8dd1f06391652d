from typing import Optional


EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3


class LazyVIException(Exception):
    """Base exception class for lazyvi"""

    exit_code: int = 1

    def __init__(self, detail: str = "lazyvi error", exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


# Validation (bad arguments or configuration) -> exit 2


class ValidationException(LazyVIException, ValueError):
    """Raised when an argument or configuration value is invalid"""

    exit_code = EXIT_CONFIG_ERROR

    def __init__(self, detail: str = "Validation failed"):
        super().__init__(detail)


class OutOfRangeException(ValidationException):
    """Raised when a scalar argument lies outside its domain"""

    def __init__(self, detail: str = "Value out of range"):
        super().__init__(detail)


class DimensionMismatchException(ValidationException):
    """Raised when array shapes disagree"""

    def __init__(self, detail: str = "Dimension mismatch"):
        super().__init__(detail)


class IndexOutOfRangeException(ValidationException):
    """Raised when a feature index is outside [0, p)"""

    def __init__(self, index: int, size: int):
        super().__init__(f"Feature index {index} out of range for p={size}")
        self.index = index
        self.size = size


class BadSizeException(ValidationException):
    """Raised when a split size is invalid"""

    def __init__(self, detail: str = "Invalid split size"):
        super().__init__(detail)


class BadFoldCountException(ValidationException):
    """Raised when the number of CV folds is invalid"""

    def __init__(self, folds: int, n: int):
        super().__init__(f"Cannot run {folds}-fold CV on {n} training rows")


class BadStepsException(ValidationException):
    """Raised when an early-stopping step count is invalid"""

    def __init__(self, steps: int):
        super().__init__(f"Early stopping needs at least one step, got {steps}")


class EmptyDatasetException(ValidationException):
    """Raised when a dataset has no rows"""

    def __init__(self, detail: str = "Dataset is empty"):
        super().__init__(detail)


class MissingBetaException(ValidationException):
    """Raised when a closed form needs the true linear coefficients"""

    def __init__(self, detail: str = "Linear model spec has no beta_true"):
        super().__init__(detail)


class TooManyFeaturesException(ValidationException):
    """Raised when exact Shapley enumeration would be too large"""

    def __init__(self, p: int, limit: int):
        super().__init__(f"Exact Shapley enumeration needs p <= {limit}, got p={p}")


class MissingTruthException(ValidationException):
    """Raised when coverage is requested without an analytic truth"""

    def __init__(self, detail: str = "No true VI available for coverage"):
        super().__init__(detail)


class ConfigException(ValidationException):
    """Raised when the run configuration is invalid"""

    def __init__(self, detail: str = "Invalid configuration"):
        super().__init__(detail)


# Data ingestion -> exit 2


class DataException(LazyVIException):
    """Raised when input data cannot be read"""

    exit_code = EXIT_CONFIG_ERROR

    def __init__(self, detail: str = "Data error"):
        super().__init__(detail)


class ParseException(DataException):
    """Raised when a CSV cell is not numeric"""

    def __init__(self, row: int, column: str, value: object = None):
        super().__init__(f"Non-numeric value {value!r} at row {row} column {column}")
        self.row = row
        self.column = column


class MissingColumnException(DataException):
    """Raised when a required CSV column is absent"""

    def __init__(self, column: str):
        super().__init__(f"Column {column!r} not found")
        self.column = column


# Numerical failures -> exit 3


class NumericalException(LazyVIException, ArithmeticError):
    """Raised when a numerical routine fails"""

    exit_code = EXIT_NUMERICAL_ERROR

    def __init__(self, detail: str = "Numerical failure"):
        super().__init__(detail)


class NotPositiveDefiniteException(NumericalException):
    """Raised when a matrix is not symmetric positive definite"""

    def __init__(self, detail: str = "Matrix is not positive definite"):
        super().__init__(detail)


class NonFiniteInputException(NumericalException):
    """Raised when an input array contains NaN or inf"""

    def __init__(self, detail: str = "Input contains non-finite entries"):
        super().__init__(detail)


class NonFiniteLossException(NumericalException):
    """Raised when training diverges"""

    def __init__(self, step: int, learning_rate: float):
        super().__init__(
            f"Training loss became non-finite at step {step} "
            f"(learning_rate={learning_rate} may be too large)"
        )
        self.step = step
