"""Exception types raised across the package."""


class GFlowGNNError(Exception):
    """Base class for all package errors."""


class ParseError(GFlowGNNError, ValueError):
    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class ValidationError(GFlowGNNError, ValueError):
    pass


class ConfigurationError(GFlowGNNError, ValueError):
    pass


class ShapeError(GFlowGNNError, ValueError):
    pass


class InvalidActionError(GFlowGNNError, ValueError):
    pass


class BudgetExhaustedError(GFlowGNNError, RuntimeError):
    pass


class PreconditionError(GFlowGNNError, RuntimeError):
    pass


class SizeError(GFlowGNNError, ValueError):
    pass


class TrainingError(GFlowGNNError, RuntimeError):
    def __init__(self, message, layer=None):
        self.layer = layer
        super().__init__(message)
