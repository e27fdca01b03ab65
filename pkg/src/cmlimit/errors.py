class CMLimitError(Exception):
    """Base class for all package errors."""


class InvalidSpecError(CMLimitError, ValueError):
    pass


class InvalidArgumentError(CMLimitError, ValueError):
    pass


class SingularModelError(CMLimitError):
    """Stiffness is not positive definite.

    ``null_space`` holds the (approximate) null vectors as columns when they
    could be computed.
    """

    def __init__(self, message, null_space=None):
        super().__init__(message)
        self.null_space = null_space


class UnsupportedScenarioError(CMLimitError):
    pass


class InsufficientDataError(CMLimitError, ValueError):
    pass


class OracleFailureError(CMLimitError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
