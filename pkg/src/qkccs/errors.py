"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class QkccsError(Exception):
    """Base class for all library errors."""


class DomainError(QkccsError, ValueError):
    """Arguments outside the domain where an operation is defined."""


class NoRealZeroError(DomainError):
    pass


class InsufficientTruncationError(DomainError):
    def __init__(self, message, required_n_max=None):
        super().__init__(message)
        self.required_n_max = required_n_max


class AliasingError(DomainError):
    pass


class ConvergenceError(QkccsError, RuntimeError):
    """A series or q-integral failed to meet its tolerance contract."""


class ZeroSearchError(ConvergenceError):
    pass
