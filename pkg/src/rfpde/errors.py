"""Exception types raised across the package."""


class RfpdeError(Exception):
    """Base class for all package errors."""


class InvalidArgument(RfpdeError, ValueError):
    pass


class UnsupportedOrder(RfpdeError, ValueError):
    """Derivative order outside what the activation or stencil supports."""


class ResourceLimit(RfpdeError, ValueError):
    pass


class SamplingFailure(RfpdeError, RuntimeError):
    """Rejection sampling accepted too few candidates."""


class DegenerateReference(RfpdeError, ValueError):
    """Reference field has zero norm, so a relative error is undefined."""


class DivergenceError(RfpdeError, RuntimeError):
    """Newton iteration produced a non-finite iterate.

    The iteration trace gathered up to the failure is kept on ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []
