"""Exception types shared across the library."""


class InsufficientDataError(ValueError):
    """A population does not contain enough samples for the requested split."""


class DataFormatError(ValueError):
    """Malformed input data; carries the offending line number when known."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class QuadratureError(RuntimeError):
    """The integrand produced a non-finite value at an interior node."""


class QuadratureNonConvergence(RuntimeError):
    """Refinement hit max_level without meeting the requested tolerance.

    The partial result is available as ``estimate`` / ``error_estimate``
    so callers can decide whether it is still usable.
    """

    def __init__(self, estimate, error_estimate, message=None):
        if message is None:
            message = (
                f"quadrature did not converge: estimate={estimate!r}, "
                f"error={error_estimate!r}"
            )
        super().__init__(message)
        self.estimate = estimate
        self.error_estimate = error_estimate
