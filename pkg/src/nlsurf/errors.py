"""Exception hierarchy shared across the package.

Every error raised on purpose by this package derives from NlsurfError, so
callers (and the CLI) can distinguish our failures from genuine bugs.
"""


class NlsurfError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(NlsurfError, ValueError):
    """A caller passed a value that violates a documented precondition."""


class ConfigurationError(NlsurfError):
    """A run configuration file or CLI flag combination is invalid."""


class FormatError(NlsurfError):
    """A file on disk does not conform to its declared container format."""


class NumericError(NlsurfError, RuntimeError):
    """A numerical routine failed (non-PD matrix, divergence, no valid point).

    Carries enough context to identify the offending input.
    """

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = dict(context)

    def __str__(self):
        base = super().__str__()
        if self.context:
            extras = ", ".join(f"{k}={v!r}" for k, v in sorted(self.context.items()))
            return f"{base} ({extras})"
        return base


class NotPositiveDefiniteError(NumericError):
    """Cholesky factorization failed; context records the pivot index."""


class TrainingDivergedError(NumericError):
    """A training loss became non-finite; context records the epoch."""


class AdjustmentUnavailableError(NumericError):
    """No usable curvature estimate (no negative-definite Hessian stencil)."""


class NoValidPointError(NumericError):
    """Every grid point of a surface is an invalid (-inf) sentinel."""


# CLI exit codes. 0 is success and 1 is reserved for unexpected crashes.
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_FORMAT = 4
