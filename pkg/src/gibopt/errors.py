"""Exception types shared across the library."""


class ConfigurationError(ValueError):
    """Raised when a configuration value is structurally invalid."""


class NumericalError(RuntimeError):
    """Raised when a linear-algebra step fails beyond recovery.

    Carries the list of jitter magnitudes that were attempted before
    giving up, so callers can report what was tried.
    """

    def __init__(self, message, attempted_jitters=()):
        super().__init__(message)
        self.attempted_jitters = tuple(attempted_jitters)
