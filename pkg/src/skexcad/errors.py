"""Exception hierarchy shared across the toolchain."""


class CadError(Exception):
    """Base class for all toolchain errors."""


class ConstructionError(CadError):
    """Raised when a domain type is constructed with invariant-violating fields."""


class GeometryError(CadError):
    """Raised by geometric primitives on degenerate or out-of-range input."""


class CompileError(CadError):
    """Raised when a program cannot be compiled to a mesh.

    Carries the part/block indices of the first offending block when known.
    """

    def __init__(self, message, part_index=None, block_index=None):
        super().__init__(message)
        self.part_index = part_index
        self.block_index = block_index


class FitError(CadError):
    """Raised by RANSAC / least-squares fitting on unusable input."""


class AssignmentError(CadError):
    """Raised on invalid cost matrices (NaN entries, empty dimensions)."""


class EncodeError(CadError):
    """Raised when a program does not fit its normalization box."""


class ProviderError(CadError):
    """Base class for structure/embedding provider failures."""


class ConfigError(ProviderError):
    """Provider misconfiguration detected before any request is made."""


class TransportError(ProviderError):
    """Request failed after all retry attempts.

    ``attempts`` holds one human-readable line per failed attempt.
    """

    def __init__(self, message, attempts=()):
        super().__init__(message)
        self.attempts = list(attempts)
