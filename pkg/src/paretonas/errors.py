"""Exception types shared across the package."""


class CodecError(ValueError):
    """Raised when a bitstring or architecture violates its search-space layout."""


class ConfigError(ValueError):
    """Raised for invalid run configuration (population size, rates, throughput, ...)."""


class EvaluationError(RuntimeError):
    """Raised when a candidate evaluation fails or returns unusable values."""


class MissingEntryError(EvaluationError):
    """Raised by the table evaluator when a genome has no recorded measurement."""


class TransportError(EvaluationError):
    """Raised when an external evaluator worker crashes, times out, or misbehaves."""


class CheckpointError(RuntimeError):
    """Raised when a run directory's checkpoint is missing, corrupt, or mismatched."""
