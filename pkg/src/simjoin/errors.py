"""Exception types shared across the engine."""


class SimjoinError(Exception):
    """Base class for engine errors."""


class OutOfVocabulary(SimjoinError):
    """Lookup model has no vector for a token and no fallback is enabled."""

    def __init__(self, token: str):
        super().__init__(f"out-of-vocabulary token: {token!r}")
        self.token = token


class OffsetOutOfRange(SimjoinError, IndexError):
    """Tuple offset is outside the relation."""


class ParseError(SimjoinError, ValueError):
    """Malformed input file; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DimensionMismatch(SimjoinError, ValueError):
    """Operands have incompatible dimensionality."""


class ZeroVector(SimjoinError, ValueError):
    """Cosine similarity is undefined for a zero-norm vector."""


class BufferTooSmall(SimjoinError, ValueError):
    """Caller-provided buffer cannot hold the requested tile."""


class BudgetTooSmall(SimjoinError, ValueError):
    """Memory budget below the size of a single fp32 cell."""
