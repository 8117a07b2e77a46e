"""Exception types shared across the toolkit."""


class GenlinkError(Exception):
    """Base class for all toolkit errors."""


class KbFormatError(GenlinkError):
    """A KB or dataset file line could not be parsed."""

    def __init__(self, path, lineno, reason):
        self.path = str(path)
        self.lineno = lineno
        self.reason = reason
        super().__init__(f"{self.path}:{lineno}: {reason}")


class IntegrityError(GenlinkError):
    """A structural invariant was violated (e.g. a name owned by two concepts)."""


class DecodeError(GenlinkError):
    """Constrained decoding failed, usually because a scorer raised."""


class EvalError(GenlinkError):
    """Predictions and gold data could not be joined or compared."""
