"""Exception hierarchy shared across the toolkit."""


class ShadowcastError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ShadowcastError, ValueError):
    """Invalid configuration or parameter value."""


class IngestError(ShadowcastError, ValueError):
    """Malformed or inconsistent dataset files."""

    def __init__(self, message: str, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class ShapeError(ShadowcastError, ValueError):
    """Array dimensions do not line up."""


class NumericFault(ShadowcastError, ArithmeticError):
    """A NaN or Inf appeared in a kernel output."""

    def __init__(self, message: str, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint


class CheckpointError(ShadowcastError):
    """Checkpoint missing, corrupt or of an unsupported format version."""
