"""
Exceptions raised by tsepi. Each carries a short machine-readable code that the
command-line interface prints on failure.
"""


class TsepiError(Exception):
    code = "error"

    def one_line(self):
        """Single-line, machine-parseable rendering used by the CLI"""
        message = str(self).replace("\n", " ").replace('"', "'")
        return f'error code={self.code} message="{message}"'


class InvalidArgumentError(TsepiError, ValueError):
    code = "invalid-argument"


class UndefinedResultError(TsepiError, ValueError):
    code = "undefined-result"


class SceneSamplingError(TsepiError):
    code = "scene-sampling"


class CheckpointError(TsepiError):
    code = "checkpoint-mismatch"


class ManifestError(TsepiError, OSError):
    code = "io-error"

    def __init__(self, message, path=None, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.path = path
        self.line = line


class InternalError(TsepiError):
    code = "internal-error"


def from_unexpected(exc):
    """TsepiError standing in for an exception raised outside tsepi's own checks"""
    if isinstance(exc, OSError):
        return ManifestError(f"{type(exc).__name__}: {exc}", path=getattr(exc, "filename", None))
    return InternalError(f"{type(exc).__name__}: {exc}")
