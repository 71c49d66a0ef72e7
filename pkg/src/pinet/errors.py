"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operand shapes are incompatible for the requested operation."""


class DomainError(ValueError):
    """An argument is outside the domain an operation accepts."""


class DegenerateMaskError(DomainError):
    """A softmax slice has every position masked out."""


class TapeError(RuntimeError):
    """A differentiation request violates the tape contract."""


class GenerationError(RuntimeError):
    """Random graph generation failed to produce a valid sample."""


class DataFormatError(ValueError):
    """A dataset file is missing, malformed, or self-inconsistent."""

    def __init__(self, message: str, path=None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + loc)
        self.path = path
        self.line = line


class TrainingError(RuntimeError):
    """Training aborted, e.g. because a gradient became non-finite."""
