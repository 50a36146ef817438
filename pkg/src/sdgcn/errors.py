"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SdgcnError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(SdgcnError):
    """Operand shapes are incompatible for the requested operation."""

    def __init__(self, message: str, *shapes: tuple[int, ...]):
        super().__init__(message)
        self.shapes = shapes


class DegenerateInputError(SdgcnError):
    """Input is structurally valid but has no usable content (e.g. all-masked softmax)."""


class ConfigError(SdgcnError):
    """A configuration value is out of range, unknown, or missing."""


class PreconditionError(SdgcnError):
    """A documented precondition of an operation was violated by the caller."""


class DivergenceError(SdgcnError):
    """Training produced a NaN/Inf gradient; names the offending parameter."""

    def __init__(self, param_name: str, message: str | None = None):
        super().__init__(message or f"non-finite gradient in parameter '{param_name}'")
        self.param_name = param_name


class DataError(SdgcnError):
    """Corpus content violates the instance model (bad label, bad span, ...)."""


class FormatError(SdgcnError):
    """A file does not conform to its declared format; carries location info when known."""

    def __init__(self, message: str, *, line: int | None = None, offset: int | None = None):
        super().__init__(message)
        self.line = line
        self.offset = offset


class CheckpointError(FormatError):
    """Checkpoint container is malformed or inconsistent with the model config."""
