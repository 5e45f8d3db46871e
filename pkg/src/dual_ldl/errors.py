"""Domain exceptions.

Library code raises these; only the CLI turns them into exit codes.
"""

from __future__ import annotations


class DualLdlError(Exception):
    """Root of every error raised by this package."""


class InvalidArgumentError(DualLdlError, ValueError):
    """A numeric argument is non-finite or outside its domain."""


class OutOfRangeError(InvalidArgumentError):
    """A score lies outside the grid's [y_min, y_max] range."""


class NoRatersError(InvalidArgumentError):
    """A sample has no ratings at all."""


class InvalidRatingError(InvalidArgumentError):
    """A rating is not an integer in 1..5."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ParseError(DualLdlError):
    """A row of an input file could not be parsed."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyDatasetError(DualLdlError):
    """An input file or dataset holds no samples."""


class ShapeError(DualLdlError, ValueError):
    """Array lengths or widths do not line up."""


class NumericError(DualLdlError, ArithmeticError):
    """A computation produced a non-finite value."""

    def __init__(self, term: str, message: str | None = None) -> None:
        self.term = term
        super().__init__(message or f"non-finite value in {term}")


class ConfigError(DualLdlError, ValueError):
    """A run configuration is inconsistent with the data it is applied to."""


class StateError(DualLdlError):
    """Cached or optimizer state does not match the call it is used with."""


class ModelFormatError(DualLdlError):
    """A model file is corrupt or truncated."""

    def __init__(self, message: str, offset: int) -> None:
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


class UnsupportedVersionError(ModelFormatError):
    """A model file declares a format version this build cannot read."""


class TrainingDivergedError(DualLdlError):
    """A loss component became non-finite during training."""

    def __init__(self, epoch: int, step: int, component: str) -> None:
        self.epoch = epoch
        self.step = step
        self.component = component
        super().__init__(
            f"training diverged at epoch {epoch}, step {step}: {component} is not finite"
        )


class PcUndefinedError(DualLdlError):
    """Pearson correlation is undefined because one vector is constant."""
