"""
Reusable validators for signal arrays.

Validators are small callables so services can share the same checks and
raise the same named errors.
"""
from typing import Optional, Sequence, Type

import numpy as np
from numpy.typing import ArrayLike, NDArray

from hear.utils.error_handler import (
    DimensionMismatch, EmptyInput, NonFiniteInput, ValidationError
)


class Finite:
    """
    Validates that every entry of an array is finite.

    Usage:
        Finite()(x)
        Finite(error=NonFiniteCoordinate, what='coordinate')(positions)
    """

    def __init__(
        self,
        error: Type[ValidationError] = NonFiniteInput,
        what: str = "input",
        message: Optional[str] = None
    ):
        self.error = error
        self.what = what
        self.message = message

    def __call__(self, values: NDArray) -> None:
        if not np.all(np.isfinite(values)):
            bad = int(np.size(values) - np.count_nonzero(np.isfinite(values)))
            raise self.error(self.message or f"{bad} non-finite {self.what} value(s)")


class ChannelCount:
    """Validates that the leading (or given) axis holds the expected channel count."""

    def __init__(self, expected: int, axis: int = 0, what: str = "input"):
        self.expected = expected
        self.axis = axis
        self.what = what

    def __call__(self, values: NDArray) -> None:
        if values.ndim == 0 or values.shape[self.axis] != self.expected:
            raise DimensionMismatch(
                f"{self.what} has shape {values.shape}, expected {self.expected} channels "
                f"on axis {self.axis}"
            )


class NonEmpty:
    """Validates that an array holds at least one element along every axis."""

    def __init__(self, what: str = "input"):
        self.what = what

    def __call__(self, values: NDArray) -> None:
        if values.size == 0:
            raise EmptyInput(f"{self.what} is empty (shape {values.shape})")


def as_float_array(values: ArrayLike, ndim: Optional[int] = None, what: str = "input") -> NDArray[np.float64]:
    """Convert to a float64 array and check its rank."""
    array = np.asarray(values, dtype=np.float64)
    if ndim is not None and array.ndim != ndim:
        raise DimensionMismatch(f"{what} must have {ndim} dimension(s), got shape {array.shape}")
    return array


def check_signal(
    values: ArrayLike,
    n_channels: Optional[int] = None,
    ndim: int = 2,
    what: str = "signal",
    channel_axis: int = 0
) -> NDArray[np.float64]:
    """Convert and validate a signal: rank, non-empty, finite, channel count."""
    array = as_float_array(values, ndim=ndim, what=what)
    NonEmpty(what)(array)
    Finite(what=what)(array)
    if n_channels is not None:
        ChannelCount(n_channels, axis=channel_axis, what=what)(array)
    return array


def check_same_shape(shapes: Sequence[tuple], names: Sequence[str], error: Type[ValidationError]) -> None:
    """Raise ``error`` unless all shapes agree."""
    first = shapes[0]
    for shape, name in zip(shapes[1:], names[1:]):
        if shape != first:
            raise error(f"{name} has shape {shape}, {names[0]} has shape {first}")
