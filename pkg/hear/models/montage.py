import hashlib
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.distance import pdist

from hear.utils.error_handler import (
    CoincidentElectrodes, DuplicateLabel, NonFiniteCoordinate, TooFewChannels, ValidationError
)
from hear.utils.validators import Finite

# Closer than this (mm) counts as the same location.
MIN_ELECTRODE_DISTANCE_MM = 1e-6
ROW_SUM_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Electrode:
    label: str
    position: tuple[float, float, float]  # mm

    def __repr__(self) -> str:
        x, y, z = self.position
        return f'<Electrode {self.label} at ({x:g}, {y:g}, {z:g}) mm>'


@dataclass(frozen=True, eq=False)
class ElectrodeMontage:
    """Ordered, labeled 3D electrode positions in millimeters."""
    electrodes: tuple[Electrode, ...]

    def __post_init__(self) -> None:
        if len(self.electrodes) < 2:
            raise TooFewChannels(f"A montage needs at least 2 channels, got {len(self.electrodes)}")

        seen: set[str] = set()
        for electrode in self.electrodes:
            if electrode.label in seen:
                raise DuplicateLabel(f"Electrode label '{electrode.label}' appears more than once")
            seen.add(electrode.label)

        Finite(error=NonFiniteCoordinate, what="coordinate")(self.positions)

        distances = pdist(self.positions)
        if np.any(distances < MIN_ELECTRODE_DISTANCE_MM):
            i, j = _pair_from_condensed(int(np.argmin(distances)), len(self.electrodes))
            raise CoincidentElectrodes(
                f"Electrodes '{self.labels[i]}' and '{self.labels[j]}' share a position"
            )

    @classmethod
    def from_arrays(cls, labels: list[str], positions: NDArray) -> "ElectrodeMontage":
        positions = np.asarray(positions, dtype=np.float64)
        if positions.shape != (len(labels), 3):
            raise ValidationError(
                f"Expected {len(labels)} x 3 positions, got shape {positions.shape}"
            )
        return cls(tuple(
            Electrode(label, (float(p[0]), float(p[1]), float(p[2])))
            for label, p in zip(labels, positions)
        ))

    @property
    def n_channels(self) -> int:
        return len(self.electrodes)

    @cached_property
    def labels(self) -> tuple[str, ...]:
        return tuple(e.label for e in self.electrodes)

    @cached_property
    def positions(self) -> NDArray[np.float64]:
        positions = np.array([e.position for e in self.electrodes], dtype=np.float64)
        positions.setflags(write=False)
        return positions

    @cached_property
    def fingerprint(self) -> str:
        """sha256 over labels and coordinates in channel order."""
        digest = hashlib.sha256()
        for electrode in self.electrodes:
            digest.update(electrode.label.encode('utf-8'))
            digest.update(b'\x00')
            digest.update(np.asarray(electrode.position, dtype='<f8').tobytes())
        return digest.hexdigest()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ElectrodeMontage):
            return NotImplemented
        return self.electrodes == other.electrodes

    def __hash__(self) -> int:
        return hash(self.electrodes)

    def __repr__(self) -> str:
        return f'<ElectrodeMontage {self.n_channels} channels {self.fingerprint[:12]}>'


@dataclass(frozen=True)
class Neighbor:
    index: int
    distance: float  # mm


@dataclass(frozen=True, eq=False)
class InterpolationMatrix:
    """
    Row-stochastic inverse-distance weights over each channel's k nearest neighbors.

    ``weights`` is the dense N x N matrix; ``neighbor_index`` / ``neighbor_weight``
    hold the same entries as N x k arrays for the sparse per-sample path.
    """
    weights: NDArray[np.float64]
    neighbor_count: int
    neighbor_index: NDArray[np.intp]
    neighbor_weight: NDArray[np.float64]
    montage_fingerprint: str = field(default="")

    def __post_init__(self) -> None:
        w = self.weights
        n = w.shape[0]
        if w.ndim != 2 or w.shape != (n, n):
            raise ValidationError(f"Interpolation weights must be square, got shape {w.shape}")
        if np.any(np.diag(w) != 0.0):
            raise ValidationError("Interpolation weights must have a zero diagonal")
        if np.any(w < 0):
            raise ValidationError("Interpolation weights must be non-negative")
        if np.any(np.count_nonzero(w > 0, axis=1) > self.neighbor_count):
            raise ValidationError(f"A row has more than {self.neighbor_count} positive weights")
        if np.any(np.abs(w.sum(axis=1) - 1.0) > ROW_SUM_TOLERANCE):
            raise ValidationError("Every row of the interpolation weights must sum to 1")
        if self.neighbor_index.shape != (n, self.neighbor_count) or \
                self.neighbor_weight.shape != (n, self.neighbor_count):
            raise ValidationError("Sparse neighbor arrays do not match the dense weights")
        for array in (self.weights, self.neighbor_index, self.neighbor_weight):
            array.setflags(write=False)

    @property
    def n_channels(self) -> int:
        return int(self.weights.shape[0])

    def apply(self, values: NDArray[np.float64]) -> NDArray[np.float64]:
        """
        D @ values using only the k stored neighbors per row.

        ``values`` is a channel vector or a channels x samples matrix.
        """
        gathered = values[self.neighbor_index]
        if values.ndim == 1:
            return (self.neighbor_weight * gathered).sum(axis=1)
        return np.einsum('nk,nk...->n...', self.neighbor_weight, gathered)

    def __repr__(self) -> str:
        return f'<InterpolationMatrix {self.n_channels}x{self.n_channels} k={self.neighbor_count}>'


def _pair_from_condensed(position: int, n: int) -> tuple[int, int]:
    """Map an index of scipy's condensed distance vector back to (i, j)."""
    i = 0
    remaining = position
    while remaining >= n - 1 - i:
        remaining -= n - 1 - i
        i += 1
    return i, i + 1 + remaining
