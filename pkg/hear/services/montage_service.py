"""
Service layer for electrode geometry.

Parses and writes montage files, answers nearest-neighbor queries and builds
the fixed interpolation matrix the corrector uses.
"""
import logging
import math
import os

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.distance import cdist

from hear.models.montage import ElectrodeMontage, InterpolationMatrix, Neighbor
from hear.utils.error_handler import (
    MontageParseError, NeighborCountOutOfRange, NotFoundError, ValidationError
)

logger = logging.getLogger(__name__)

# Extended 10/20 layout used by the simulator, ordered front to back.
STANDARD_64 = (
    'Fp1', 'Fpz', 'Fp2',
    'AF7', 'AF3', 'AFz', 'AF4', 'AF8',
    'F7', 'F5', 'F3', 'F1', 'Fz', 'F2', 'F4', 'F6', 'F8',
    'FT7', 'FC5', 'FC3', 'FC1', 'FCz', 'FC2', 'FC4', 'FC6', 'FT8',
    'T7', 'C5', 'C3', 'C1', 'Cz', 'C2', 'C4', 'C6', 'T8',
    'TP7', 'CP5', 'CP3', 'CP1', 'CPz', 'CP2', 'CP4', 'CP6', 'TP8',
    'P9', 'P7', 'P5', 'P3', 'P1', 'Pz', 'P2', 'P4', 'P6', 'P8', 'P10',
    'PO7', 'PO3', 'POz', 'PO4', 'PO8',
    'O1', 'Oz', 'O2', 'Iz',
)


class MontageService:
    """Service class for montage operations."""

    @staticmethod
    def load_montage(source: str) -> ElectrodeMontage:
        """
        Parse montage file content.

        One electrode per line as ``label x y z`` in millimeters; blank lines
        and anything after ``#`` are ignored. Channel order follows the file.

        Args:
            source: Montage file content

        Returns:
            The parsed ElectrodeMontage

        Raises:
            MontageParseError: If a line is not ``label x y z``
            DuplicateLabel, NonFiniteCoordinate, CoincidentElectrodes,
            TooFewChannels: If the geometry violates a montage invariant
        """
        labels: list[str] = []
        positions: list[tuple[float, float, float]] = []
        for line_number, raw in enumerate(source.splitlines(), start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 4:
                raise MontageParseError(
                    f"Line {line_number}: expected 'label x y z', got {len(fields)} field(s)"
                )
            try:
                x, y, z = (float(value) for value in fields[1:])
            except ValueError:
                raise MontageParseError(f"Line {line_number}: coordinates must be numbers")
            labels.append(fields[0])
            positions.append((x, y, z))
        return ElectrodeMontage.from_arrays(labels, np.array(positions, dtype=np.float64).reshape(-1, 3))

    @staticmethod
    def load_montage_file(path: str) -> ElectrodeMontage:
        """Read and parse a montage file from disk."""
        if not os.path.isfile(path):
            raise NotFoundError(f"Montage file '{path}' not found")
        with open(path, encoding='utf-8') as handle:
            return MontageService.load_montage(handle.read())

    @staticmethod
    def save_montage(montage: ElectrodeMontage, path: str) -> None:
        """Write a montage in the ``label x y z`` format (lossless floats)."""
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write('# label x y z (mm)\n')
            for electrode in montage.electrodes:
                x, y, z = electrode.position
                handle.write(f'{electrode.label} {x!r} {y!r} {z!r}\n')

    @staticmethod
    def fingerprint(montage: ElectrodeMontage) -> str:
        """Digest binding models to this montage and channel order."""
        return montage.fingerprint

    @staticmethod
    def nearest_neighbors(montage: ElectrodeMontage, target: int, k: int) -> list[Neighbor]:
        """
        Find the k electrodes closest to ``target``.

        Ties in distance are broken by ascending channel index.

        Args:
            montage: The electrode geometry
            target: Index of the target channel
            k: Number of neighbors, 1 <= k <= N - 1

        Returns:
            k Neighbor entries sorted by ascending Euclidean distance

        Raises:
            NeighborCountOutOfRange: If k is outside [1, N - 1]
            ValidationError: If target is not a channel index
        """
        n = montage.n_channels
        if not 0 <= target < n:
            raise ValidationError(f"Target channel {target} is outside 0..{n - 1}")
        if not 1 <= k <= n - 1:
            raise NeighborCountOutOfRange(f"k must lie in [1, {n - 1}], got {k}")

        positions = montage.positions
        distances = np.linalg.norm(positions - positions[target], axis=1)
        candidates = np.array([i for i in range(n) if i != target])
        order = np.lexsort((candidates, distances[candidates]))[:k]
        return [Neighbor(int(candidates[i]), float(distances[candidates[i]])) for i in order]

    @staticmethod
    def build_interpolation_matrix(
        montage: ElectrodeMontage,
        k: int,
        allow_small_montage: bool = False
    ) -> InterpolationMatrix:
        """
        Build the row-stochastic kNN inverse-distance matrix.

        Row i holds 1/d_ij for each of the k nearest neighbors j of i,
        normalized so the row sums to 1.

        Args:
            montage: The electrode geometry
            k: Neighbors per channel
            allow_small_montage: Use all N - 1 other channels when k > N - 1
                instead of raising

        Returns:
            The InterpolationMatrix bound to the montage fingerprint

        Raises:
            NeighborCountOutOfRange: If k is outside [1, N - 1] and the
                montage is not allowed to be small
        """
        n = montage.n_channels
        if k < 1:
            raise NeighborCountOutOfRange(f"k must be at least 1, got {k}")
        if k > n - 1:
            if not allow_small_montage:
                raise NeighborCountOutOfRange(
                    f"k = {k} needs at least {k + 1} channels, montage has {n}"
                )
            logger.warning(f"Montage has {n} channels; using k = {n - 1} instead of {k}")
            k = n - 1

        distances = cdist(montage.positions, montage.positions)
        np.fill_diagonal(distances, np.inf)
        column = np.broadcast_to(np.arange(n), (n, n))
        neighbor_index = np.lexsort((column, distances), axis=-1)[:, :k]

        inverse = 1.0 / np.take_along_axis(distances, neighbor_index, axis=1)
        neighbor_weight = inverse / inverse.sum(axis=1, keepdims=True)

        weights = np.zeros((n, n), dtype=np.float64)
        np.put_along_axis(weights, neighbor_index, neighbor_weight, axis=1)

        return InterpolationMatrix(
            weights=weights,
            neighbor_count=k,
            neighbor_index=neighbor_index.astype(np.intp),
            neighbor_weight=neighbor_weight,
            montage_fingerprint=montage.fingerprint,
        )

    @staticmethod
    def standard_montage(n_electrodes: int = 64, scalp_radius_mm: float = 120.0) -> ElectrodeMontage:
        """
        The extended 10/20 layout on a sphere of the given radius.

        Directions come from mne's ``standard_1020`` template; fewer than 64
        electrodes are taken evenly spaced along the front-to-back order.
        """
        import mne

        if not 2 <= n_electrodes <= len(STANDARD_64):
            raise ValidationError(
                f"The standard layout supports 2..{len(STANDARD_64)} electrodes, got {n_electrodes}"
            )
        template = mne.channels.make_standard_montage('standard_1020').get_positions()['ch_pos']
        picks = np.unique(np.round(np.linspace(0, len(STANDARD_64) - 1, n_electrodes)).astype(int))
        labels = [STANDARD_64[i] for i in picks]

        directions = np.array([template[label] for label in labels], dtype=np.float64)
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        montage = ElectrodeMontage.from_arrays(labels, directions * scalp_radius_mm)
        logger.info(
            f"Standard montage of {montage.n_channels} electrodes, "
            f"mean neighbor spacing {mean_neighbor_distance(montage):.1f} mm"
        )
        return montage


def mean_neighbor_distance(montage: ElectrodeMontage, k: int = 4) -> float:
    """Average distance (mm) to the k nearest neighbors."""
    distances = cdist(montage.positions, montage.positions)
    np.fill_diagonal(distances, np.inf)
    nearest: NDArray = np.sort(distances, axis=1)[:, :min(k, montage.n_channels - 1)]
    value = float(nearest.mean())
    return value if math.isfinite(value) else 0.0
