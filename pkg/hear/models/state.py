from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from hear.models.calibration import CalibrationModel
from hear.models.config import HearConfig
from hear.models.montage import InterpolationMatrix
from hear.utils.error_handler import DimensionMismatch, ValidationError


@dataclass
class VarianceState:
    """Running per-channel variance estimate of one stream."""
    s2: NDArray[np.float64]  # µV²
    lam: float
    samples_seen: int = 0

    def __post_init__(self) -> None:
        self.s2 = np.array(self.s2, dtype=np.float64)
        if self.s2.ndim != 1:
            raise DimensionMismatch(f"s2 must be a vector, got shape {self.s2.shape}")
        if np.any(self.s2 < 0):
            raise ValidationError("Variance estimates must be non-negative")
        if not 0 < self.lam < 1:
            raise ValidationError(f"Smoothing factor must lie in (0, 1), got {self.lam}")

    @property
    def n_channels(self) -> int:
        return int(self.s2.size)


@dataclass
class CorrectorState:
    """
    Everything one stream needs to correct samples.

    ``model`` stays None until the stream is calibrated. ``config`` is the
    effective configuration (the model's snapshot plus any overrides).
    """
    variance: VarianceState
    d_matrix: InterpolationMatrix
    config: HearConfig
    model: Optional[CalibrationModel] = None
    threshold_mean: NDArray[np.float64] = field(init=False, repr=False)
    threshold_scale: NDArray[np.float64] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = self.d_matrix.n_channels
        if self.variance.n_channels != n:
            raise DimensionMismatch(
                f"Variance state has {self.variance.n_channels} channels, "
                f"interpolation matrix has {n}"
            )
        if self.model is not None:
            if self.model.n_channels != n:
                raise DimensionMismatch(
                    f"Model has {self.model.n_channels} channels, interpolation matrix has {n}"
                )
            mu_s = self.model.mu_s
            self.threshold_mean = self.config.phi * mu_s
            self.threshold_scale = self.config.xi * mu_s
        else:
            self.threshold_mean = np.full(n, np.nan)
            self.threshold_scale = np.full(n, np.nan)

    @property
    def n_channels(self) -> int:
        return self.d_matrix.n_channels

    @property
    def is_calibrated(self) -> bool:
        return self.model is not None
