from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from hear.models.config import HearConfig
from hear.utils.error_handler import FingerprintAbsent, InvalidModel


@dataclass(frozen=True, eq=False)
class CalibrationModel:
    """Per-channel reference variances bound to one montage and channel order."""
    mu_s2: NDArray[np.float64]  # µV²
    montage_fingerprint: str
    config: HearConfig

    def __post_init__(self) -> None:
        mu_s2 = np.asarray(self.mu_s2, dtype=np.float64)
        if mu_s2.ndim != 1 or mu_s2.size == 0:
            raise InvalidModel(f"mu_s2 must be a non-empty vector, got shape {mu_s2.shape}")
        if not np.all(np.isfinite(mu_s2)) or np.any(mu_s2 <= 0):
            raise InvalidModel("Every reference variance must be finite and positive")
        if not self.montage_fingerprint:
            raise FingerprintAbsent("Calibration model carries no montage fingerprint")
        mu_s2.setflags(write=False)
        object.__setattr__(self, 'mu_s2', mu_s2)

    @property
    def n_channels(self) -> int:
        return int(self.mu_s2.size)

    @property
    def mu_s(self) -> NDArray[np.float64]:
        return np.sqrt(self.mu_s2)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CalibrationModel):
            return NotImplemented
        return (
            self.montage_fingerprint == other.montage_fingerprint
            and self.config == other.config
            and np.array_equal(self.mu_s2, other.mu_s2)
        )

    def __repr__(self) -> str:
        return f'<CalibrationModel {self.n_channels} channels {self.montage_fingerprint[:12]}>'
