from dataclasses import asdict, dataclass, replace
from typing import Any, Optional

from hear.utils.error_handler import InvalidSmoothingSpec, ValidationError

# t_est * f_s may land a rounding step below 1 for valid specs like 0.005 s at 200 Hz.
_WINDOW_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SmoothingSpec:
    """Time window, sampling rate and weight share that define the smoothing factor."""
    t_est: float
    f_s: float
    p_weight: float = 0.9

    def __post_init__(self) -> None:
        if not self.t_est > 0:
            raise InvalidSmoothingSpec(f"t_est must be positive, got {self.t_est}")
        if not self.f_s > 0:
            raise InvalidSmoothingSpec(f"f_s must be positive, got {self.f_s}")
        if not 0 < self.p_weight < 1:
            raise InvalidSmoothingSpec(f"p_weight must lie in (0, 1), got {self.p_weight}")
        if self.t_est * self.f_s < 1 - _WINDOW_TOLERANCE:
            raise InvalidSmoothingSpec(
                f"t_est * f_s must be at least one sample, got {self.t_est * self.f_s}"
            )

    @property
    def window_samples(self) -> float:
        return self.t_est * self.f_s


@dataclass(frozen=True)
class HearConfig:
    """Hyper-parameters of the corrector."""
    f_s: float
    t_est: float = 0.25
    phi: float = 3.0
    xi: float = 1.0
    p_weight: float = 0.9
    k_neighbors: int = 4

    def __post_init__(self) -> None:
        if not self.phi > 0:
            raise ValidationError(f"phi must be positive, got {self.phi}")
        if not self.xi > 0:
            raise ValidationError(f"xi must be positive, got {self.xi}")
        if int(self.k_neighbors) != self.k_neighbors or self.k_neighbors < 1:
            raise ValidationError(f"k_neighbors must be a positive integer, got {self.k_neighbors}")
        # SmoothingSpec carries the remaining checks
        self.smoothing_spec

    @property
    def smoothing_spec(self) -> SmoothingSpec:
        return SmoothingSpec(t_est=self.t_est, f_s=self.f_s, p_weight=self.p_weight)

    def with_overrides(
        self,
        phi: Optional[float] = None,
        xi: Optional[float] = None,
        t_est: Optional[float] = None,
        k_neighbors: Optional[int] = None,
        p_weight: Optional[float] = None
    ) -> "HearConfig":
        """Return a copy with every given (non-None) field replaced."""
        changes = {
            key: value for key, value in {
                'phi': phi, 'xi': xi, 't_est': t_est,
                'k_neighbors': k_neighbors, 'p_weight': p_weight,
            }.items() if value is not None
        }
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "HearConfig":
        try:
            return cls(
                f_s=float(data['f_s']),
                t_est=float(data['t_est']),
                phi=float(data['phi']),
                xi=float(data['xi']),
                p_weight=float(data['p_weight']),
                k_neighbors=int(data['k_neighbors']),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"Incomplete config snapshot: {e}")
