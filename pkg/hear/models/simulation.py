from dataclasses import asdict, dataclass, field
from typing import Any, Optional

import numpy as np
from numpy.typing import NDArray

from hear.models.montage import ElectrodeMontage
from hear.utils.error_handler import ValidationError

POP = 'pop'
DRIFT = 'drift'
DECAY_MODES = ('rate', 'tau')


@dataclass(frozen=True)
class SimulationSpec:
    """
    Parameters of the simulated study.

    Ranges are (low, high) tuples drawn uniformly. Amplitudes are µV,
    times are seconds, distances are millimeters.
    """
    seed: int = 0
    n_subjects: int = 15
    n_rest_trials: int = 12
    n_reach_trials: int = 60
    trial_length: float = 15.0
    f_s: float = 200.0
    n_electrodes: int = 64

    # cortical background
    n_pink_sources: int = 40
    n_brown_sources: int = 40
    pink_amplitude_uv: float = 37.5
    brown_amplitude_uv: float = 75.0
    source_radius_mm: float = 100.0
    scalp_radius_mm: float = 120.0
    gain_epsilon_mm2: float = 400.0
    brain_rms_uv: float = 3.0
    electrode_noise_range: tuple[float, float] = (0.5, 1.5)

    # movement-related potential
    mrcp_center_mm: tuple[float, float, float] = (-25.0, 0.0, 80.0)
    mrcp_location_jitter_mm: float = 10.0
    mrcp_latency_jitter_s: float = 0.2
    mrcp_peak_uv: float = -120.0
    mrcp_peak_jitter_uv: float = 20.0

    # electrode artifacts
    n_pop_sources: int = 10
    n_drift_sources: int = 10
    activation_probability: float = 0.02
    pop_amplitude_range: tuple[float, float] = (90.0, 110.0)
    pop_decay_range: tuple[float, float] = (0.17, 0.33)
    pop_decay_mode: str = 'rate'
    pop_onset_window: tuple[float, float] = (5.0, 10.0)
    drift_band: tuple[float, float] = (0.1, 0.3)
    drift_window: tuple[float, float] = (3.0, 12.0)
    drift_rms_uv: float = 50.0

    def __post_init__(self) -> None:
        counts = {
            'n_subjects': self.n_subjects,
            'n_rest_trials': self.n_rest_trials,
            'n_reach_trials': self.n_reach_trials,
            'n_electrodes': self.n_electrodes,
        }
        for name, value in counts.items():
            if value < 1:
                raise ValidationError(f"{name} must be at least 1, got {value}")
        if self.n_electrodes < 2:
            raise ValidationError("The simulated montage needs at least 2 electrodes")
        samples = self.trial_length * self.f_s
        if not self.trial_length > 0 or not self.f_s > 0 or abs(samples - round(samples)) > 1e-9:
            raise ValidationError(
                f"trial_length * f_s must be a positive integer, got {samples}"
            )
        if self.pop_decay_mode not in DECAY_MODES:
            raise ValidationError(
                f"pop_decay_mode must be one of: {', '.join(DECAY_MODES)}"
            )
        if not 0 <= self.activation_probability <= 1:
            raise ValidationError("activation_probability must lie in [0, 1]")
        if self.scalp_radius_mm <= self.source_radius_mm:
            raise ValidationError("Electrodes must sit outside the source hemisphere")
        if not self.brain_rms_uv > 0:
            raise ValidationError("brain_rms_uv must be positive")
        start, stop = self.pop_onset_window
        if not 0 <= start <= stop < self.trial_length:
            raise ValidationError("pop_onset_window must lie within the trial")
        start, stop = self.drift_window
        if not 0 <= start < stop <= self.trial_length:
            raise ValidationError("drift_window must lie within the trial")

    @property
    def n_samples(self) -> int:
        return int(round(self.trial_length * self.f_s))


@dataclass(frozen=True)
class MrcpJitter:
    """Per-trial variation of the movement-related potential."""
    latency_s: float = 0.0
    peak_delta_uv: float = 0.0
    location_offset_mm: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ArtifactEvent:
    """
    Ground truth for one activated pop or drift source.

    Pops use ``amplitude`` (µV) and ``decay_rate`` (1/s); drifts use ``band``
    (Hz), ``window`` (s), ``rms`` (µV) and ``seed``, which regenerates the
    waveform exactly.
    """
    kind: str
    trial: int
    channel: int
    onset: float
    amplitude: Optional[float] = None
    decay_rate: Optional[float] = None
    band: Optional[tuple[float, float]] = None
    window: Optional[tuple[float, float]] = None
    rms: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in (POP, DRIFT):
            raise ValidationError(f"Unknown artifact kind '{self.kind}'")
        if self.trial < 0 or self.channel < 0:
            raise ValidationError("Artifact events need non-negative trial and channel indices")
        if self.kind == POP and (self.amplitude is None or self.decay_rate is None):
            raise ValidationError("Pop events need amplitude and decay_rate")
        if self.kind == DRIFT and (
            self.band is None or self.window is None or self.rms is None or self.seed is None
        ):
            raise ValidationError("Drift events need band, window, rms and seed")

    def to_dict(self) -> dict[str, Any]:
        return {key: value for key, value in asdict(self).items() if value is not None}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ArtifactEvent":
        try:
            return cls(
                kind=str(data['kind']),
                trial=int(data['trial']),
                channel=int(data['channel']),
                onset=float(data['onset']),
                amplitude=_optional_float(data.get('amplitude')),
                decay_rate=_optional_float(data.get('decay_rate')),
                band=_optional_pair(data.get('band')),
                window=_optional_pair(data.get('window')),
                rms=_optional_float(data.get('rms')),
                seed=None if data.get('seed') is None else int(data['seed']),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"Malformed artifact event {data!r}: {e}")


@dataclass(eq=False)
class SimulatedDataset:
    """One simulated subject. Signal arrays are trials x channels x samples in µV."""
    subject: int
    f_s: float
    montage: ElectrodeMontage
    rest: NDArray[np.float64]
    reach: NDArray[np.float64]
    reach_clean: NDArray[np.float64]
    electrode_noise: NDArray[np.float64]
    noise_amplitudes: NDArray[np.float64]
    events: list[ArtifactEvent] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.reach.shape != self.reach_clean.shape or self.reach.shape != self.electrode_noise.shape:
            raise ValidationError("reach, reach_clean and electrode_noise shapes disagree")
        if self.rest.shape[1:] != self.reach.shape[1:]:
            raise ValidationError("rest and reach trials differ in channels or length")
        if self.reach.shape[1] != self.montage.n_channels:
            raise ValidationError("Trial channel count does not match the montage")

    @property
    def n_samples(self) -> int:
        return int(self.reach.shape[2])


def _optional_float(value: Any) -> Optional[float]:
    return None if value is None else float(value)


def _optional_pair(value: Any) -> Optional[tuple[float, float]]:
    if value is None:
        return None
    low, high = value
    return (float(low), float(high))
