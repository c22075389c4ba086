from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from numpy.typing import NDArray

from hear.utils.error_handler import DuplicateLabel, Inconsistency

FORMAT_VERSION = 1
UNITS = 'microvolt'


@dataclass(frozen=True)
class TrialSegment:
    start_sample: int
    length: int

    @property
    def stop_sample(self) -> int:
        return self.start_sample + self.length


@dataclass(frozen=True)
class RecordingHeader:
    f_s: float
    labels: tuple[str, ...]
    sample_count: int
    trials: Optional[tuple[TrialSegment, ...]] = None
    format_version: int = FORMAT_VERSION
    units: str = UNITS

    def __post_init__(self) -> None:
        if len(set(self.labels)) != len(self.labels):
            raise DuplicateLabel("Recording header repeats a channel label")
        if self.units != UNITS:
            raise Inconsistency(f"Unsupported units '{self.units}', expected '{UNITS}'")
        if self.trials:
            for segment in self.trials:
                if segment.start_sample < 0 or segment.length < 1 or segment.stop_sample > self.sample_count:
                    raise Inconsistency(f"Trial {segment} lies outside {self.sample_count} samples")

    @property
    def n_channels(self) -> int:
        return len(self.labels)

    def to_dict(self) -> dict[str, Any]:
        return {
            'format_version': self.format_version,
            'f_s': self.f_s,
            'labels': list(self.labels),
            'units': self.units,
            'sample_count': self.sample_count,
            'trials': None if self.trials is None else [
                {'start_sample': t.start_sample, 'length': t.length} for t in self.trials
            ],
        }


@dataclass(eq=False)
class Recording:
    """Header plus channels x samples µV data."""
    header: RecordingHeader
    data: NDArray[np.float64] = field(repr=False)

    def __post_init__(self) -> None:
        if self.data.shape != (self.header.n_channels, self.header.sample_count):
            raise Inconsistency(
                f"Data shape {self.data.shape} disagrees with header "
                f"({self.header.n_channels} channels, {self.header.sample_count} samples)"
            )

    def trial_array(self) -> NDArray[np.float64]:
        """Stack equal-length trials into trials x channels x samples."""
        segments = self.header.trials or (TrialSegment(0, self.header.sample_count),)
        lengths = {segment.length for segment in segments}
        if len(lengths) != 1:
            raise Inconsistency("Trials have different lengths and cannot be stacked")
        return np.stack([self.data[:, s.start_sample:s.stop_sample] for s in segments])
