import json
import math
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np
from numpy.typing import NDArray

from hear.utils.error_handler import InvalidCriteria

INFINITY_SENTINEL = '+inf'
NEGATIVE_INFINITY_SENTINEL = '-inf'

AMPLITUDE = 'amplitude'
PROBABILITY = 'probability'
VARIANCE = 'variance'
KURTOSIS = 'kurtosis'
CRITERIA = (AMPLITUDE, PROBABILITY, VARIANCE, KURTOSIS)


@dataclass(frozen=True, eq=False)
class ContaminationMask:
    """Boolean trials x channels x samples tensor of artifact-touched elements."""
    mask: NDArray[np.bool_]

    def __post_init__(self) -> None:
        object.__setattr__(self, 'mask', np.asarray(self.mask, dtype=bool))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.mask.shape)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.mask))


@dataclass(frozen=True)
class OutlierCriteria:
    """Thresholds of the automatic outlier-trial rejection."""
    amplitude_threshold: float = 200.0  # µV
    z_probability: float = 6.0
    z_variance: float = 4.0
    z_kurtosis: float = 6.0
    min_trials_for_z: int = 8

    def __post_init__(self) -> None:
        for name in ('amplitude_threshold', 'z_probability', 'z_variance', 'z_kurtosis'):
            if not getattr(self, name) > 0:
                raise InvalidCriteria(f"{name} must be positive, got {getattr(self, name)}")


@dataclass
class OutlierReport:
    """Flagged trials with the criteria that flagged them."""
    n_trials: int
    flags: dict[str, set[int]] = field(default_factory=lambda: {name: set() for name in CRITERIA})
    skipped: list[str] = field(default_factory=list)

    @property
    def flagged(self) -> list[int]:
        return sorted(set().union(*self.flags.values()))

    @property
    def fraction(self) -> float:
        return len(self.flagged) / self.n_trials if self.n_trials else 0.0

    def criteria_for(self, trial: int) -> list[str]:
        return [name for name in CRITERIA if trial in self.flags[name]]


@dataclass(frozen=True)
class MetricRecord:
    """One metric of one (subject, algorithm-config) pair."""
    subject: Union[int, str]
    config: str
    metric: str
    value: float

    def to_line(self) -> str:
        value: Any = self.value
        if math.isinf(self.value):
            value = INFINITY_SENTINEL if self.value > 0 else NEGATIVE_INFINITY_SENTINEL
        return json.dumps({
            'subject': self.subject,
            'config': self.config,
            'metric': self.metric,
            'value': value,
        }, allow_nan=False)

    @classmethod
    def from_line(cls, line: str) -> "MetricRecord":
        data = json.loads(line)
        value = data['value']
        return cls(
            subject=data['subject'],
            config=data['config'],
            metric=data['metric'],
            value=_SENTINEL_VALUES[value] if isinstance(value, str) else float(value),
        )


_SENTINEL_VALUES = {INFINITY_SENTINEL: math.inf, NEGATIVE_INFINITY_SENTINEL: -math.inf}
