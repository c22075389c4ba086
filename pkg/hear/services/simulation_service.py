"""
Service layer for the synthetic EEG study.

Cortical background comes from pink and brown noise sources on a hemisphere
projected to the scalp electrodes. Reach trials add a movement-related
potential; electrode artifacts (pops and drifts) are added on single channels
with full ground-truth bookkeeping.
"""
import logging
import math
from typing import Optional, Union

import numpy as np
from joblib import Parallel, delayed
from numpy.typing import NDArray
from scipy.signal.windows import tukey

from hear.models.simulation import (
    DRIFT, POP, ArtifactEvent, MrcpJitter, SimulatedDataset, SimulationSpec
)
from hear.services.montage_service import MontageService
from hear.utils.error_handler import InvalidBand, OnsetOutsideTrial, ValidationError

logger = logging.getLogger(__name__)

Seed = Union[int, np.random.SeedSequence, np.random.Generator, None]

# 1/f^beta exponents of the colored noise kinds
NOISE_EXPONENTS = {'white': 0.0, 'pink': 1.0, 'brown': 2.0}

# Shape of the movement-related potential: a slow and a fast half-Gaussian
# build-up before the peak and a common fast return after it.
MRCP_ONSET_S = 8.0
MRCP_SLOW_SHARE = 0.25
MRCP_SLOW_RISE_S = 0.4
MRCP_FAST_RISE_S = 0.12
MRCP_FALL_S = 0.065

DRIFT_TAPER_ALPHA = 0.5
_GRID_TOLERANCE = 1e-9


class SimulationService:
    """Service class for synthetic data generation."""

    @staticmethod
    def gen_colored_noise(kind: str, length: int, amplitude: float, seed: Seed = None) -> NDArray[np.float64]:
        """
        Generate 1/f^beta noise by shaping a white spectrum.

        Args:
            kind: 'white', 'pink' or 'brown'
            length: Number of samples
            amplitude: RMS of the result (µV)
            seed: Seed or generator

        Returns:
            Zero-mean noise whose power spectrum falls as 1/f^beta
        """
        if kind not in NOISE_EXPONENTS:
            raise ValidationError(f"Noise kind must be one of: {', '.join(NOISE_EXPONENTS)}")
        rng = np.random.default_rng(seed)
        return _shaped_noise(rng, NOISE_EXPONENTS[kind], 1, length, amplitude)[0]

    @staticmethod
    def gen_band_limited_pink(
        length: int,
        f_s: float,
        band: tuple[float, float],
        rms_amplitude: float,
        seed: Seed = None
    ) -> NDArray[np.float64]:
        """Pink noise with every frequency outside ``band`` (Hz, inclusive) removed."""
        low, high = band
        if not 0 < low < high <= f_s / 2:
            raise InvalidBand(f"Band ({low}, {high}) Hz must satisfy 0 < low < high <= {f_s / 2}")
        rng = np.random.default_rng(seed)
        freqs = np.fft.rfftfreq(length, 1.0 / f_s)
        in_band = (freqs >= low) & (freqs <= high)
        if not np.any(in_band):
            raise InvalidBand(f"No frequency of a {length}-sample trial lies in ({low}, {high}) Hz")

        spectrum = np.zeros(freqs.size, dtype=np.complex128)
        spectrum[in_band] = (
            rng.standard_normal(int(in_band.sum())) + 1j * rng.standard_normal(int(in_band.sum()))
        ) / np.sqrt(freqs[in_band])
        noise = np.fft.irfft(spectrum, n=length)
        return _scale_rms(noise, rms_amplitude)

    @staticmethod
    def gen_pop_waveform(
        amplitude: float,
        decay_rate: float,
        onset: float,
        length: int,
        f_s: float
    ) -> NDArray[np.float64]:
        """
        Step at ``onset`` followed by exponential decay: A*exp(-r*(t - onset)) for t >= onset.

        Raises:
            OnsetOutsideTrial: If onset is not inside the trial
        """
        duration = length / f_s
        if not 0 <= onset < duration:
            raise OnsetOutsideTrial(f"Onset {onset} s is outside the {duration:g} s trial")
        if not decay_rate > 0:
            raise ValidationError(f"decay_rate must be positive, got {decay_rate}")
        t = np.arange(length) / f_s
        waveform = np.zeros(length, dtype=np.float64)
        after = t >= onset
        waveform[after] = amplitude * np.exp(-decay_rate * (t[after] - onset))
        return waveform

    @staticmethod
    def gen_drift_waveform(
        length: int,
        f_s: float,
        band: tuple[float, float] = (0.1, 0.3),
        window: tuple[float, float] = (3.0, 12.0),
        rms_amplitude: float = 50.0,
        seed: Seed = None
    ) -> NDArray[np.float64]:
        """
        Slow drift: band-limited pink noise confined to ``window`` by a Tukey taper.

        The taper's end points are zero, so the drift is exactly zero outside
        the window. ``rms_amplitude`` is the RMS before tapering.

        Raises:
            InvalidBand: If the band is empty or above Nyquist
            ValidationError: If the window does not lie inside the trial
        """
        start_s, stop_s = window
        if not 0 <= start_s < stop_s <= length / f_s:
            raise ValidationError(f"Drift window {window} s must lie inside the {length / f_s:g} s trial")
        base = SimulationService.gen_band_limited_pink(length, f_s, band, rms_amplitude, seed)

        start = math.ceil(start_s * f_s - _GRID_TOLERANCE)
        stop = min(math.floor(stop_s * f_s + _GRID_TOLERANCE), length - 1)
        taper = np.zeros(length, dtype=np.float64)
        taper[start:stop + 1] = tukey(stop - start + 1, alpha=DRIFT_TAPER_ALPHA)
        return base * taper

    @staticmethod
    def gen_mrcp_waveform(
        trial_length: float,
        f_s: float,
        jitter: Optional[MrcpJitter] = None,
        peak_uv: float = -120.0
    ) -> NDArray[np.float64]:
        """
        Movement-related potential of one trial.

        A slow negativity builds from about 1 s before the peak, sharpens about
        300 ms before it and returns to baseline within about 200 ms after it.
        The peak sits at 8 s plus the jitter latency.
        """
        jitter = jitter or MrcpJitter()
        length = int(round(trial_length * f_s))
        center = MRCP_ONSET_S + jitter.latency_s
        if not 0 <= center < trial_length:
            raise OnsetOutsideTrial(f"MRCP peak at {center} s is outside the trial")
        peak = peak_uv + jitter.peak_delta_uv

        t = np.arange(length) / f_s - center
        before = t <= 0
        slow = np.where(before, _half_gaussian(t, MRCP_SLOW_RISE_S), _half_gaussian(t, MRCP_FALL_S))
        fast = np.where(before, _half_gaussian(t, MRCP_FAST_RISE_S), _half_gaussian(t, MRCP_FALL_S))
        return peak * (MRCP_SLOW_SHARE * slow + (1.0 - MRCP_SLOW_SHARE) * fast)

    @staticmethod
    def draw_artifact_events(
        spec: SimulationSpec,
        trial: int,
        rng: np.random.Generator,
        n_channels: Optional[int] = None
    ) -> list[ArtifactEvent]:
        """
        Activate each pop and drift source independently for one trial.

        An active source lands on one uniformly drawn electrode.
        """
        n_channels = n_channels or spec.n_electrodes
        events: list[ArtifactEvent] = []
        for _ in range(spec.n_pop_sources):
            if rng.random() >= spec.activation_probability:
                continue
            channel = int(rng.integers(n_channels))
            onset = float(rng.uniform(*spec.pop_onset_window))
            amplitude = float(rng.uniform(*spec.pop_amplitude_range))
            decay = float(rng.uniform(*spec.pop_decay_range))
            events.append(ArtifactEvent(
                kind=POP,
                trial=trial,
                channel=channel,
                onset=onset,
                amplitude=amplitude,
                decay_rate=decay if spec.pop_decay_mode == 'rate' else 1.0 / decay,
            ))
        for _ in range(spec.n_drift_sources):
            if rng.random() >= spec.activation_probability:
                continue
            events.append(ArtifactEvent(
                kind=DRIFT,
                trial=trial,
                channel=int(rng.integers(n_channels)),
                onset=spec.drift_window[0],
                band=spec.drift_band,
                window=spec.drift_window,
                rms=spec.drift_rms_uv,
                seed=int(rng.integers(0, 2**31 - 1)),
            ))
        return events

    @staticmethod
    def event_waveform(event: ArtifactEvent, length: int, f_s: float) -> NDArray[np.float64]:
        """Regenerate the exact waveform an event injected on its channel."""
        if event.kind == POP:
            assert event.amplitude is not None and event.decay_rate is not None
            return SimulationService.gen_pop_waveform(
                event.amplitude, event.decay_rate, event.onset, length, f_s
            )
        assert event.band is not None and event.window is not None and event.rms is not None
        return SimulationService.gen_drift_waveform(
            length, f_s, event.band, event.window, event.rms, event.seed
        )

    @staticmethod
    def source_positions(rng: np.random.Generator, n_sources: int, radius_mm: float) -> NDArray[np.float64]:
        """Uniform positions on the upper hemisphere of the given radius."""
        z = rng.uniform(0.0, radius_mm, n_sources)
        azimuth = rng.uniform(0.0, 2.0 * np.pi, n_sources)
        rho = np.sqrt(radius_mm ** 2 - z ** 2)
        return np.column_stack([rho * np.cos(azimuth), rho * np.sin(azimuth), z])

    @staticmethod
    def forward_gains(
        sources: NDArray[np.float64],
        electrodes: NDArray[np.float64],
        epsilon_mm2: float
    ) -> NDArray[np.float64]:
        """
        electrodes x sources gains 1 / (d^2 + epsilon), each source scaled to a unit peak.
        """
        d2 = ((electrodes[:, np.newaxis, :] - sources[np.newaxis, :, :]) ** 2).sum(axis=2)
        gains = 1.0 / (d2 + epsilon_mm2)
        return gains / gains.max(axis=0, keepdims=True)

    @staticmethod
    def simulate_subject(spec: SimulationSpec, seed: Seed, subject: int = 0) -> SimulatedDataset:
        """
        Simulate the rest and reach trials of one subject.

        Args:
            spec: Study parameters
            seed: Subject seed (an int or a spawned SeedSequence)
            subject: Subject number stored on the dataset

        Returns:
            The SimulatedDataset with ground truth
        """
        rng = np.random.default_rng(seed)
        montage = MontageService.standard_montage(spec.n_electrodes, spec.scalp_radius_mm)
        length = spec.n_samples
        n = montage.n_channels

        sources = SimulationService.source_positions(
            rng, spec.n_pink_sources + spec.n_brown_sources, spec.source_radius_mm
        )
        gains = SimulationService.forward_gains(sources, montage.positions, spec.gain_epsilon_mm2)
        amplitudes = np.concatenate([
            np.full(spec.n_pink_sources, spec.pink_amplitude_uv),
            np.full(spec.n_brown_sources, spec.brown_amplitude_uv),
        ])
        # expected cortical RMS averaged over electrodes equals brain_rms_uv
        scale = spec.brain_rms_uv / np.sqrt(np.mean((gains ** 2) @ (amplitudes ** 2)))
        noise_amplitudes = rng.uniform(*spec.electrode_noise_range, n)

        def background() -> NDArray[np.float64]:
            signals = np.concatenate([
                _shaped_noise(rng, 1.0, spec.n_pink_sources, length, spec.pink_amplitude_uv),
                _shaped_noise(rng, 2.0, spec.n_brown_sources, length, spec.brown_amplitude_uv),
            ])
            return scale * (gains @ signals)

        rest = np.empty((spec.n_rest_trials, n, length))
        for trial in range(spec.n_rest_trials):
            rest[trial] = background() + noise_amplitudes[:, np.newaxis] * rng.standard_normal((n, length))

        shape = (spec.n_reach_trials, n, length)
        reach_clean = np.empty(shape)
        electrode_noise = np.empty(shape)
        artifacts = np.zeros(shape)
        events: list[ArtifactEvent] = []
        center = np.asarray(spec.mrcp_center_mm, dtype=np.float64)
        for trial in range(spec.n_reach_trials):
            jitter = _draw_jitter(spec, rng)
            location = center + np.asarray(jitter.location_offset_mm)
            mrcp_gain = scale * SimulationService.forward_gains(
                location[np.newaxis], montage.positions, spec.gain_epsilon_mm2
            )[:, 0]
            mrcp = SimulationService.gen_mrcp_waveform(spec.trial_length, spec.f_s, jitter, spec.mrcp_peak_uv)
            reach_clean[trial] = background() + mrcp_gain[:, np.newaxis] * mrcp[np.newaxis, :]
            electrode_noise[trial] = noise_amplitudes[:, np.newaxis] * rng.standard_normal((n, length))

            trial_events = SimulationService.draw_artifact_events(spec, trial, rng, n)
            for event in trial_events:
                artifacts[trial, event.channel] += SimulationService.event_waveform(event, length, spec.f_s)
            events.extend(trial_events)

        logger.info(
            f"Subject {subject}: {spec.n_rest_trials} rest and {spec.n_reach_trials} reach trials, "
            f"{sum(e.kind == POP for e in events)} pop(s), {sum(e.kind == DRIFT for e in events)} drift(s)"
        )
        return SimulatedDataset(
            subject=subject,
            f_s=spec.f_s,
            montage=montage,
            rest=rest,
            reach=reach_clean + electrode_noise + artifacts,
            reach_clean=reach_clean,
            electrode_noise=electrode_noise,
            noise_amplitudes=noise_amplitudes,
            events=events,
        )

    @staticmethod
    def simulate(spec: SimulationSpec, n_jobs: int = 1) -> list[SimulatedDataset]:
        """
        Simulate every subject of the study.

        Subject seeds are spawned from ``spec.seed``, so results do not depend
        on ``n_jobs``.
        """
        seeds = np.random.SeedSequence(spec.seed).spawn(spec.n_subjects)
        logger.info(f"Simulating {spec.n_subjects} subject(s) with seed {spec.seed}")
        datasets = Parallel(n_jobs=n_jobs)(
            delayed(SimulationService.simulate_subject)(spec, seed, subject)
            for subject, seed in enumerate(seeds)
        )
        return list(datasets)


def _shaped_noise(
    rng: np.random.Generator,
    exponent: float,
    rows: int,
    length: int,
    amplitude: float
) -> NDArray[np.float64]:
    """rows x length noise with power falling as 1/f^exponent, zero mean, RMS ``amplitude`` per row."""
    n_bins = length // 2 + 1
    spectrum = rng.standard_normal((rows, n_bins)) + 1j * rng.standard_normal((rows, n_bins))
    shaping = np.zeros(n_bins)
    shaping[1:] = np.arange(1, n_bins, dtype=np.float64) ** (-exponent / 2.0)
    noise = np.fft.irfft(spectrum * shaping, n=length, axis=-1)
    return _scale_rms(noise, amplitude)


def _scale_rms(noise: NDArray[np.float64], amplitude: float) -> NDArray[np.float64]:
    rms = np.sqrt(np.mean(noise ** 2, axis=-1, keepdims=True))
    return noise * (amplitude / np.where(rms > 0, rms, 1.0))


def _half_gaussian(t: NDArray[np.float64], width: float) -> NDArray[np.float64]:
    return np.exp(-0.5 * (t / width) ** 2)


def _draw_jitter(spec: SimulationSpec, rng: np.random.Generator) -> MrcpJitter:
    direction = rng.standard_normal(3)
    direction /= np.linalg.norm(direction)
    radius = spec.mrcp_location_jitter_mm * rng.random() ** (1.0 / 3.0)
    offset = direction * radius
    return MrcpJitter(
        latency_s=float(rng.uniform(-spec.mrcp_latency_jitter_s, spec.mrcp_latency_jitter_s)),
        peak_delta_uv=float(rng.uniform(-spec.mrcp_peak_jitter_uv, spec.mrcp_peak_jitter_uv)),
        location_offset_mm=(float(offset[0]), float(offset[1]), float(offset[2])),
    )
