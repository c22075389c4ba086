"""
Service layer for calibration and artifact correction.

Calibration learns a reference variance per channel from clean rest trials.
Correction compares the running variance estimate with that reference, turns
the excess into an artifact probability and blends each channel with the
interpolation from its neighbors by that probability.
"""
import logging
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import ndtr

from hear.models.calibration import CalibrationModel
from hear.models.config import HearConfig
from hear.models.evaluation import OutlierCriteria, OutlierReport
from hear.models.montage import ElectrodeMontage, InterpolationMatrix
from hear.models.recording import TrialSegment
from hear.models.state import CorrectorState
from hear.services.variance_service import VarianceService, _fold
from hear.utils.error_handler import (
    AllTrialsRejected, DeadChannel, DimensionMismatch, EmptyInput, FingerprintMismatch,
    NonFiniteInput, SamplingRateMismatch, TrialTooShort, UncalibratedState, ValidationError
)
from hear.utils.validators import check_signal

logger = logging.getLogger(__name__)

ONLINE = 'online'
OFFLINE = 'offline'
MODES = (ONLINE, OFFLINE)

Trials = Union[NDArray[np.float64], Sequence[ArrayLike]]


class CorrectedSample(NamedTuple):
    x_corrected: NDArray[np.float64]
    p_art: NDArray[np.float64]


class CorrectedSignal(NamedTuple):
    """Corrected channels x samples signal with its per-element artifact probability."""
    x_corrected: NDArray[np.float64]
    p_art: NDArray[np.float64]


class CorrectionService:
    """Service class for calibration and correction operations."""

    @staticmethod
    def calibrate(trials: Trials, config: HearConfig, montage: ElectrodeMontage) -> CalibrationModel:
        """
        Learn the per-channel reference variance from artifact-free trials.

        Each trial is mean-centered per channel, its variance is smoothed in
        both directions and the result is averaged over all samples of all
        trials.

        Args:
            trials: trials x channels x samples, or a sequence of channels x samples
            config: Hyper-parameters; t_est and f_s fix the smoothing factor
            montage: Electrode geometry the model is bound to

        Returns:
            A CalibrationModel carrying the montage fingerprint and config

        Raises:
            EmptyInput: If there are no trials
            DimensionMismatch: If the channel count differs from the montage
            TrialTooShort: If a trial is shorter than one estimation window
            DeadChannel: If a channel is flat in some trial
            NonFiniteInput: If a trial holds NaN or infinity
        """
        trial_list = list(trials)
        if not trial_list:
            raise EmptyInput("Calibration needs at least one trial")

        lam = VarianceService.smoothing_factor(config.smoothing_spec)
        window = config.smoothing_spec.window_samples
        n = montage.n_channels
        total = np.zeros(n, dtype=np.float64)
        count = 0
        for number, trial in enumerate(trial_list):
            x = check_signal(trial, n_channels=n, what=f"calibration trial {number}")
            if x.shape[1] < window:
                raise TrialTooShort(
                    f"Trial {number} has {x.shape[1]} samples, the estimation window needs {window:g}"
                )
            flat = np.ptp(x, axis=1) == 0.0
            if np.any(flat):
                raise DeadChannel(
                    f"Channel '{montage.labels[int(np.argmax(flat))]}' is flat in trial {number}"
                )
            centered = x - x.mean(axis=1, keepdims=True)
            total += VarianceService.smooth_variance_bidirectional(centered, lam).sum(axis=1)
            count += x.shape[1]

        mu_s2 = total / count
        if np.any(mu_s2 <= 0):
            raise DeadChannel("A channel has zero reference variance")
        logger.info(
            f"Calibrated {n} channels on {len(trial_list)} trial(s); "
            f"median reference sd {float(np.median(np.sqrt(mu_s2))):.3g} µV"
        )
        return CalibrationModel(mu_s2=mu_s2, montage_fingerprint=montage.fingerprint, config=config)

    @staticmethod
    def artifact_probability(
        s: ArrayLike,
        mu_s: ArrayLike,
        phi: float,
        xi: float
    ) -> NDArray[np.float64]:
        """
        Probability that a channel carries an artifact: Phi((s - phi*mu_s) / (xi*mu_s)).

        Args:
            s: Current standard-deviation estimate (any shape broadcasting with mu_s)
            mu_s: Reference standard deviation per channel
            phi: Threshold multiplier
            xi: Transition width multiplier

        Returns:
            Probabilities in [0, 1], shaped like s
        """
        s = np.asarray(s, dtype=np.float64)
        mu_s = np.asarray(mu_s, dtype=np.float64)
        return np.asarray(ndtr((s - phi * mu_s) / (xi * mu_s)), dtype=np.float64)

    @staticmethod
    def create_corrector(
        model: Optional[CalibrationModel],
        d_matrix: InterpolationMatrix,
        config: Optional[HearConfig] = None,
        f_s: Optional[float] = None
    ) -> CorrectorState:
        """
        Create the state of one correction stream.

        The variance estimate starts at the model's reference so the first
        samples are judged against a settled estimate.

        Args:
            model: Calibration model, or None for a not-yet-calibrated stream
            d_matrix: Interpolation matrix of the same montage
            config: Effective hyper-parameters; defaults to the model's snapshot
            f_s: Sampling rate of the data to correct, checked against the model

        Returns:
            A CorrectorState ready for correct_sample

        Raises:
            FingerprintMismatch: If model and matrix belong to different montages
            SamplingRateMismatch: If f_s differs from the model's sampling rate
            ValidationError: If there is neither a model nor a config
        """
        if model is None:
            if config is None:
                raise ValidationError("An uncalibrated corrector still needs a config")
            lam = VarianceService.smoothing_factor(config.smoothing_spec)
            variance = VarianceService.create_state(d_matrix.n_channels, lam)
            return CorrectorState(variance=variance, d_matrix=d_matrix, config=config)

        _check_binding(model, d_matrix, f_s)
        effective = config or model.config
        lam = VarianceService.smoothing_factor(effective.smoothing_spec)
        variance = VarianceService.create_state(model.mu_s2, lam)
        return CorrectorState(variance=variance, d_matrix=d_matrix, config=effective, model=model)

    @staticmethod
    def correct_sample(state: CorrectorState, x: ArrayLike) -> CorrectedSample:
        """
        Correct one sample vector and advance the variance estimate.

        Args:
            state: The stream's state, updated in place
            x: One value per channel (µV)

        Returns:
            The corrected sample and the artifact probability per channel

        Raises:
            UncalibratedState: If the stream has no calibration model
            DimensionMismatch: If x does not hold one value per channel
            NonFiniteInput: If x holds NaN or infinity
        """
        if state.model is None:
            raise UncalibratedState("Calibrate the stream before correcting samples")
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (state.n_channels,):
            raise DimensionMismatch(
                f"Sample has shape {x.shape}, stream has {state.n_channels} channels"
            )
        if not np.all(np.isfinite(x)):
            raise NonFiniteInput("Sample holds NaN or infinity")

        s2 = _fold(state.variance, x)
        p = ndtr((np.sqrt(s2) - state.threshold_mean) / state.threshold_scale)
        x_corrected = p * state.d_matrix.apply(x) + (1.0 - p) * x
        return CorrectedSample(x_corrected, p)

    @staticmethod
    def correct_recording_online(
        recording: ArrayLike,
        state: CorrectorState,
        segments: Optional[Sequence[TrialSegment]] = None
    ) -> CorrectedSignal:
        """
        Run correct_sample over a channels x samples recording.

        Args:
            recording: channels x samples signal
            state: Stream state, updated in place
            segments: If given, the state is reset at the start of each segment

        Returns:
            The corrected signal and artifact probabilities
        """
        x = check_signal(recording, n_channels=state.n_channels, what="recording")
        starts = {segment.start_sample for segment in segments or ()}
        out = np.empty_like(x)
        p_art = np.empty_like(x)
        for n in range(x.shape[1]):
            if n in starts:
                CorrectionService.reset(state)
            out[:, n], p_art[:, n] = CorrectionService.correct_sample(state, x[:, n])
        return CorrectedSignal(out, p_art)

    @staticmethod
    def correct_offline(
        recording: ArrayLike,
        model: CalibrationModel,
        d_matrix: InterpolationMatrix,
        config: Optional[HearConfig] = None,
        segments: Optional[Sequence[TrialSegment]] = None
    ) -> CorrectedSignal:
        """
        Zero-phase correction of a whole recording.

        The variance is smoothed forward then backward, starting from the
        model's reference, independently inside each segment. Samples no
        segment covers are smoothed as pieces of their own.

        Args:
            recording: channels x samples signal
            model: Calibration model
            d_matrix: Interpolation matrix of the model's montage
            config: Effective hyper-parameters; defaults to the model's snapshot
            segments: Independent pieces (trials); defaults to the whole recording

        Returns:
            The corrected signal and artifact probabilities

        Raises:
            FingerprintMismatch: If model and matrix belong to different montages
            DimensionMismatch, NonFiniteInput, EmptyInput: If the recording is unusable
        """
        _check_binding(model, d_matrix, None)
        effective = config or model.config
        x = check_signal(recording, n_channels=d_matrix.n_channels, what="recording")
        lam = VarianceService.smoothing_factor(effective.smoothing_spec)

        s2 = np.empty_like(x)
        for start, stop in _offline_pieces(segments, x.shape[1]):
            s2[:, start:stop] = VarianceService.smooth_variance_bidirectional(
                x[:, start:stop], lam, init=model.mu_s2
            )

        mu_s = model.mu_s[:, np.newaxis]
        p = CorrectionService.artifact_probability(np.sqrt(s2), mu_s, effective.phi, effective.xi)
        return CorrectedSignal(p * d_matrix.apply(x) + (1.0 - p) * x, p)

    @staticmethod
    def correct_trials(
        trials: NDArray[np.float64],
        model: CalibrationModel,
        d_matrix: InterpolationMatrix,
        mode: str = ONLINE,
        config: Optional[HearConfig] = None
    ) -> CorrectedSignal:
        """
        Correct trials x channels x samples data, each trial independently.

        Online mode resets the stream at every trial start.
        """
        if mode not in MODES:
            raise ValidationError(f"Mode must be one of: {', '.join(MODES)}")
        trials = np.asarray(trials, dtype=np.float64)
        if trials.ndim != 3:
            raise DimensionMismatch(f"Expected trials x channels x samples, got shape {trials.shape}")
        n_trials, n_channels, n_samples = trials.shape
        flat = np.concatenate(list(trials), axis=1) if n_trials else np.empty((n_channels, 0))
        segments = [TrialSegment(i * n_samples, n_samples) for i in range(n_trials)]

        if mode == ONLINE:
            state = CorrectionService.create_corrector(model, d_matrix, config)
            result = CorrectionService.correct_recording_online(flat, state, segments)
        else:
            result = CorrectionService.correct_offline(flat, model, d_matrix, config, segments)

        def unstack(values: NDArray[np.float64]) -> NDArray[np.float64]:
            return values.reshape(n_channels, n_trials, n_samples).transpose(1, 0, 2)

        return CorrectedSignal(unstack(result.x_corrected), unstack(result.p_art))

    @staticmethod
    def uncorrectable_probability(p_art: ArrayLike, d_matrix: InterpolationMatrix) -> NDArray[np.float64]:
        """
        Probability that a channel's neighbors are themselves contaminated: D @ p_art.

        Args:
            p_art: Artifact probabilities, a channel vector or channels x samples

        Returns:
            Values in [0, 1] shaped like p_art
        """
        p = np.asarray(p_art, dtype=np.float64)
        if p.shape[0] != d_matrix.n_channels:
            raise DimensionMismatch(
                f"Probabilities have shape {p.shape}, matrix has {d_matrix.n_channels} channels"
            )
        return np.clip(d_matrix.apply(p), 0.0, 1.0)

    @staticmethod
    def detect_uncorrectable(p_unc: ArrayLike, threshold: float = 0.5) -> NDArray[np.bool_]:
        """Flag channels (or samples) whose uncorrectable probability reaches ``threshold``."""
        if not 0 <= threshold <= 1:
            raise ValidationError(f"threshold must lie in [0, 1], got {threshold}")
        return np.asarray(p_unc, dtype=np.float64) >= threshold

    @staticmethod
    def reset(state: CorrectorState) -> CorrectorState:
        """Return the variance estimate to the model's reference (or zero when uncalibrated)."""
        if state.model is not None:
            state.variance.s2[:] = state.model.mu_s2
        else:
            state.variance.s2[:] = 0.0
        state.variance.samples_seen = 0
        return state

    @staticmethod
    def screen_calibration_trials(
        trials: NDArray[np.float64],
        criteria: Optional[OutlierCriteria] = None
    ) -> tuple[NDArray[np.float64], OutlierReport]:
        """
        Drop outlier trials before calibration.

        Returns:
            The kept trials and the outlier report

        Raises:
            AllTrialsRejected: If every trial is flagged
        """
        from hear.services.evaluation_service import EvaluationService

        trials = np.asarray(trials, dtype=np.float64)
        report = EvaluationService.detect_outlier_trials(trials, criteria or OutlierCriteria())
        flagged = report.flagged
        if len(flagged) == report.n_trials:
            raise AllTrialsRejected(f"All {report.n_trials} calibration trials are outliers")
        if flagged:
            logger.warning(f"Excluding {len(flagged)} of {report.n_trials} calibration trial(s): {flagged}")
        keep = np.setdiff1d(np.arange(report.n_trials), flagged)
        return trials[keep], report


def _check_binding(model: CalibrationModel, d_matrix: InterpolationMatrix, f_s: Optional[float]) -> None:
    if d_matrix.montage_fingerprint and model.montage_fingerprint != d_matrix.montage_fingerprint:
        raise FingerprintMismatch("Calibration model and interpolation matrix belong to different montages")
    if model.n_channels != d_matrix.n_channels:
        raise DimensionMismatch(
            f"Model has {model.n_channels} channels, matrix has {d_matrix.n_channels}"
        )
    if f_s is not None and f_s != model.config.f_s:
        raise SamplingRateMismatch(
            f"Data sampled at {f_s:g} Hz, model calibrated at {model.config.f_s:g} Hz"
        )


def _offline_pieces(segments: Optional[Sequence[TrialSegment]], n_samples: int) -> list[tuple[int, int]]:
    """Consecutive [start, stop) pieces covering every sample, split at each segment start and stop."""
    edges = {0, n_samples}
    for segment in segments or ():
        edges.update((min(segment.start_sample, n_samples), min(segment.stop_sample, n_samples)))
    bounds = sorted(edge for edge in edges if edge >= 0)
    return list(zip(bounds[:-1], bounds[1:]))
