"""
Service layer for evaluating corrections against simulated ground truth.

Masked SNR, contamination masks, trial averaging with MRCP metrics, and the
automatic outlier-trial criteria (amplitude, log-variance, Gaussian
likelihood, kurtosis).
"""
import logging
import math
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.ndimage import convolve1d
from scipy.signal.windows import bartlett
from scipy.stats import kurtosis

from hear.models.config import HearConfig
from hear.models.evaluation import (
    AMPLITUDE, KURTOSIS, PROBABILITY, VARIANCE,
    ContaminationMask, MetricRecord, OutlierCriteria, OutlierReport
)
from hear.models.simulation import ArtifactEvent, SimulatedDataset
from hear.services.correction_service import OFFLINE, ONLINE, CorrectionService
from hear.services.montage_service import MontageService
from hear.services.simulation_service import SimulationService
from hear.utils.error_handler import EmptyInput, EmptyMask, ShapeMismatch, ValidationError, WindowTooLong
from hear.utils.validators import check_same_shape

logger = logging.getLogger(__name__)

EVALUATION_WINDOW_S = (5.0, 10.0)
MRCP_SMOOTHING_S = 0.1

# Relative spread below which a statistic counts as constant across trials.
_DEGENERATE_SPREAD = 1e-10

VARIANT_LABELS = {ONLINE: 'ohear', OFFLINE: 'hear'}
UNCORRECTED = 'uncorrected'


class EvaluationService:
    """Service class for evaluation operations."""

    @staticmethod
    def snr(clean: ArrayLike, corrected: ArrayLike, mask: ContaminationMask) -> float:
        """
        Masked SNR in dB: 20*log10(||clean[M]|| / ||clean[M] - corrected[M]||).

        Args:
            clean: Ground-truth signal
            corrected: Candidate signal of the same shape
            mask: Elements to evaluate

        Returns:
            SNR in dB; +inf when the candidate equals the clean signal on the mask

        Raises:
            ShapeMismatch: If shapes disagree
            EmptyMask: If the mask selects nothing
        """
        clean = np.asarray(clean, dtype=np.float64)
        corrected = np.asarray(corrected, dtype=np.float64)
        check_same_shape(
            [clean.shape, corrected.shape, mask.shape], ['clean', 'corrected', 'mask'], ShapeMismatch
        )
        if mask.count == 0:
            raise EmptyMask("The mask selects no elements")
        selected = clean[mask.mask]
        error = np.linalg.norm(selected - corrected[mask.mask])
        if error == 0:
            return math.inf
        signal = np.linalg.norm(selected)
        if signal == 0:
            return -math.inf
        return float(20.0 * np.log10(signal / error))

    @staticmethod
    def evaluation_window(
        n_samples: int,
        f_s: float,
        window: tuple[float, float] = EVALUATION_WINDOW_S
    ) -> NDArray[np.bool_]:
        """Samples whose time (s) lies inside ``window``, both ends included."""
        t = np.arange(n_samples) / f_s
        return (t >= window[0]) & (t <= window[1])

    @staticmethod
    def build_contamination_mask(
        events: Iterable[ArtifactEvent],
        shape: tuple[int, int, int],
        f_s: float,
        epsilon: float = 1.0,
        window: tuple[float, float] = EVALUATION_WINDOW_S
    ) -> ContaminationMask:
        """
        Mark elements where some event injected more than ``epsilon`` µV inside ``window``.

        Args:
            events: Ground-truth artifact events
            shape: trials x channels x samples of the dataset
            f_s: Sampling rate
            epsilon: Contamination threshold (µV)

        Returns:
            The ContaminationMask
        """
        n_trials, n_channels, n_samples = shape
        in_window = EvaluationService.evaluation_window(n_samples, f_s, window)
        mask = np.zeros(shape, dtype=bool)
        for event in events:
            if event.trial >= n_trials or event.channel >= n_channels:
                raise ShapeMismatch(f"Event on trial {event.trial}, channel {event.channel} is outside {shape}")
            waveform = SimulationService.event_waveform(event, n_samples, f_s)
            mask[event.trial, event.channel] |= (np.abs(waveform) > epsilon) & in_window
        return ContaminationMask(mask)

    @staticmethod
    def complementary_mask(
        mask: ContaminationMask,
        f_s: float,
        window: tuple[float, float] = EVALUATION_WINDOW_S
    ) -> ContaminationMask:
        """The artifact-free part of the evaluation window."""
        in_window = EvaluationService.evaluation_window(mask.shape[-1], f_s, window)
        return ContaminationMask(in_window & ~mask.mask)

    @staticmethod
    def average_trials(trials: ArrayLike) -> NDArray[np.float64]:
        """Mean over the trial axis of trials x channels x samples data."""
        trials = np.asarray(trials, dtype=np.float64)
        if trials.ndim != 3 or trials.shape[0] == 0:
            raise EmptyInput(f"Expected at least one trial, got shape {trials.shape}")
        return trials.mean(axis=0)

    @staticmethod
    def smooth_triangular(signal: ArrayLike, f_s: float, window: float = MRCP_SMOOTHING_S) -> NDArray[np.float64]:
        """
        Zero-phase smoothing with a unit-area triangular kernel spanning ``window`` seconds.

        Edges are handled by reflection.

        Raises:
            ValidationError: If the window is shorter than one sample
            WindowTooLong: If the kernel is longer than the signal
        """
        signal = np.asarray(signal, dtype=np.float64)
        half = int(round(window * f_s / 2.0))
        if window * f_s < 1:
            raise ValidationError(f"Window of {window} s is shorter than one sample")
        kernel = bartlett(2 * half + 1) if half > 0 else np.ones(1)
        if kernel.size > signal.shape[-1]:
            raise WindowTooLong(
                f"Window of {kernel.size} samples exceeds the signal's {signal.shape[-1]} samples"
            )
        kernel = kernel / kernel.sum()
        return np.asarray(convolve1d(signal, kernel, axis=-1, mode='reflect'), dtype=np.float64)

    @staticmethod
    def detect_outlier_trials(trials: ArrayLike, criteria: Optional[OutlierCriteria] = None) -> OutlierReport:
        """
        Flag abnormal trials.

        A trial is flagged if any sample exceeds the amplitude threshold, or,
        with enough trials, if on any channel the z-score across trials of its
        log-variance, Gaussian negative log-likelihood or excess kurtosis
        exceeds the matching threshold.

        Args:
            trials: trials x channels x samples (µV)
            criteria: Thresholds; defaults to OutlierCriteria()

        Returns:
            OutlierReport with per-criterion flags and skipped criteria
        """
        criteria = criteria or OutlierCriteria()
        trials = np.asarray(trials, dtype=np.float64)
        if trials.ndim != 3 or trials.shape[0] == 0:
            raise EmptyInput(f"Expected at least one trial, got shape {trials.shape}")
        n_trials = trials.shape[0]
        report = OutlierReport(n_trials=n_trials)

        over = np.any(np.abs(trials) > criteria.amplitude_threshold, axis=(1, 2))
        report.flags[AMPLITUDE] = set(np.flatnonzero(over).tolist())

        if n_trials < criteria.min_trials_for_z:
            logger.debug(f"{n_trials} trial(s): only the amplitude criterion applies")
            return report

        variance = trials.var(axis=2)
        statistics = {
            VARIANCE: (np.log(np.maximum(variance, np.finfo(np.float64).tiny)), criteria.z_variance),
            PROBABILITY: (_negative_log_likelihood(trials), criteria.z_probability),
            KURTOSIS: (_excess_kurtosis(trials, variance), criteria.z_kurtosis),
        }
        for name, (values, threshold) in statistics.items():
            z = _channel_zscores(values)
            if z is None:
                logger.warning(f"Skipping the {name} criterion: no spread across trials")
                report.skipped.append(name)
                continue
            report.flags[name] = set(np.flatnonzero(np.any(z > threshold, axis=1)).tolist())
        return report

    @staticmethod
    def outlier_fraction(report: OutlierReport, n_trials: Optional[int] = None) -> float:
        """Share of flagged trials."""
        total = report.n_trials if n_trials is None else n_trials
        return len(report.flagged) / total if total else 0.0

    @staticmethod
    def mrcp_metrics(
        clean_average: ArrayLike,
        candidate_average: ArrayLike,
        f_s: float,
        window: float = MRCP_SMOOTHING_S
    ) -> dict[str, float]:
        """
        Peak (µV) and latency (s) of the smoothed candidate MRCP.

        Both averages are smoothed; the channel is the one where the smoothed
        clean average is most negative.

        Returns:
            Keys ``channel``, ``peak_uv``, ``latency_s``, ``clean_peak_uv`` and
            ``peak_error_uv`` (absolute peak difference)
        """
        clean = EvaluationService.smooth_triangular(clean_average, f_s, window)
        candidate = EvaluationService.smooth_triangular(candidate_average, f_s, window)
        check_same_shape([clean.shape, candidate.shape], ['clean', 'candidate'], ShapeMismatch)
        channel = int(np.argmin(clean.min(axis=1)))
        peak = float(candidate[channel].min())
        clean_peak = float(clean[channel].min())
        return {
            'channel': float(channel),
            'peak_uv': peak,
            'latency_s': float(np.argmin(candidate[channel]) / f_s),
            'clean_peak_uv': clean_peak,
            'peak_error_uv': abs(peak - clean_peak),
        }

    @staticmethod
    def signal_metrics(
        subject: Union[int, str],
        label: str,
        clean: NDArray[np.float64],
        candidate: NDArray[np.float64],
        mask: ContaminationMask,
        f_s: float,
        criteria: Optional[OutlierCriteria] = None
    ) -> list[MetricRecord]:
        """The five metric records of one candidate signal against its clean reference."""
        records: list[MetricRecord] = []
        if mask.count:
            snr_artifact = EvaluationService.snr(clean, candidate, mask)
            records.append(MetricRecord(subject, label, 'snr_artifact_db', snr_artifact))
        else:
            logger.warning(f"{label}: no contaminated elements, skipping snr_artifact_db")
        complement = EvaluationService.complementary_mask(mask, f_s)
        if complement.count:
            snr_clean = EvaluationService.snr(clean, candidate, complement)
            records.append(MetricRecord(subject, label, 'snr_clean_db', snr_clean))
        mrcp = EvaluationService.mrcp_metrics(
            EvaluationService.average_trials(clean), EvaluationService.average_trials(candidate), f_s
        )
        records.append(MetricRecord(subject, label, 'mrcp_peak_uv', mrcp['peak_uv']))
        records.append(MetricRecord(subject, label, 'mrcp_peak_latency_s', mrcp['latency_s']))
        report = EvaluationService.detect_outlier_trials(candidate, criteria)
        records.append(MetricRecord(subject, label, 'outlier_fraction', EvaluationService.outlier_fraction(report)))
        return records

    @staticmethod
    def evaluate_subject(
        dataset: SimulatedDataset,
        config: Optional[HearConfig] = None,
        phis: Sequence[float] = (2.0, 3.0, 4.0),
        modes: Sequence[str] = (OFFLINE, ONLINE),
        epsilon: float = 1.0,
        criteria: Optional[OutlierCriteria] = None,
        screen: bool = True
    ) -> list[MetricRecord]:
        """
        Calibrate on the rest trials and score every (variant, phi) correction.

        The uncorrected reach trials are scored under the label ``uncorrected``;
        corrections under ``<variant>_phi<phi>``, e.g. ``ohear_phi3``.

        Args:
            dataset: One simulated subject
            config: Hyper-parameters (phi is swept); defaults to HearConfig(f_s)
            phis: Threshold multipliers to sweep
            modes: Correction variants, 'offline' (HEAR) and/or 'online' (oHEAR)
            epsilon: Contamination threshold of the mask (µV)
            criteria: Outlier criteria for screening and the outlier metric
            screen: Drop outlier rest trials before calibration

        Returns:
            All metric records of the subject
        """
        config = config or HearConfig(f_s=dataset.f_s)
        d_matrix = MontageService.build_interpolation_matrix(dataset.montage, config.k_neighbors)
        rest = dataset.rest
        if screen:
            rest, _ = CorrectionService.screen_calibration_trials(rest, criteria)
        model = CorrectionService.calibrate(rest, config, dataset.montage)

        mask = EvaluationService.build_contamination_mask(
            dataset.events, dataset.reach.shape, dataset.f_s, epsilon
        )
        clean = dataset.reach_clean
        records = EvaluationService.signal_metrics(
            dataset.subject, UNCORRECTED, clean, dataset.reach, mask, dataset.f_s, criteria
        )
        for mode in modes:
            for phi in phis:
                label = f'{VARIANT_LABELS[mode]}_phi{phi:g}'
                corrected = CorrectionService.correct_trials(
                    dataset.reach, model, d_matrix, mode, config.with_overrides(phi=phi)
                ).x_corrected
                records.extend(EvaluationService.signal_metrics(
                    dataset.subject, label, clean, corrected, mask, dataset.f_s, criteria
                ))
                logger.debug(f"Subject {dataset.subject}: scored {label}")
        logger.info(f"Subject {dataset.subject}: {len(records)} metric record(s)")
        return records


def _channel_zscores(values: NDArray[np.float64]) -> Optional[NDArray[np.float64]]:
    """
    trials x channels statistic -> z-scores across trials per channel.

    Channels whose statistic is constant across trials get z = 0; None if
    every channel is constant.
    """
    values = np.nan_to_num(values, nan=0.0, posinf=0.0, neginf=0.0)
    mean = values.mean(axis=0)
    spread = values.std(axis=0)
    usable = spread > _DEGENERATE_SPREAD * np.maximum(np.abs(mean), 1.0)
    if not np.any(usable):
        return None
    z = np.zeros_like(values)
    z[:, usable] = (values[:, usable] - mean[usable]) / spread[usable]
    return z


def _negative_log_likelihood(trials: NDArray[np.float64]) -> NDArray[np.float64]:
    """Mean negative log-likelihood per trial and channel under a Gaussian fitted per channel on all trials."""
    mu = trials.mean(axis=(0, 2), keepdims=True)
    var = np.maximum(trials.var(axis=(0, 2), keepdims=True), np.finfo(np.float64).tiny)
    nll = 0.5 * np.log(2.0 * np.pi * var) + (trials - mu) ** 2 / (2.0 * var)
    return np.asarray(nll.mean(axis=2), dtype=np.float64)


def _excess_kurtosis(trials: NDArray[np.float64], variance: NDArray[np.float64]) -> NDArray[np.float64]:
    values = np.asarray(kurtosis(trials, axis=2, fisher=True, bias=True), dtype=np.float64)
    return np.where(variance > 0, values, 0.0)
