"""
End-to-end checks on a seeded five-subject simulated study.

These take a few minutes; deselect them with ``pytest -m "not slow"``.
"""
import numpy as np
import pytest

from hear.models.config import HearConfig
from hear.models.simulation import SimulationSpec
from hear.services.correction_service import OFFLINE, ONLINE, CorrectionService
from hear.services.evaluation_service import EvaluationService
from hear.services.montage_service import MontageService
from hear.services.simulation_service import SimulationService

pytestmark = pytest.mark.slow


@pytest.fixture(scope='module')
def datasets():
    return SimulationService.simulate(SimulationSpec(seed=2024, n_subjects=5, n_reach_trials=60), n_jobs=2)


@pytest.fixture(scope='module')
def records(datasets):
    config = HearConfig(f_s=200.0, phi=3.0, xi=1.0, t_est=0.25, k_neighbors=4)
    return [
        record
        for dataset in datasets
        for record in EvaluationService.evaluate_subject(dataset, config, phis=(3.0,), modes=(OFFLINE, ONLINE))
    ]


def metric(records, label, name):
    """Per-subject values of one metric, in subject order."""
    return np.array([
        record.value for record in sorted(records, key=lambda r: r.subject)
        if record.config == label and record.metric == name
    ])


def test_online_correction_improves_artifact_snr(records):
    uncorrected = metric(records, 'uncorrected', 'snr_artifact_db')
    corrected = metric(records, 'ohear_phi3', 'snr_artifact_db')
    assert len(corrected) == 5
    assert np.median(corrected - uncorrected) >= 20.0


def test_online_correction_barely_touches_clean_data(records):
    uncorrected = metric(records, 'uncorrected', 'snr_clean_db')
    corrected = metric(records, 'ohear_phi3', 'snr_clean_db')
    assert np.median(uncorrected - corrected) <= 3.0


@pytest.mark.parametrize('mode', [OFFLINE, ONLINE])
def test_mrcp_peak_is_preserved(datasets, mode):
    config = HearConfig(f_s=200.0)
    for dataset in datasets:
        d_matrix = MontageService.build_interpolation_matrix(dataset.montage, config.k_neighbors)
        rest, _ = CorrectionService.screen_calibration_trials(dataset.rest)
        model = CorrectionService.calibrate(rest, config, dataset.montage)
        corrected = CorrectionService.correct_trials(dataset.reach, model, d_matrix, mode).x_corrected
        mrcp = EvaluationService.mrcp_metrics(
            EvaluationService.average_trials(dataset.reach_clean),
            EvaluationService.average_trials(corrected),
            dataset.f_s,
        )
        assert mrcp['peak_error_uv'] <= 0.5


def test_online_correction_reduces_outlier_trials(records):
    uncorrected = metric(records, 'uncorrected', 'outlier_fraction')
    corrected = metric(records, 'ohear_phi3', 'outlier_fraction')
    assert np.median(uncorrected) >= 0.15
    assert np.median(corrected) <= 0.6 * np.median(uncorrected)
