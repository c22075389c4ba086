import time

import numpy as np
import pytest
from scipy.signal.windows import hann

from hear.models.calibration import CalibrationModel
from hear.models.config import HearConfig
from hear.models.montage import ElectrodeMontage
from hear.models.recording import TrialSegment
from hear.services.correction_service import OFFLINE, ONLINE, CorrectionService
from hear.services.montage_service import MontageService
from hear.services.variance_service import VarianceService
from hear.utils.error_handler import (
    AllTrialsRejected, DeadChannel, DimensionMismatch, EmptyInput, FingerprintMismatch,
    NonFiniteInput, SamplingRateMismatch, TrialTooShort, UncalibratedState
)


@pytest.fixture
def pair():
    """Two electrodes, each the other's only neighbor."""
    montage = MontageService.load_montage("A 0 0 0\nB 1 0 0\n")
    config = HearConfig(f_s=200.0, phi=2.0, xi=0.01, k_neighbors=1)
    d_matrix = MontageService.build_interpolation_matrix(montage, 1)
    model = CalibrationModel(np.array([25.0, 1e6]), montage.fingerprint, config)
    return model, d_matrix


def test_artifact_probability_examples():
    p = CorrectionService.artifact_probability([3.0, 4.0, 0.0], [1.0, 1.0, 1.0], 3.0, 1.0)
    np.testing.assert_allclose(p, [0.5, 0.841345, 0.001350], atol=1e-6)


def test_artifact_probability_anchor(rng):
    mu_s = rng.uniform(0.1, 10.0, size=200)
    phi = rng.uniform(0.5, 5.0, size=200)
    xi = rng.uniform(0.01, 2.0, size=200)
    p = CorrectionService.artifact_probability(phi * mu_s, mu_s, phi, xi)
    np.testing.assert_allclose(p, 0.5, atol=1e-12)


def test_artifact_probability_is_monotone():
    s = np.linspace(0.0, 10.0, 101)
    p = CorrectionService.artifact_probability(s, 1.0, 3.0, 1.0)
    assert np.all(np.diff(p) >= 0)


def test_lower_phi_never_lowers_the_probability(rng):
    for _ in range(1000):
        s = rng.uniform(0.0, 20.0, size=16)
        mu_s = rng.uniform(0.1, 10.0, size=16)
        xi = rng.uniform(0.01, 2.0)
        high = rng.uniform(0.5, 6.0)
        low = high * rng.uniform(0.0, 1.0)
        p_high = CorrectionService.artifact_probability(s, mu_s, high, xi)
        p_low = CorrectionService.artifact_probability(s, mu_s, low, xi)
        assert np.all(p_low >= p_high)


def test_correct_sample_two_channel_example(pair):
    model, d_matrix = pair
    state = CorrectionService.create_corrector(model, d_matrix)
    state.variance.s2[:] = [100.0, 4.0]
    x_corrected, p_art = CorrectionService.correct_sample(state, [10.0, 2.0])
    np.testing.assert_allclose(state.variance.s2, [100.0, 4.0])
    np.testing.assert_allclose(p_art, [0.5, 0.0], atol=1e-12)
    np.testing.assert_allclose(x_corrected, [6.0, 2.0], atol=1e-12)


def test_correct_sample_is_exact_at_zero_and_one(unit_model, grid_matrix, rng):
    x = rng.normal(size=16)

    untouched = CorrectionService.create_corrector(unit_model, grid_matrix, HearConfig(f_s=200.0, phi=1e6))
    x_corrected, p_art = CorrectionService.correct_sample(untouched, x)
    assert np.all(p_art == 0.0)
    np.testing.assert_array_equal(x_corrected, x)

    replaced = CorrectionService.create_corrector(
        unit_model, grid_matrix, HearConfig(f_s=200.0, phi=1e-3, xi=1e-3)
    )
    x_corrected, p_art = CorrectionService.correct_sample(replaced, x)
    assert np.all(p_art == 1.0)
    np.testing.assert_array_equal(x_corrected, grid_matrix.apply(x))


def test_correction_is_a_convex_blend(unit_model, grid_matrix, rng):
    state = CorrectionService.create_corrector(unit_model, grid_matrix)
    for _ in range(10_000):
        state.variance.s2[:] = rng.exponential(scale=rng.choice([0.5, 20.0]), size=16)
        x = rng.normal(scale=5.0, size=16)
        x_corrected, p_art = CorrectionService.correct_sample(state, x)
        interpolated = grid_matrix.apply(x)
        assert np.all((p_art >= 0) & (p_art <= 1))
        low = np.minimum(x, interpolated) - 1e-12
        high = np.maximum(x, interpolated) + 1e-12
        assert np.all((x_corrected >= low) & (x_corrected <= high))


def test_correct_sample_rejects_bad_input(unit_model, grid_matrix, config):
    state = CorrectionService.create_corrector(unit_model, grid_matrix)
    with pytest.raises(DimensionMismatch):
        CorrectionService.correct_sample(state, np.zeros(15))
    with pytest.raises(NonFiniteInput):
        CorrectionService.correct_sample(state, np.full(16, np.inf))
    uncalibrated = CorrectionService.create_corrector(None, grid_matrix, config)
    with pytest.raises(UncalibratedState):
        CorrectionService.correct_sample(uncalibrated, np.zeros(16))


def test_first_sample_after_reset_is_judged_against_reference(unit_model, grid_matrix):
    state = CorrectionService.create_corrector(unit_model, grid_matrix)
    _, p_art = CorrectionService.correct_sample(state, np.zeros(16))
    lam = state.variance.lam
    expected = CorrectionService.artifact_probability(np.sqrt(lam) * unit_model.mu_s, unit_model.mu_s, 3.0, 1.0)
    np.testing.assert_allclose(p_art, expected, rtol=1e-12)


def test_large_pop_is_detected_on_its_first_sample(unit_model, grid_matrix):
    state = CorrectionService.create_corrector(unit_model, grid_matrix)
    x = np.zeros(16)
    x[5] = 100.0
    x_corrected, p_art = CorrectionService.correct_sample(state, x)
    assert p_art[5] > 0.999999
    assert abs(x_corrected[5]) < 1e-3


def test_calibrate_on_white_noise(unit_model, grid_montage):
    assert unit_model.n_channels == 16
    assert unit_model.montage_fingerprint == grid_montage.fingerprint
    np.testing.assert_allclose(unit_model.mu_s2, 1.0, rtol=0.1)


def test_calibrate_scales_with_the_data(grid_montage, config):
    trials = np.random.default_rng(8).standard_normal((2, 16, 1000))
    base = CorrectionService.calibrate(trials, config, grid_montage)
    scaled = CorrectionService.calibrate(4.0 * trials + 7.0, config, grid_montage)
    np.testing.assert_allclose(scaled.mu_s2, 16.0 * base.mu_s2, rtol=1e-9)


def test_calibrate_errors(grid_montage, config, rng):
    with pytest.raises(EmptyInput):
        CorrectionService.calibrate([], config, grid_montage)
    with pytest.raises(TrialTooShort):
        CorrectionService.calibrate(rng.normal(size=(1, 16, 10)), config, grid_montage)
    with pytest.raises(DimensionMismatch):
        CorrectionService.calibrate(rng.normal(size=(1, 15, 500)), config, grid_montage)
    trials = rng.normal(size=(2, 16, 500))
    trials[1, 3] = 4.0
    with pytest.raises(DeadChannel):
        CorrectionService.calibrate(trials, config, grid_montage)
    trials = rng.normal(size=(2, 16, 500))
    trials[0, 3] = 0.1
    with pytest.raises(DeadChannel, match="E3"):
        CorrectionService.calibrate(trials, config, grid_montage)
    trials = rng.normal(size=(1, 16, 500))
    trials[0, 0, 10] = np.nan
    with pytest.raises(NonFiniteInput):
        CorrectionService.calibrate(trials, config, grid_montage)


def test_uncorrectable_probability(line_montage):
    d_matrix = MontageService.build_interpolation_matrix(line_montage, 2)
    p_unc = CorrectionService.uncorrectable_probability([1.0, 0.0, 0.0], d_matrix)
    np.testing.assert_allclose(p_unc, [0.0, 0.5, 1 / 3])
    np.testing.assert_array_equal(CorrectionService.detect_uncorrectable(p_unc), [False, True, False])
    assert CorrectionService.uncorrectable_probability(np.ones((3, 4)), d_matrix).shape == (3, 4)
    with pytest.raises(DimensionMismatch):
        CorrectionService.uncorrectable_probability([1.0, 0.0], d_matrix)


def test_reset_is_idempotent_and_replays(unit_model, grid_matrix, rng):
    samples = rng.normal(scale=3.0, size=(40, 16))
    state = CorrectionService.create_corrector(unit_model, grid_matrix)
    first = [CorrectionService.correct_sample(state, x).x_corrected for x in samples]

    CorrectionService.reset(CorrectionService.reset(state))
    np.testing.assert_array_equal(state.variance.s2, unit_model.mu_s2)
    assert state.variance.samples_seen == 0
    second = [CorrectionService.correct_sample(state, x).x_corrected for x in samples]
    np.testing.assert_array_equal(np.array(first), np.array(second))


def test_binding_mismatches(unit_model, grid_matrix, rng, make_montage):
    other = MontageService.build_interpolation_matrix(make_montage(rng, 16), 4)
    with pytest.raises(FingerprintMismatch):
        CorrectionService.create_corrector(unit_model, other)
    with pytest.raises(FingerprintMismatch):
        CorrectionService.correct_offline(np.zeros((16, 100)), unit_model, other)
    with pytest.raises(SamplingRateMismatch):
        CorrectionService.create_corrector(unit_model, grid_matrix, f_s=250.0)


def test_offline_leaves_clean_data_nearly_untouched(unit_model, grid_matrix):
    x = np.random.default_rng(21).standard_normal((16, 2000))
    result = CorrectionService.correct_offline(x, unit_model, grid_matrix)
    assert result.p_art.mean() < 0.05
    assert result.x_corrected.shape == x.shape


def test_offline_removes_a_pop(unit_model, grid_matrix):
    clean = np.random.default_rng(22).standard_normal((16, 2000))
    n = np.arange(2000)
    pop = np.where(n >= 1000, 200.0 * np.exp(-(n - 1000) / 200.0), 0.0)
    contaminated = clean.copy()
    contaminated[5] += pop

    result = CorrectionService.correct_offline(contaminated, unit_model, grid_matrix)
    assert np.all(result.p_art[5, 1000:1400] > 0.99)
    residual = result.x_corrected[5, 1000:1400] - clean[5, 1000:1400]
    assert np.sqrt(np.mean(residual ** 2)) < 0.1 * np.sqrt(np.mean(pop[1000:1400] ** 2))


def test_offline_response_is_more_symmetric_than_online(unit_model, grid_matrix):
    length = 2001
    burst = 50.0 * hann(length) * np.cos(2 * np.pi * 10.0 * (np.arange(length) - length // 2) / 200.0)
    x = np.zeros((16, 3 * length))
    x[5, length:2 * length] = burst

    offline = CorrectionService.correct_offline(x, unit_model, grid_matrix).p_art[5]
    state = CorrectionService.create_corrector(unit_model, grid_matrix)
    online = CorrectionService.correct_recording_online(x, state).p_art[5]

    def asymmetry(p):
        return np.linalg.norm(p - p[::-1])

    assert asymmetry(offline) < asymmetry(online)


def test_online_recording_resets_at_segment_starts(unit_model, grid_matrix, rng):
    x = rng.normal(scale=2.0, size=(16, 300))
    segments = [TrialSegment(0, 150), TrialSegment(150, 150)]
    state = CorrectionService.create_corrector(unit_model, grid_matrix)
    joined = CorrectionService.correct_recording_online(x, state, segments)

    fresh = CorrectionService.create_corrector(unit_model, grid_matrix)
    second = CorrectionService.correct_recording_online(x[:, 150:], fresh)
    np.testing.assert_array_equal(joined.x_corrected[:, 150:], second.x_corrected)


def test_offline_smooths_uncovered_samples_on_their_own(unit_model, grid_matrix):
    x = np.zeros((16, 400))
    with_gap = CorrectionService.correct_offline(x, unit_model, grid_matrix, segments=[TrialSegment(0, 200)])
    tiled = CorrectionService.correct_offline(
        x, unit_model, grid_matrix, segments=[TrialSegment(0, 200), TrialSegment(200, 200)]
    )
    np.testing.assert_array_equal(with_gap.p_art, tiled.p_art)
    assert np.all(with_gap.p_art[:, 200:] < 0.5)
    again = CorrectionService.correct_offline(x, unit_model, grid_matrix, segments=[TrialSegment(100, 100)])
    np.testing.assert_array_equal(again.p_art[:, 200:], tiled.p_art[:, 200:])


@pytest.mark.parametrize('mode', [ONLINE, OFFLINE])
def test_correct_trials_treats_trials_independently(unit_model, grid_matrix, rng, mode):
    trials = rng.normal(scale=2.0, size=(3, 16, 200))
    result = CorrectionService.correct_trials(trials, unit_model, grid_matrix, mode)
    assert result.x_corrected.shape == trials.shape
    alone = CorrectionService.correct_trials(trials[2:], unit_model, grid_matrix, mode)
    np.testing.assert_allclose(result.x_corrected[2], alone.x_corrected[0], atol=1e-12)
    np.testing.assert_allclose(result.p_art[2], alone.p_art[0], atol=1e-12)


def test_screen_calibration_trials(rng):
    trials = rng.normal(size=(10, 4, 300))
    trials[3, 1, 50] = 500.0
    kept, report = CorrectionService.screen_calibration_trials(trials)
    assert report.flagged == [3]
    assert kept.shape == (9, 4, 300)

    with pytest.raises(AllTrialsRejected):
        CorrectionService.screen_calibration_trials(np.full((3, 4, 300), 500.0))


@pytest.mark.slow
def test_online_cost_is_linear_in_channels():
    n_samples = 1_000_000
    chunk = 10_000

    def seconds_per_sample(n_channels):
        generator = np.random.default_rng(n_channels)
        montage = ElectrodeMontage.from_arrays(
            [f'C{i}' for i in range(n_channels)], generator.normal(scale=50.0, size=(n_channels, 3))
        )
        config = HearConfig(f_s=200.0)
        model = CalibrationModel(np.ones(n_channels), montage.fingerprint, config)
        state = CorrectionService.create_corrector(
            model, MontageService.build_interpolation_matrix(montage, 4)
        )
        elapsed = 0.0
        for _ in range(n_samples // chunk):
            x = generator.normal(size=(chunk, n_channels))
            start = time.perf_counter()
            for sample in x:
                CorrectionService.correct_sample(state, sample)
            elapsed += time.perf_counter() - start
        return elapsed / n_samples

    per_sample_64 = seconds_per_sample(64)
    # ten times real time at 200 Hz
    assert per_sample_64 <= 1 / (10 * 200.0)
    assert seconds_per_sample(128) <= 2.5 * per_sample_64


def test_variance_state_tracks_model_reference(unit_model, grid_matrix):
    state = CorrectionService.create_corrector(unit_model, grid_matrix)
    np.testing.assert_array_equal(state.variance.s2, unit_model.mu_s2)
    assert state.variance.lam == VarianceService.smoothing_factor(unit_model.config.smoothing_spec)
