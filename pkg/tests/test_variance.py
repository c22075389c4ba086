import math

import numpy as np
import pytest

from hear.models.config import SmoothingSpec
from hear.services.variance_service import VarianceService
from hear.utils.error_handler import (
    DimensionMismatch, EmptyInput, InvalidSmoothingSpec, NonFiniteInput
)


def test_smoothing_factor_examples():
    lam = VarianceService.smoothing_factor(SmoothingSpec(0.25, 200.0, 0.9))
    assert lam == pytest.approx(0.954993, abs=1e-6)
    assert lam == pytest.approx(0.1 ** (1 / 50), abs=1e-12)
    assert VarianceService.smoothing_factor(SmoothingSpec(0.005, 200.0, 0.9)) == pytest.approx(0.1, abs=1e-15)
    at_512 = VarianceService.smoothing_factor(SmoothingSpec(0.25, 512.0, 0.9))
    assert at_512 == pytest.approx(0.1 ** (1 / 128), abs=1e-12)


def test_smoothing_spec_validation():
    with pytest.raises(InvalidSmoothingSpec):
        SmoothingSpec(0.001, 200.0)
    with pytest.raises(InvalidSmoothingSpec):
        SmoothingSpec(0.25, 200.0, 1.0)
    with pytest.raises(InvalidSmoothingSpec):
        SmoothingSpec(-1.0, 200.0)


def test_update_variance_examples():
    state = VarianceService.create_state([4.0], 0.5)
    np.testing.assert_array_equal(VarianceService.update_variance(state, [2.0]), [4.0])

    state = VarianceService.create_state([0.0], 0.5)
    result = VarianceService.update_variance(state, [2.0])
    np.testing.assert_array_equal(result, [2.0])
    assert result is state.s2
    assert state.samples_seen == 1


def test_update_variance_rejects_bad_samples():
    state = VarianceService.create_state(2, 0.5)
    with pytest.raises(DimensionMismatch):
        VarianceService.update_variance(state, [1.0, 2.0, 3.0])
    with pytest.raises(NonFiniteInput):
        VarianceService.update_variance(state, [1.0, np.nan])


def test_constant_input_converges_monotonically():
    lam = 0.954993
    c = 3.0
    state = VarianceService.create_state([0.0], lam)
    steps = math.ceil(math.log(1e-6) / math.log(lam))
    previous = 0.0
    for _ in range(steps):
        value = float(VarianceService.update_variance(state, [c])[0])
        assert value >= previous
        previous = value
    assert abs(previous - c ** 2) <= 1e-6 * c ** 2


def test_update_variance_matches_closed_form(rng):
    for _ in range(50):
        n = int(rng.integers(1, 65))
        lam = float(rng.uniform(0.05, 0.99))
        s0 = float(rng.uniform(0, 5))
        x = rng.normal(scale=3.0, size=n)
        state = VarianceService.create_state([s0], lam)
        for value in x:
            VarianceService.update_variance(state, [value])
        expected = lam ** n * s0 + (1 - lam) * sum(lam ** (n - 1 - m) * x[m] ** 2 for m in range(n))
        assert state.s2[0] == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_bidirectional_constant_signal_is_fixed_point():
    x = np.full((3, 100), 2.5)
    out = VarianceService.smooth_variance_bidirectional(x, 0.9, init=2.5 ** 2)
    np.testing.assert_allclose(out, 2.5 ** 2, atol=1e-9)


def test_bidirectional_single_sample():
    lam, init, x = 0.8, 4.0, 3.0
    out = VarianceService.smooth_variance_bidirectional(np.array([x]), lam, init=init)
    forward = lam * init + (1 - lam) * x ** 2
    backward = lam * init + (1 - lam) * forward
    assert out[0] == pytest.approx(backward, rel=1e-14)


def test_bidirectional_reversal_symmetry(rng):
    for _ in range(30):
        x = rng.normal(size=int(rng.integers(1, 33)))
        lam = float(rng.uniform(0.1, 0.99))
        reversed_out = VarianceService.smooth_variance_bidirectional(x[::-1], lam)
        swapped = VarianceService.smooth_variance_bidirectional(x, lam, backward_first=True)
        np.testing.assert_allclose(reversed_out, swapped[::-1], rtol=1e-12)


def test_bidirectional_non_negative_and_scale_equivariant(rng):
    x = rng.normal(size=(4, 500))
    out = VarianceService.smooth_variance_bidirectional(x, 0.95)
    assert np.all(out >= 0)
    assert out.shape == x.shape
    scaled = VarianceService.smooth_variance_bidirectional(3.0 * x, 0.95)
    np.testing.assert_allclose(scaled, 9.0 * out, rtol=1e-12)


def test_bidirectional_rejects_empty_input():
    with pytest.raises(EmptyInput):
        VarianceService.smooth_variance_bidirectional(np.empty((2, 0)), 0.9)
    with pytest.raises(InvalidSmoothingSpec):
        VarianceService.smooth_variance_bidirectional(np.ones(5), 1.0)


def test_dc_group_delay_within_latency_bound():
    lam = VarianceService.smoothing_factor(SmoothingSpec(0.25, 200.0, 0.9))
    delay = VarianceService.dc_group_delay(lam, 200.0)
    assert 0.095 <= delay <= 0.110
    assert VarianceService.group_delay(lam, 200.0, [0.0])[0] == pytest.approx(delay, rel=1e-6)


def test_group_delay_declines_with_frequency():
    delays = VarianceService.group_delay(0.954993, 200.0, [0.1, 1.0, 5.0, 20.0, 80.0])
    assert np.all(np.diff(delays) < 0)
