import numpy as np
import pytest
from click.testing import CliRunner

from hear import create_app
from hear.models.config import HearConfig
from hear.models.montage import ElectrodeMontage
from hear.models.simulation import SimulationSpec
from hear.services.correction_service import CorrectionService
from hear.services.montage_service import MontageService
from hear.services.simulation_service import SimulationService


@pytest.fixture(scope='session', autouse=True)
def app():
    return create_app('dev')


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def line_montage():
    return MontageService.load_montage("A 0 0 0\nB 1 0 0\nC 2 0 0\n")


@pytest.fixture
def grid_montage():
    """4 x 4 electrodes, 20 mm apart."""
    labels = [f'E{i}' for i in range(16)]
    positions = [(20.0 * (i % 4), 20.0 * (i // 4), 0.0) for i in range(16)]
    return ElectrodeMontage.from_arrays(labels, np.array(positions))


@pytest.fixture
def make_montage():
    def _make(rng, n):
        labels = [f'C{i}' for i in range(n)]
        return ElectrodeMontage.from_arrays(labels, rng.normal(scale=50.0, size=(n, 3)))
    return _make


@pytest.fixture
def config():
    return HearConfig(f_s=200.0)


@pytest.fixture
def unit_model(grid_montage, config):
    """Model of the grid montage calibrated on unit-variance white noise."""
    trials = np.random.default_rng(7).standard_normal((2, 16, 3000))
    return CorrectionService.calibrate(trials, config, grid_montage)


@pytest.fixture
def grid_matrix(grid_montage):
    return MontageService.build_interpolation_matrix(grid_montage, 4)


@pytest.fixture(scope='session')
def small_spec():
    return SimulationSpec(seed=3, n_subjects=1, n_rest_trials=8, n_reach_trials=12, n_electrodes=16)


@pytest.fixture(scope='session')
def small_dataset(small_spec):
    return SimulationService.simulate_subject(small_spec, 3)
