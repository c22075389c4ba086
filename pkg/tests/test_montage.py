import logging

import numpy as np
import pytest

from hear.models.montage import ElectrodeMontage
from hear.services.montage_service import MontageService, mean_neighbor_distance
from hear.utils.error_handler import (
    CoincidentElectrodes, DuplicateLabel, MontageParseError, NeighborCountOutOfRange,
    NonFiniteCoordinate, TooFewChannels
)


def test_load_montage_keeps_file_order(line_montage):
    assert line_montage.labels == ('A', 'B', 'C')
    np.testing.assert_array_equal(line_montage.positions[:, 0], [0.0, 1.0, 2.0])


def test_load_montage_skips_comments_and_blank_lines():
    montage = MontageService.load_montage("# header\n\nA 0 0 0  # front\nB 1 0 0\n")
    assert montage.labels == ('A', 'B')


def test_load_montage_rejects_bad_lines():
    with pytest.raises(MontageParseError):
        MontageService.load_montage("A 0 0\nB 1 0 0\n")
    with pytest.raises(MontageParseError):
        MontageService.load_montage("A 0 0 x\nB 1 0 0\n")


def test_montage_invariants():
    with pytest.raises(DuplicateLabel):
        MontageService.load_montage("A 0 0 0\nA 1 0 0\n")
    with pytest.raises(CoincidentElectrodes):
        MontageService.load_montage("A 0 0 0\nB 0 0 0\nC 1 0 0\n")
    with pytest.raises(NonFiniteCoordinate):
        MontageService.load_montage("A 0 0 0\nB nan 0 0\n")
    with pytest.raises(TooFewChannels):
        MontageService.load_montage("A 0 0 0\n")


def test_labels_are_case_sensitive():
    montage = MontageService.load_montage("a 0 0 0\nA 1 0 0\n")
    assert montage.n_channels == 2


def test_nearest_neighbors_breaks_ties_by_index(line_montage):
    neighbors = MontageService.nearest_neighbors(line_montage, 1, 2)
    assert [(n.index, n.distance) for n in neighbors] == [(0, 1.0), (2, 1.0)]

    neighbors = MontageService.nearest_neighbors(line_montage, 0, 1)
    assert [(n.index, n.distance) for n in neighbors] == [(1, 1.0)]


def test_nearest_neighbors_rejects_k_out_of_range(line_montage):
    with pytest.raises(NeighborCountOutOfRange):
        MontageService.nearest_neighbors(line_montage, 0, 3)
    with pytest.raises(NeighborCountOutOfRange):
        MontageService.nearest_neighbors(line_montage, 0, 0)


def test_interpolation_matrix_on_a_line(line_montage):
    d = MontageService.build_interpolation_matrix(line_montage, 2)
    np.testing.assert_allclose(d.weights[1], [0.5, 0.0, 0.5])
    np.testing.assert_allclose(d.weights[0], [0.0, 2 / 3, 1 / 3])
    assert d.montage_fingerprint == line_montage.fingerprint


def test_interpolation_matrix_symmetric_ties(grid_montage):
    d = MontageService.build_interpolation_matrix(grid_montage, 4)
    # interior electrode 5 has exactly four neighbors at 20 mm
    assert sorted(d.neighbor_index[5].tolist()) == [1, 4, 6, 9]
    np.testing.assert_allclose(d.neighbor_weight[5], 0.25)
    again = MontageService.build_interpolation_matrix(grid_montage, 4)
    np.testing.assert_array_equal(d.weights, again.weights)


def test_interpolation_matrix_small_montage(line_montage):
    with pytest.raises(NeighborCountOutOfRange):
        MontageService.build_interpolation_matrix(line_montage, 4)
    d = MontageService.build_interpolation_matrix(line_montage, 4, allow_small_montage=True)
    assert d.neighbor_count == 2


def test_interpolation_matrix_properties_on_random_montages(rng, make_montage):
    for _ in range(100):
        n = int(rng.integers(2, 40))
        k = int(rng.integers(1, n))
        d = MontageService.build_interpolation_matrix(make_montage(rng, n), k)
        w = d.weights
        assert np.all(np.diag(w) == 0.0)
        assert np.all(w >= 0)
        assert np.all(np.count_nonzero(w, axis=1) <= k)
        np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-9)


def test_interpolation_matrix_is_permutation_equivariant(rng, make_montage):
    for _ in range(20):
        montage = make_montage(rng, 12)
        order = rng.permutation(12)
        permuted = ElectrodeMontage(tuple(montage.electrodes[i] for i in order))
        d = MontageService.build_interpolation_matrix(montage, 4).weights
        d_permuted = MontageService.build_interpolation_matrix(permuted, 4).weights
        np.testing.assert_allclose(d_permuted, d[np.ix_(order, order)], rtol=0, atol=1e-15)


def test_sparse_apply_matches_dense_product(rng, grid_matrix):
    x = rng.normal(size=16)
    np.testing.assert_allclose(grid_matrix.apply(x), grid_matrix.weights @ x, atol=1e-12)
    signal = rng.normal(size=(16, 50))
    np.testing.assert_allclose(grid_matrix.apply(signal), grid_matrix.weights @ signal, atol=1e-12)


def test_fingerprint_depends_on_order(line_montage):
    reordered = MontageService.load_montage("B 1 0 0\nA 0 0 0\nC 2 0 0\n")
    same = MontageService.load_montage("A 0 0 0\nB 1 0 0\nC 2 0 0\n")
    assert MontageService.fingerprint(same) == line_montage.fingerprint
    assert reordered.fingerprint != line_montage.fingerprint


def test_save_montage_round_trip(tmp_path, rng, make_montage):
    montage = make_montage(rng, 10)
    path = tmp_path / 'montage.txt'
    MontageService.save_montage(montage, str(path))
    loaded = MontageService.load_montage_file(str(path))
    assert loaded == montage
    assert loaded.fingerprint == montage.fingerprint


def test_standard_montage():
    montage = MontageService.standard_montage(64, 120.0)
    assert montage.n_channels == 64
    assert 'Cz' in montage.labels
    np.testing.assert_allclose(np.linalg.norm(montage.positions, axis=1), 120.0)
    assert 15.0 < mean_neighbor_distance(montage) < 60.0

    subset = MontageService.standard_montage(16, 120.0)
    assert subset.n_channels == 16


def test_standard_montage_logs_its_spacing(caplog, monkeypatch):
    monkeypatch.setattr(logging.getLogger('hear'), 'propagate', True)
    with caplog.at_level(logging.INFO, logger='hear.services.montage_service'):
        montage = MontageService.standard_montage(32, 120.0)
    expected = f"mean neighbor spacing {mean_neighbor_distance(montage):.1f} mm"
    assert any(expected in record.getMessage() for record in caplog.records)
