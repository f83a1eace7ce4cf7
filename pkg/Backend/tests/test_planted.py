"""End-to-end recovery of planted structure."""
import time

import pytest

from builders import attribute_classes, connectivity_blocks, regular_dataset
from clustering import agglomerative, spectral
from dissimilarity import compute_components, normalize_components, pairwise_matrix
from evaluation import ari, tune_weights
from models import DissimilarityConfig, SpectralParams


@pytest.fixture(scope="module")
def attribute_dataset():
    return attribute_classes(n=100, seed=0)


def test_attribute_classes_recovered_by_agglomerative(attribute_dataset):
    matrix, _ = pairwise_matrix(attribute_dataset, DissimilarityConfig(weights=(1, 0, 0, 0, 0)))
    assert ari(agglomerative(matrix, 2), attribute_dataset.labels) == 1.0


@pytest.mark.parametrize("seed", range(10))
def test_connectivity_blocks_recovered_by_spectral(seed):
    dataset = connectivity_blocks(seed=seed)
    matrix, _ = pairwise_matrix(dataset, DissimilarityConfig(weights=(0, 0, 0, 0.5, 0.5)))
    assignment = spectral(matrix, 2, SpectralParams(seed=seed))
    assert ari(assignment, dataset.labels) >= 0.9


def test_tuning_prefers_the_informative_component(attribute_dataset):
    components = normalize_components(compute_components(attribute_dataset, DissimilarityConfig()))
    best, report = tune_weights(attribute_dataset, folds=10, k=5, seed=0, components=components)
    assert report.value == 100.0
    assert all(score == 100.0 for score in report.fold_values)
    assert best[0] >= 0.6


def _best_time(dataset, repeats=3):
    cfg = DissimilarityConfig()
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        pairwise_matrix(dataset, cfg, workers=1)
        times.append(time.perf_counter() - start)
    return min(times)


@pytest.mark.slow
def test_pair_loop_scales_quadratically():
    small = _best_time(regular_dataset(150, 5, seed=1))
    large = _best_time(regular_dataset(300, 5, seed=1))
    assert 2.0 <= large / small <= 8.0


@pytest.mark.slow
def test_pair_loop_finishes_within_bound():
    assert _best_time(regular_dataset(300, 5, seed=2), repeats=1) < 10.0
