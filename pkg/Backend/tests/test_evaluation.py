import logging
import random
from collections import Counter
from itertools import combinations
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from builders import attribute_classes
from core.errors import BadGrid, BadK, EmptyTrain, IdMismatch, MissingLabels
from dissimilarity import compute_components, normalize_components
from evaluation import (
    ari,
    component_sweep,
    cross_validate,
    default_grid,
    knn_classify,
    stratified_folds,
    tune_weights,
)
from models import ClusterAssignment, DissimilarityConfig, DistanceMatrix

partitions = st.lists(st.integers(min_value=0, max_value=3), min_size=2, max_size=30)


def label_map(labels):
    return {f"i{n:02d}": label for n, label in enumerate(labels)}


def pairs_together_in_both(a, b):
    return sum(1 for x, y in combinations(list(a), 2) if a[x] == a[y] and b[x] == b[y])


# -------------------------
# ARI
# -------------------------
def test_ari_identical_partitions():
    a = label_map([0, 0, 1, 1, 2])
    assert ari(a, a) == 1.0


def test_ari_crossing_partition():
    assert ari(label_map([1, 1, 2, 2]), label_map([1, 2, 1, 2])) == pytest.approx(-0.5, abs=1e-12)


def test_ari_accepts_assignments():
    assignment = ClusterAssignment(ids=["a", "b", "c"], labels=[0, 0, 1], k=2)
    assert ari(assignment, {"a": "x", "b": "x", "c": "y"}) == 1.0


def test_ari_degenerate_partitions_score_one():
    assert ari(label_map([0, 0, 0]), label_map([5, 5, 5])) == 1.0


def test_ari_id_mismatch():
    with pytest.raises(IdMismatch):
        ari({"a": 0, "b": 0}, {"a": 0, "c": 0})


@given(partitions, partitions)
def test_ari_symmetric_and_relabel_invariant(xs, ys):
    n = min(len(xs), len(ys))
    a, b = label_map(xs[:n]), label_map(ys[:n])
    assert ari(a, b) == pytest.approx(ari(b, a), abs=1e-12)
    relabeled = {vid: f"c{label * 7 + 1}" for vid, label in a.items()}
    assert ari(relabeled, b) == pytest.approx(ari(a, b), abs=1e-12)
    assert -1.0 - 1e-12 <= ari(a, b) <= 1.0 + 1e-12


def test_contingency_counts_match_pair_enumeration():
    rng = random.Random(3)
    a = label_map([rng.randint(0, 2) for _ in range(12)])
    b = label_map([rng.randint(0, 2) for _ in range(12)])
    index = sum(comb(c, 2) for c in Counter((a[i], b[i]) for i in a).values())
    assert index == pairs_together_in_both(a, b)


def test_ari_of_random_labels_is_near_zero():
    rng = np.random.default_rng(0)
    truth = label_map(list(rng.integers(0, 3, size=60)))
    scores = []
    for _ in range(1000):
        shuffled = rng.permutation(list(truth.values()))
        scores.append(ari(truth, label_map(list(shuffled))))
    assert abs(np.mean(scores)) < 0.02


# -------------------------
# kNN
# -------------------------
def line_matrix(positions):
    ids = [f"p{i}" for i in range(len(positions))]
    x = np.array(positions, dtype=float)
    return DistanceMatrix(ids=ids, values=np.abs(x[:, None] - x[None, :]))


def test_knn_nearest_label():
    m = line_matrix([0.0, 0.0, 5.0])
    assert knn_classify(m, {"p1": "a", "p2": "b"}, ["p0"], k=1) == {"p0": "a"}


def test_knn_majority_vote():
    m = line_matrix([0.0, 1.0, 2.0, 3.0, 10.0])
    train = {"p1": "a", "p2": "a", "p3": "b", "p4": "b"}
    assert knn_classify(m, train, ["p0"], k=3) == {"p0": "a"}


def test_knn_vote_tie_goes_to_nearest_class():
    m = line_matrix([0.0, 2.0, 1.0, 3.0, 4.0])
    train = {"p1": "a", "p2": "b", "p3": "a", "p4": "b"}
    assert knn_classify(m, train, ["p0"], k=4) == {"p0": "b"}


def test_knn_distance_tie_goes_to_first_id():
    m = line_matrix([0.0, 1.0, -1.0])
    assert knn_classify(m, {"p2": "late", "p1": "early"}, ["p0"], k=1) == {"p0": "early"}


def test_knn_distance_tie_follows_id_order_not_position():
    m = DistanceMatrix(ids=["q", "z", "a"], values=np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 2.0], [1.0, 2.0, 0.0]]))
    assert knn_classify(m, {"z": "late", "a": "early"}, ["q"], k=1) == {"q": "early"}


def test_knn_excludes_self():
    m = line_matrix([0.0, 0.5, 9.0, 9.5])
    train = {"p0": "a", "p1": "a", "p2": "b", "p3": "b"}
    assert knn_classify(m, train, list(train), k=1) == train


@pytest.mark.parametrize("k", [0, -1])
def test_knn_rejects_non_positive_k(planted, k):
    dataset, components = planted
    with pytest.raises(BadK):
        knn_classify(line_matrix([0.0, 1.0]), {"p1": "a"}, ["p0"], k=k)
    with pytest.raises(BadK):
        cross_validate(dataset, folds=5, k=k, components=components)
    with pytest.raises(BadK):
        tune_weights(dataset, [(1.0, 0.0, 0.0, 0.0, 0.0)], folds=5, k=k, components=components)


def test_knn_empty_train():
    with pytest.raises(EmptyTrain):
        knn_classify(line_matrix([0.0, 1.0]), {}, ["p0"], k=1)


# -------------------------
# Folds and grids
# -------------------------
def test_stratified_folds_partition_and_balance():
    labels = {f"v{i:02d}": "a" if i < 12 else "b" for i in range(20)}
    folds = stratified_folds(labels, 4, seed=1)
    assert sorted(vid for fold in folds for vid in fold) == sorted(labels)
    for fold in folds:
        assert sum(labels[vid] == "a" for vid in fold) == 3
        assert sum(labels[vid] == "b" for vid in fold) == 2
    assert folds == stratified_folds(labels, 4, seed=1)


def test_stratified_folds_reduce_fold_count(caplog):
    caplog.set_level(logging.WARNING)
    labels = {"a1": "a", "a2": "a", "a3": "a", "b1": "b", "b2": "b"}
    folds = stratified_folds(labels, 10, seed=0)
    assert len(folds) == 2
    assert "Reducing folds" in caplog.text


def test_default_grid():
    grid = default_grid()
    assert len(grid) == 126
    assert grid[0] == (1.0, 0.0, 0.0, 0.0, 0.0)
    assert grid[-1] == (0.0, 0.0, 0.0, 0.0, 1.0)
    assert all(abs(sum(w) - 1.0) < 1e-9 for w in grid)
    assert len(default_grid(0.5)) == 15
    with pytest.raises(BadGrid):
        default_grid(0.3)


# -------------------------
# Cross-validation and tuning
# -------------------------
@pytest.fixture(scope="module")
def planted():
    dataset = attribute_classes(n=40, seed=1)
    return dataset, normalize_components(compute_components(dataset, DissimilarityConfig()))


def test_single_point_grid_equals_plain_cv(planted):
    dataset, components = planted
    weights = (0.2, 0.2, 0.2, 0.2, 0.2)
    plain = cross_validate(dataset, folds=5, k=3, seed=4, components=components)
    best, tuned = tune_weights(dataset, [weights], folds=5, k=3, seed=4, components=components)
    assert best == weights
    assert tuned.fold_values == plain.fold_values


def test_tuning_never_reads_test_labels_before_scoring(planted):
    dataset, components = planted
    reads = []
    grid = [(1.0, 0.0, 0.0, 0.0, 0.0), (0.0, 0.0, 0.0, 0.5, 0.5)]
    _, report = tune_weights(dataset, grid, folds=4, k=3, seed=2, components=components,
                             label_hook=lambda fold, vid, purpose: reads.append((fold, vid, purpose)))
    folds = stratified_folds(dataset.labels, 4, seed=2)
    for fold, test in enumerate(folds):
        test = set(test)
        assert not [r for r in reads if r[0] == fold and r[1] in test and r[2] != "score"]
        assert {r[1] for r in reads if r[0] == fold and r[2] == "score"} == test
    assert report.value == 100.0
    assert report.selected_weights == [grid[0]] * 4


def test_tuning_is_deterministic(planted):
    dataset, components = planted
    grid = default_grid(0.5)
    first = tune_weights(dataset, grid, folds=4, k=3, seed=9, components=components)
    second = tune_weights(dataset, grid, folds=4, k=3, seed=9, components=components, workers=3)
    assert first[0] == second[0]
    assert first[1].fold_values == second[1].fold_values


def test_tuning_errors(planted):
    dataset, components = planted
    with pytest.raises(BadGrid):
        tune_weights(dataset, [], components=components)
    with pytest.raises(BadGrid):
        tune_weights(dataset, [(0.5, 0.6, 0.0, 0.0, 0.0)], components=components)
    with pytest.raises(MissingLabels):
        tune_weights(dataset, [(1.0, 0.0, 0.0, 0.0, 0.0)], components=components, labels={})


def test_component_sweep_reports_every_run(planted):
    dataset, components = planted
    report = component_sweep({1: components}, dataset.labels, 2, methods=("agglomerative",))
    results = report.details["results"]
    assert len(results) == 6
    ad_only = [r for r in results if r["weights"] == [1.0, 0.0, 0.0, 0.0, 0.0]]
    assert ad_only[0]["ari"] == 1.0
    assert report.value == 1.0
