# evaluation.py
"""
Scoring of clusterings and kNN classification under the relational measure.

    ari             adjusted Rand index against a label map
    knn_classify    k nearest neighbours over a precomputed distance matrix
    cross_validate  stratified k-fold kNN with fixed weights
    tune_weights    nested CV: weight grid picked on inner folds, scored on outer folds
    component_sweep ARI of single-component weightings under both clusterers
"""
import itertools
import logging
import math
import time
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from clustering import agglomerative, spectral
from core.errors import BadGrid, BadK, EmptyTrain, IdMismatch, MissingLabels, UsageError, WeightSumInvalid
from data_ingest import Dataset
from dissimilarity import combine, normalize_components, compute_components
from models import (
    COMPONENTS,
    DEFAULT_WEIGHTS,
    ClusterAssignment,
    ComponentMatrices,
    DissimilarityConfig,
    DistanceMatrix,
    EvaluationReport,
    SpectralParams,
    check_weights,
)

logger = logging.getLogger(__name__)

DEFAULT_K = 5
DEFAULT_FOLDS = 10
DEFAULT_GRID_STEP = 0.2

Weights = Tuple[float, ...]
# (outer fold, vertex id, "train" | "score")
LabelHook = Callable[[int, str, str], None]


# ===============================
# Adjusted Rand index
# ===============================
def _as_label_map(x: Union[ClusterAssignment, Mapping]) -> Dict[str, object]:
    if isinstance(x, ClusterAssignment):
        return x.as_dict()
    return dict(x)


def ari(a: Union[ClusterAssignment, Mapping], b: Union[ClusterAssignment, Mapping]) -> float:
    """Adjusted Rand index of two partitions of the same ids; 1.0 when the denominator vanishes."""
    a, b = _as_label_map(a), _as_label_map(b)
    if a.keys() != b.keys():
        missing = sorted(a.keys() ^ b.keys())
        raise IdMismatch(f"partitions cover different ids, e.g. {missing[:5]}")
    n = len(a)
    if n < 2:
        return 1.0

    contingency = Counter((a[i], b[i]) for i in a)
    index = sum(math.comb(c, 2) for c in contingency.values())
    sum_a = sum(math.comb(c, 2) for c in Counter(a.values()).values())
    sum_b = sum(math.comb(c, 2) for c in Counter(b.values()).values())
    expected = sum_a * sum_b / math.comb(n, 2)
    max_index = (sum_a + sum_b) / 2
    if max_index == expected:
        return 1.0
    return (index - expected) / (max_index - expected)


# ===============================
# kNN
# ===============================
def _id_rank(ids: Sequence[str]) -> np.ndarray:
    """Position of each row's id in sorted id order."""
    rank = {vid: r for r, vid in enumerate(sorted(ids))}
    return np.array([rank[vid] for vid in ids])


def _knn_predict(values: np.ndarray, rank: np.ndarray, train_idx: np.ndarray, train_labels: Sequence,
                 test_idx: Sequence[int], k: int) -> List:
    """Predictions by row index; train_labels is aligned with train_idx."""
    out = []
    for i in test_idx:
        keep = train_idx != i
        candidates = train_idx[keep]
        if candidates.size == 0:
            raise EmptyTrain(f"no training neighbours left for row {i}")
        labels = [label for label, kept in zip(train_labels, keep) if kept]
        # distance first, id order breaks ties
        order = np.lexsort((rank[candidates], values[i, candidates]))[:k]

        votes = Counter()
        first_seen = {}
        for place, pos in enumerate(order):
            label = labels[pos]
            votes[label] += 1
            first_seen.setdefault(label, place)
        top = max(votes.values())
        out.append(min((label for label, n in votes.items() if n == top), key=first_seen.__getitem__))
    return out


def check_knn_params(k: int, folds: Optional[int] = None):
    """Raise BadK for k < 1 or fewer than 2 folds."""
    if k < 1:
        raise BadK(f"k must be >= 1, got {k}")
    if folds is not None and folds < 2:
        raise BadK(f"need at least 2 folds, got {folds}")


def knn_classify(m: DistanceMatrix, train: Mapping[str, object], test_ids: Sequence[str], k: int = DEFAULT_K) -> Dict[str, object]:
    """
    Majority vote among the k nearest training ids.

    A test id is never its own neighbour. Distance ties go to the smaller id;
    vote ties go to the class whose nearest member is closest.
    """
    check_knn_params(k)
    if not train:
        raise EmptyTrain("training set is empty")
    position = {vid: i for i, vid in enumerate(m.ids)}
    unknown = [vid for vid in list(train) + list(test_ids) if vid not in position]
    if unknown:
        raise IdMismatch(f"ids not in distance matrix: {unknown[:5]}")

    train_ids = list(train)
    train_idx = np.array([position[vid] for vid in train_ids])
    predictions = _knn_predict(m.values, _id_rank(m.ids), train_idx, [train[vid] for vid in train_ids],
                               [position[vid] for vid in test_ids], k)
    return dict(zip(test_ids, predictions))


# ===============================
# Folds
# ===============================
def stratified_folds(labels: Mapping[str, object], n_folds: int, seed: int = 0, warn: bool = True) -> List[List[str]]:
    """
    Seeded stratified split of the labeled ids.

    Each class is shuffled and dealt round-robin, continuing where the previous
    class stopped. The fold count drops to the smallest class size (at least 2).
    """
    if n_folds < 2:
        raise BadK(f"need at least 2 folds, got {n_folds}")
    if len(labels) < 2:
        raise EmptyTrain(f"need at least 2 labeled ids for cross-validation, got {len(labels)}")

    by_class = defaultdict(list)
    for vid in sorted(labels):
        by_class[labels[vid]].append(vid)
    smallest = min(len(members) for members in by_class.values())
    effective = min(max(2, min(n_folds, smallest)), len(labels))
    if effective != n_folds:
        message = f"Reducing folds from {n_folds} to {effective}: smallest class has {smallest} member(s)"
        if warn:
            logger.warning(message)
        else:
            logger.debug(message)

    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(effective)]
    slot = 0
    for cls in sorted(by_class, key=str):
        members = by_class[cls]
        for index in rng.permutation(len(members)):
            folds[slot % effective].append(members[index])
            slot += 1
    return [sorted(fold) for fold in folds]


class _LabelReader:
    """Label access that reports every read to an optional hook."""

    def __init__(self, labels: Mapping[str, object], hook: Optional[LabelHook] = None):
        self._labels = labels
        self._hook = hook

    def read(self, fold: int, vid: str, purpose: str):
        if self._hook is not None:
            self._hook(fold, vid, purpose)
        return self._labels[vid]


def _accuracy(predicted: Sequence, truth: Sequence) -> float:
    if not truth:
        return 0.0
    return 100.0 * sum(p == t for p, t in zip(predicted, truth)) / len(truth)


def _labeled_ids(ids: Sequence[str], labels: Mapping[str, object]) -> List[str]:
    if not labels:
        raise MissingLabels("no labels available for evaluation")
    labeled = [vid for vid in ids if vid in labels]
    skipped = len(ids) - len(labeled)
    if skipped:
        logger.warning(f"{skipped} target(s) have no label and are left out of evaluation")
    unknown = sorted(set(labels) - set(ids))
    if unknown:
        raise IdMismatch(f"labels reference non-target ids: {unknown[:5]}")
    if not labeled:
        raise MissingLabels("no target carries a label")
    return labeled


def _fold_accuracy(values: np.ndarray, rank: np.ndarray, position: Mapping[str, int], train: Sequence[str], test: Sequence[str],
                   train_labels: Sequence, test_labels: Sequence, k: int) -> float:
    train_idx = np.array([position[vid] for vid in train])
    predicted = _knn_predict(values, rank, train_idx, train_labels, [position[vid] for vid in test], k)
    return _accuracy(predicted, test_labels)


# ===============================
# Grids
# ===============================
def default_grid(step: float = DEFAULT_GRID_STEP) -> List[Weights]:
    """Every weight vector over {0, step, ..., 1} summing to 1, descending lexicographic order."""
    if not 0 < step <= 1:
        raise BadGrid(f"grid step must be in (0, 1], got {step}")
    steps = round(1 / step)
    if abs(steps * step - 1) > 1e-9:
        raise BadGrid(f"grid step {step} does not divide 1")
    return [
        tuple(i / steps for i in combo)
        for combo in itertools.product(range(steps, -1, -1), repeat=len(COMPONENTS))
        if sum(combo) == steps
    ]


def _check_grid(grid: Sequence[Sequence[float]]) -> List[Weights]:
    if not grid:
        raise BadGrid("weight grid is empty")
    checked = []
    for point in grid:
        try:
            checked.append(check_weights(point))
        except WeightSumInvalid as e:
            raise BadGrid(f"invalid grid point {tuple(point)}: {e}") from None
    return checked


def _weighted(norm: ComponentMatrices, weights: Weights) -> np.ndarray:
    return combine(norm, DissimilarityConfig(weights=weights)).values


def _components(dataset: Dataset, cfg: Optional[DissimilarityConfig], components: Optional[ComponentMatrices],
                workers: int) -> ComponentMatrices:
    if components is None:
        components = compute_components(dataset, cfg or DissimilarityConfig(), workers=workers)
    return components if components.normalized else normalize_components(components)


# ===============================
# Cross-validation
# ===============================
def cross_validate(dataset: Optional[Dataset], cfg: Optional[DissimilarityConfig] = None, folds: int = DEFAULT_FOLDS,
                   k: int = DEFAULT_K, seed: int = 0, workers: int = 1,
                   components: Optional[ComponentMatrices] = None,
                   labels: Optional[Mapping[str, object]] = None) -> EvaluationReport:
    """Plain stratified k-fold kNN with the weights of `cfg`."""
    check_knn_params(k, folds)
    started = time.perf_counter()
    cfg = cfg or DissimilarityConfig()
    labels = dict(labels if labels is not None else dataset.labels)
    norm = _components(dataset, cfg, components, workers)
    ids = _labeled_ids(norm.ids, labels)
    position = {vid: i for i, vid in enumerate(norm.ids)}
    rank = _id_rank(norm.ids)
    values = _weighted(norm, cfg.weights)

    fold_values = []
    outer = stratified_folds({vid: labels[vid] for vid in ids}, folds, seed)
    for f, test in enumerate(outer):
        held_out = set(test)
        train = [vid for vid in ids if vid not in held_out]
        acc = _fold_accuracy(values, rank, position, train, test,
                             [labels[vid] for vid in train], [labels[vid] for vid in test], k)
        fold_values.append(acc)
        logger.debug(f"Fold {f}: accuracy {acc:.2f}")

    mean = float(np.mean(fold_values))
    logger.info(f"Cross-validated kNN (k={k}, folds={len(outer)}): mean accuracy {mean:.2f}")
    return EvaluationReport(
        task="classification",
        metric="accuracy",
        fold_values=fold_values,
        value=mean,
        config={"weights": list(cfg.weights), "depth": cfg.depth, "k": k, "folds": len(outer), "seed": seed, "tuned": False},
        wall_clock_seconds=time.perf_counter() - started,
        selected_weights=[tuple(cfg.weights)] * len(outer),
    )


def tune_weights(dataset: Optional[Dataset], grid: Optional[Sequence[Sequence[float]]] = None,
                 folds: int = DEFAULT_FOLDS, k: int = DEFAULT_K, seed: int = 0,
                 cfg: Optional[DissimilarityConfig] = None, workers: int = 1,
                 components: Optional[ComponentMatrices] = None,
                 labels: Optional[Mapping[str, object]] = None,
                 label_hook: Optional[LabelHook] = None) -> Tuple[Weights, EvaluationReport]:
    """
    Nested cross-validation over a weight grid.

    For every outer fold the grid point with the best mean inner-CV accuracy
    on the outer-train split is selected (earliest point on ties) and scored on
    the outer-test split. Components are computed once; only the weighted
    combination changes per grid point. Returns the point selected most often
    and the report.
    """
    check_knn_params(k, folds)
    started = time.perf_counter()
    cfg = cfg or DissimilarityConfig()
    grid = _check_grid(grid if grid is not None else default_grid())
    labels = dict(labels if labels is not None else dataset.labels)
    norm = _components(dataset, cfg, components, workers)
    ids = _labeled_ids(norm.ids, labels)
    position = {vid: i for i, vid in enumerate(norm.ids)}
    rank = _id_rank(norm.ids)
    reader = _LabelReader(labels, label_hook)

    # fold membership only; label values are read through the reader per fold
    outer = stratified_folds({vid: labels[vid] for vid in ids}, folds, seed)
    splits = []
    for f, test in enumerate(outer):
        held_out = set(test)
        train = [vid for vid in ids if vid not in held_out]
        train_labels = {vid: reader.read(f, vid, "train") for vid in train}
        inner = stratified_folds(train_labels, len(outer), seed + f + 1, warn=False)
        splits.append((train, test, train_labels, inner))

    def _score_point(weights: Weights) -> List[float]:
        values = _weighted(norm, weights)
        scores = []
        for train, _, train_labels, inner in splits:
            accs = []
            for validation in inner:
                held_out = set(validation)
                fit = [vid for vid in train if vid not in held_out]
                accs.append(_fold_accuracy(values, rank, position, fit, validation,
                                           [train_labels[vid] for vid in fit],
                                           [train_labels[vid] for vid in validation], k))
            scores.append(float(np.mean(accs)))
        return scores

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            grid_scores = list(executor.map(_score_point, grid))
    else:
        grid_scores = [_score_point(weights) for weights in grid]

    fold_values, selected = [], []
    for f, (train, test, train_labels, _) in enumerate(splits):
        best = max(range(len(grid)), key=lambda g: (grid_scores[g][f], -g))
        weights = grid[best]
        values = _weighted(norm, weights)
        train_idx = np.array([position[vid] for vid in train])
        predicted = _knn_predict(values, rank, train_idx, [train_labels[vid] for vid in train],
                                 [position[vid] for vid in test], k)
        truth = [reader.read(f, vid, "score") for vid in test]
        acc = _accuracy(predicted, truth)
        fold_values.append(acc)
        selected.append(weights)
        logger.debug(f"Fold {f}: selected {weights} (inner {grid_scores[best][f]:.2f}), outer accuracy {acc:.2f}")

    counts = Counter(selected)
    best_weights = max(grid, key=lambda w: (counts[w], -grid.index(w)))
    mean = float(np.mean(fold_values))
    logger.info(f"Tuned kNN over {len(grid)} grid points: mean accuracy {mean:.2f}, most selected {best_weights}")

    report = EvaluationReport(
        task="classification",
        metric="accuracy",
        fold_values=fold_values,
        value=mean,
        config={"depth": cfg.depth, "k": k, "folds": len(outer), "seed": seed, "tuned": True, "grid_size": len(grid)},
        wall_clock_seconds=time.perf_counter() - started,
        selected_weights=selected,
        details={"best_weights": list(best_weights)},
    )
    return best_weights, report


# ===============================
# Component relevance
# ===============================
def sweep_weights() -> List[Weights]:
    """One vector per component (w_i = 1), then the uniform default."""
    singles = [tuple(1.0 if i == j else 0.0 for j in range(len(COMPONENTS))) for i in range(len(COMPONENTS))]
    return singles + [DEFAULT_WEIGHTS]


def component_sweep(components: Union[ComponentMatrices, Mapping[int, ComponentMatrices]],
                    labels: Mapping[str, object], k: int,
                    methods: Sequence[str] = ("agglomerative", "spectral"),
                    linkage: str = "average",
                    spectral_params: Optional[SpectralParams] = None) -> EvaluationReport:
    """ARI of every single-component weighting and the default, per depth and clusterer."""
    started = time.perf_counter()
    by_depth = components if isinstance(components, Mapping) else {1: components}
    results = []
    for depth in sorted(by_depth):
        norm = by_depth[depth]
        norm = norm if norm.normalized else normalize_components(norm)
        ids = _labeled_ids(norm.ids, labels)
        truth = {vid: labels[vid] for vid in ids}
        for weights in sweep_weights():
            matrix = combine(norm, DissimilarityConfig(weights=weights, depth=depth))
            for method in methods:
                if method == "agglomerative":
                    assignment = agglomerative(matrix, k, linkage)
                elif method == "spectral":
                    assignment = spectral(matrix, k, spectral_params)
                else:
                    raise UsageError(f"unknown clustering method '{method}'")
                found = assignment.as_dict()
                score = ari({vid: found[vid] for vid in ids}, truth)
                results.append({"depth": depth, "weights": list(weights), "method": method, "ari": score})
                logger.debug(f"Sweep depth={depth} weights={weights} {method}: ARI {score:.3f}")

    value = max(r["ari"] for r in results)
    logger.info(f"Component sweep: {len(results)} runs, best ARI {value:.3f}")
    return EvaluationReport(
        task="sweep",
        metric="ari",
        value=value,
        config={"k": k, "methods": list(methods), "linkage": linkage, "depths": sorted(by_depth)},
        wall_clock_seconds=time.perf_counter() - started,
        details={"results": results},
    )
