# dissimilarity.py
"""
Pairwise dissimilarity of neighbourhood trees.

Five components are compared for every unordered pair of target trees:

    ad   root attributes                     (level 0 attribute multisets)
    nad  neighbour attributes                (levels 1..d, per vertex type)
    cd   root connectivity                   (hyperedges shared by the roots)
    nd   neighbour identities                (levels 1..d, per vertex type)
    ed   edge label distributions            (levels 1..d)

Discrete multisets are compared with the chi-squared distance of their
relative frequencies, continuous ones through aggregates (mean, population
standard deviation) scaled by their global range. Each component is divided
by its maximum over all distinct pairs, cd is inverted, and the five are
mixed with the configured weights.
"""
import logging
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from core.errors import DepthMismatch, TooFewTargets
from data_ingest import Dataset
from models import (
    COMPONENTS,
    Aggregate,
    ComponentMatrices,
    DissimilarityConfig,
    DistanceMatrix,
    check_weights,
)
from neighbourhood_tree import ExpansionRule, NeighbourhoodTree, build_tree

logger = logging.getLogger(__name__)

Multiset = Union[Mapping, Iterable]
AttributeKey = Tuple[int, str, str]  # (level, vertex type, attribute)


# ===============================
# Multiset distances
# ===============================
def _as_counter(multiset: Multiset) -> Counter:
    if isinstance(multiset, Counter):
        return multiset
    if isinstance(multiset, Mapping):
        return Counter(dict(multiset))
    return Counter(multiset)


def relative_frequencies(multiset: Multiset) -> Dict:
    counts = _as_counter(multiset)
    total = sum(counts.values())
    if total == 0:
        return {}
    return {x: counts[x] / total for x in sorted(counts) if counts[x] > 0}


def chi2_frequencies(fa: Mapping, fb: Mapping) -> float:
    """Chi-squared distance between two relative-frequency maps; in [0, 2]."""
    total = 0.0
    for x in sorted(fa.keys() | fb.keys()):
        a = fa.get(x, 0.0)
        b = fb.get(x, 0.0)
        total += (a - b) ** 2 / (a + b)
    return total


def chi2_distance(A: Multiset, B: Multiset) -> float:
    return chi2_frequencies(relative_frequencies(A), relative_frequencies(B))


def _values(multiset: Multiset) -> List[float]:
    if isinstance(multiset, Mapping):
        return [float(x) for x in _as_counter(multiset).elements()]
    return [float(x) for x in multiset]


def aggregate_values(values: Sequence[float], aggregates: Sequence[Aggregate]) -> Tuple[float, ...]:
    x = np.asarray(values, dtype=float)
    if x.min() == x.max():
        # constant multisets aggregate exactly, so zero ranges stay zero
        mean, std = float(x[0]), 0.0
    else:
        mean, std = float(x.mean()), float(x.std())
    return tuple(mean if f == Aggregate.MEAN else std for f in aggregates)


def _continuous_terms(fa: Sequence[float], fb: Sequence[float], ranges: Sequence[float]) -> float:
    total = 0.0
    for a, b, r in zip(fa, fb, ranges):
        if r > 0:
            total += abs(a - b) / r
    return total


def continuous_distance(A: Multiset, B: Multiset, ranges: Mapping[str, float],
                        aggregates: Sequence[Aggregate] = (Aggregate.MEAN, Aggregate.STANDARD_DEVIATION)) -> float:
    """
    Sum over aggregates f of |f(A) - f(B)| / r_f.

    Empty multisets and zero ranges contribute nothing.
    """
    a_values, b_values = _values(A), _values(B)
    if not a_values or not b_values:
        return 0.0
    aggregates = [Aggregate(f) for f in aggregates]
    r = [float(ranges.get(f.value, 0.0)) for f in aggregates]
    return _continuous_terms(aggregate_values(a_values, aggregates), aggregate_values(b_values, aggregates), r)


# ===============================
# Tree profiles
# ===============================
class TreeProfile(NamedTuple):
    """Precomputed distributions of one tree; what pair comparisons read."""
    root: str
    depth: int
    edge_ids: frozenset
    # discrete -> relative frequencies, continuous -> aggregate tuple
    attributes: Dict[AttributeKey, Union[Dict, Tuple[float, ...]]]
    types: Dict[Tuple[int, str], Dict]
    edges: Dict[int, Dict]


class RawComponents(NamedTuple):
    ad: float
    nad: float
    cd: float
    nd: float
    ed: float


def profile_tree(tree: NeighbourhoodTree, aggregates: Sequence[Aggregate]) -> TreeProfile:
    h = tree.hypergraph
    attributes, types, edges = {}, {}, {}

    for level in range(tree.depth + 1):
        discrete = defaultdict(Counter)
        continuous = defaultdict(list)
        type_counts = defaultdict(Counter)
        for vid, n in tree.occurrences(level).items():
            vertex = h.vertices[vid]
            if level:
                type_counts[vertex.type][vid] += n
            for attr in h.vertex_types[vertex.type].attributes:
                value = vertex.values.get(attr.name)
                if value is None:
                    continue
                if attr.kind == "discrete":
                    discrete[(vertex.type, attr.name)][value] += n
                else:
                    continuous[(vertex.type, attr.name)].extend([value] * n)

        for (t, a), counts in discrete.items():
            attributes[(level, t, a)] = relative_frequencies(counts)
        for (t, a), values in continuous.items():
            attributes[(level, t, a)] = aggregate_values(values, aggregates)
        if level:
            for t, counts in type_counts.items():
                types[(level, t)] = relative_frequencies(counts)
            labels = tree.level_edge_labels(level)
            if labels:
                edges[level] = relative_frequencies(labels)

    return TreeProfile(
        root=tree.root,
        depth=tree.depth,
        edge_ids=h.incident_edge_ids(tree.root),
        attributes=dict(sorted(attributes.items())),
        types=dict(sorted(types.items())),
        edges=dict(sorted(edges.items())),
    )


def profile_ranges(profiles: Iterable[TreeProfile], aggregates: Sequence[Aggregate]) -> Dict[Tuple[str, str], Dict[str, float]]:
    """Global max - min of every aggregate per (vertex type, attribute), over all levels and trees."""
    low, high = {}, {}
    for profile in profiles:
        for (_, t, a), summary in profile.attributes.items():
            if not isinstance(summary, tuple):
                continue
            key = (t, a)
            if key not in low:
                low[key], high[key] = list(summary), list(summary)
            else:
                low[key] = [min(x, y) for x, y in zip(low[key], summary)]
                high[key] = [max(x, y) for x, y in zip(high[key], summary)]
    return {
        key: {f.value: high[key][i] - low[key][i] for i, f in enumerate(aggregates)}
        for key in sorted(low)
    }


def aggregate_ranges(trees: Iterable[NeighbourhoodTree], aggregates: Sequence[Aggregate]) -> Dict[Tuple[str, str], Dict[str, float]]:
    aggregates = [Aggregate(f) for f in aggregates]
    return profile_ranges([profile_tree(tree, aggregates) for tree in trees], aggregates)


def compare_profiles(p: TreeProfile, q: TreeProfile, range_vectors: Mapping[Tuple[str, str], Tuple[float, ...]]) -> RawComponents:
    """Raw (un-normalized) components for one pair; fixed summation order."""
    ad = nad = 0.0
    for key in sorted(p.attributes.keys() | q.attributes.keys()):
        a, b = p.attributes.get(key), q.attributes.get(key)
        sample = a if a is not None else b
        if isinstance(sample, tuple):
            if a is None or b is None:
                continue
            term = _continuous_terms(a, b, range_vectors.get((key[1], key[2]), ()))
        else:
            term = chi2_frequencies(a or {}, b or {})
        if key[0] == 0:
            ad += term
        else:
            nad += term

    nd = 0.0
    for key in sorted(p.types.keys() | q.types.keys()):
        nd += chi2_frequencies(p.types.get(key, {}), q.types.get(key, {}))

    ed = 0.0
    for level in sorted(p.edges.keys() | q.edges.keys()):
        ed += chi2_frequencies(p.edges.get(level, {}), q.edges.get(level, {}))

    cd = float(len(p.edge_ids & q.edge_ids))
    return RawComponents(ad, nad, cd, nd, ed)


def _range_vectors(ranges, aggregates) -> Dict[Tuple[str, str], Tuple[float, ...]]:
    return {key: tuple(r.get(Aggregate(f).value, 0.0) for f in aggregates) for key, r in ranges.items()}


def raw_components(g: NeighbourhoodTree, g2: NeighbourhoodTree, cfg: DissimilarityConfig,
                   ranges: Optional[Mapping[Tuple[str, str], Mapping[str, float]]] = None) -> RawComponents:
    """
    Raw components of one pair of trees.

    Without `ranges` the aggregate ranges are taken over the two trees alone;
    pass the ranges of the whole target set to reproduce pairwise_matrix.
    """
    if g.depth != cfg.depth or g2.depth != cfg.depth:
        raise DepthMismatch(f"trees of depth {g.depth}/{g2.depth} do not match configured depth {cfg.depth}")
    p, q = profile_tree(g, cfg.aggregates), profile_tree(g2, cfg.aggregates)
    if ranges is None:
        ranges = profile_ranges([p, q], cfg.aggregates)
    return compare_profiles(p, q, _range_vectors(ranges, cfg.aggregates))


# ===============================
# Normalization and combination
# ===============================
def _off_diagonal_max(values: np.ndarray) -> float:
    n = values.shape[0]
    if n < 2:
        return 0.0
    return float(values[np.triu_indices(n, 1)].max())


def normalize_components(raw: ComponentMatrices) -> ComponentMatrices:
    """Divide each component by its maximum over distinct pairs; cd becomes 1 - cd/max."""
    normalized = {}
    for name in COMPONENTS:
        values = raw.matrix(name)
        top = _off_diagonal_max(values)
        if name == "cd":
            normalized[name] = 1.0 - values / top if top > 0 else np.ones_like(values)
        else:
            normalized[name] = values / top if top > 0 else np.zeros_like(values)
        normalized[name] = np.clip(normalized[name], 0.0, 1.0)
    return ComponentMatrices(ids=list(raw.ids), normalized=True, ranges=dict(raw.ranges), **normalized)


def combine(norm: ComponentMatrices, cfg: DissimilarityConfig) -> DistanceMatrix:
    weights = check_weights(cfg.weights)
    values = np.zeros_like(norm.ad)
    for w, name in zip(weights, COMPONENTS):
        values = values + w * norm.matrix(name)
    return DistanceMatrix(ids=list(norm.ids), values=np.clip(values, 0.0, 1.0), config=cfg)


# ===============================
# All pairs
# ===============================
_WORKER_STATE = {}


def _init_worker(profiles, range_vectors):
    _WORKER_STATE["profiles"] = profiles
    _WORKER_STATE["range_vectors"] = range_vectors


def _compare_block(profiles, range_vectors, rows: Sequence[int]) -> List[Tuple[int, int, RawComponents]]:
    out = []
    for i in rows:
        for j in range(i + 1, len(profiles)):
            out.append((i, j, compare_profiles(profiles[i], profiles[j], range_vectors)))
    return out


def _compare_rows(rows: Sequence[int]) -> List[Tuple[int, int, RawComponents]]:
    return _compare_block(_WORKER_STATE["profiles"], _WORKER_STATE["range_vectors"], rows)


def build_trees(h, ids: Sequence[str], depth: int, rule: ExpansionRule = ExpansionRule.SET_FRONTIER,
                workers: int = 1) -> List[NeighbourhoodTree]:
    if workers <= 1:
        return [build_tree(h, vid, depth, rule) for vid in ids]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(lambda vid: build_tree(h, vid, depth, rule), ids))


def compute_components(dataset: Dataset, cfg: DissimilarityConfig, workers: int = 1,
                       rule: ExpansionRule = ExpansionRule.SET_FRONTIER,
                       progress: bool = False) -> ComponentMatrices:
    """Raw component matrices over all target pairs (passes 1 and 2)."""
    ids = dataset.target_ids
    n = len(ids)
    if n < 2:
        raise TooFewTargets(f"need at least 2 target vertices of type {dataset.target_type}, found {n}")

    trees = build_trees(dataset.hypergraph, ids, cfg.depth, rule, workers)
    profiles = [profile_tree(tree, cfg.aggregates) for tree in trees]
    logger.info(f"Built {n} neighbourhood trees (depth={cfg.depth}, rule={rule.value})")

    # pass 1: global aggregate ranges
    ranges = profile_ranges(profiles, cfg.aggregates)
    range_vectors = _range_vectors(ranges, cfg.aggregates)

    # pass 2: raw components of every unordered pair
    raw = np.zeros((len(COMPONENTS), n, n))
    rows = list(range(n - 1))
    n_chunks = max(1, min(len(rows), workers * 4))
    chunks = [rows[c::n_chunks] for c in range(n_chunks)]
    bar = tqdm(total=n * (n - 1) // 2, desc="pairs", disable=not progress)

    def _store(results):
        for i, j, values in results:
            raw[:, i, j] = values
            raw[:, j, i] = values
        bar.update(len(results))

    if workers <= 1:
        for chunk in chunks:
            _store(_compare_block(profiles, range_vectors, chunk))
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(profiles, range_vectors)) as executor:
            for results in executor.map(_compare_rows, chunks):
                _store(results)
    bar.close()
    logger.info(f"Computed raw components for {n * (n - 1) // 2} pairs with {workers} worker(s)")

    return ComponentMatrices(ids=ids, normalized=False, ranges=ranges,
                             **{name: raw[k] for k, name in enumerate(COMPONENTS)})


def pairwise_matrix(dataset: Dataset, cfg: DissimilarityConfig, workers: int = 1,
                    rule: ExpansionRule = ExpansionRule.SET_FRONTIER,
                    progress: bool = False) -> Tuple[DistanceMatrix, ComponentMatrices]:
    raw = compute_components(dataset, cfg, workers=workers, rule=rule, progress=progress)
    norm = normalize_components(raw)
    distances = combine(norm, cfg)
    logger.info(f"Distance matrix ready: {len(distances.ids)} targets, weights={cfg.weights}")
    return distances, norm
