# clustering.py
"""
Clustering from a precomputed distance matrix.

    agglomerative  Lance-Williams merges (single / complete / average), cut at k
    spectral       normalized Laplacian embedding + seeded k-means++
"""
import logging
import math
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np

from core.errors import AsymmetricMatrix, BadK, DimensionMismatch
from models import ClusterAssignment, DistanceMatrix, SpectralParams

logger = logging.getLogger(__name__)

Linkage = Literal["average", "complete", "single"]
LINKAGES = ("average", "complete", "single")

ISOLATED_SELF_AFFINITY = 1e-12
JACOBI_TOLERANCE = 1e-10
SYMMETRY_TOLERANCE = 1e-12


def _unpack(m: Union[DistanceMatrix, np.ndarray], ids: Optional[Sequence[str]] = None) -> Tuple[np.ndarray, List[str]]:
    if isinstance(m, DistanceMatrix):
        values, ids = np.asarray(m.values, dtype=float), list(m.ids)
    else:
        values = np.asarray(m, dtype=float)
        ids = list(ids) if ids is not None else [str(i) for i in range(values.shape[0])]
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise DimensionMismatch(f"distance matrix must be square, got shape {values.shape}")
    if len(ids) != values.shape[0]:
        raise DimensionMismatch(f"{len(ids)} ids for a matrix of size {values.shape[0]}")
    return values, ids


def _check_k(k: int, n: int):
    if not 1 <= k <= n:
        raise BadK(f"k must be within 1..{n}, got {k}")


def _canonical_labels(raw_labels: Sequence[int]) -> List[int]:
    """Renumber clusters in order of first appearance."""
    mapping = {}
    return [mapping.setdefault(label, len(mapping)) for label in raw_labels]


# ===============================
# Agglomerative
# ===============================
def agglomerative_merges(values: np.ndarray, k: int, linkage: Linkage = "average") -> Tuple[List[int], List[float]]:
    """
    Merge until k clusters remain.

    Returns the raw cluster label per point and the distance of every merge,
    in merge order. Ties go to the smallest (i, j) index pair.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"unknown linkage '{linkage}'")
    n = values.shape[0]
    _check_k(k, n)
    if not np.allclose(values, values.T, rtol=0.0, atol=SYMMETRY_TOLERANCE):
        raise AsymmetricMatrix("agglomerative clustering needs a symmetric matrix")

    d = values.astype(float).copy()
    np.fill_diagonal(d, np.inf)
    active = np.ones(n, dtype=bool)
    sizes = np.ones(n)
    owner = np.arange(n)
    merges = []

    for _ in range(n - k):
        # first minimum in row-major order is the smallest (i, j) with i < j
        i, j = divmod(int(np.argmin(d)), n)
        merges.append(float(d[i, j]))

        if linkage == "single":
            merged = np.minimum(d[i], d[j])
        elif linkage == "complete":
            merged = np.maximum(d[i], d[j])
        else:
            merged = (sizes[i] * d[i] + sizes[j] * d[j]) / (sizes[i] + sizes[j])
        merged[~active] = np.inf
        merged[i] = merged[j] = np.inf

        d[i, :] = merged
        d[:, i] = merged
        d[j, :] = np.inf
        d[:, j] = np.inf
        sizes[i] += sizes[j]
        active[j] = False
        owner[owner == j] = i

    return owner.tolist(), merges


def agglomerative(m: Union[DistanceMatrix, np.ndarray], k: int, linkage: Linkage = "average",
                  ids: Optional[Sequence[str]] = None) -> ClusterAssignment:
    values, ids = _unpack(m, ids)
    owner, merges = agglomerative_merges(values, k, linkage)
    labels = _canonical_labels(owner)
    logger.info(f"Agglomerative ({linkage}) clustering: {len(ids)} points into {k} clusters")
    return ClusterAssignment(ids=ids, labels=labels, k=k, method="agglomerative")


# ===============================
# Dense symmetric eigensolver
# ===============================
def jacobi_eigh(A: np.ndarray, tol: float = JACOBI_TOLERANCE, max_sweeps: int = 100) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cyclic Jacobi rotations on a symmetric matrix.

    Returns eigenvalues in ascending order and the matching eigenvectors as
    columns. Stops once the off-diagonal Frobenius norm drops below `tol`.
    """
    a = np.array(A, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    skip = tol / max(n, 1)

    for sweep in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < skip:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c

                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                vec_p, vec_q = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    else:
        logger.warning(f"Jacobi did not converge in {max_sweeps} sweeps")

    eigenvalues = np.diag(a).copy()
    order = np.argsort(eigenvalues, kind="stable")
    return eigenvalues[order], v[:, order]


# ===============================
# Spectral
# ===============================
def affinity_matrix(values: np.ndarray, params: SpectralParams) -> np.ndarray:
    if params.affinity == "gaussian":
        w = np.exp(-(values ** 2) / (2.0 * params.sigma ** 2))
    else:
        top = float(values.max()) if values.size else 0.0
        w = 1.0 - values / top if top > 0 else np.ones_like(values)
    w = np.clip(w, 0.0, None)
    np.fill_diagonal(w, 0.0)
    return w


def normalized_laplacian(w: np.ndarray, ids: Optional[Sequence[str]] = None) -> np.ndarray:
    """L_sym = I - D^-1/2 W D^-1/2; zero-degree rows get a tiny self-affinity."""
    w = w.copy()
    degree = w.sum(axis=1)
    isolated = np.flatnonzero(degree <= 0)
    if isolated.size:
        names = [ids[i] for i in isolated] if ids is not None else isolated.tolist()
        logger.warning(f"Isolated vertices in affinity graph, adding self-affinity: {names}")
        w[isolated, isolated] = ISOLATED_SELF_AFFINITY
        degree = w.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(degree)
    lap = np.eye(w.shape[0]) - inv_sqrt[:, None] * w * inv_sqrt[None, :]
    return (lap + lap.T) / 2.0


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    closest = np.sum((x - x[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = float(closest.sum())
        if total > 0:
            index = int(rng.choice(n, p=closest / total))
        else:
            remaining = np.setdiff1d(np.arange(n), chosen)
            index = int(rng.choice(remaining))
        chosen.append(index)
        closest = np.minimum(closest, np.sum((x - x[index]) ** 2, axis=1))
    return x[chosen].copy()


def _lloyd(x: np.ndarray, centers: np.ndarray, max_iter: int = 300) -> Tuple[np.ndarray, float]:
    labels = None
    for _ in range(max_iter):
        dist = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(dist, axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(centers.shape[0]):
            members = x[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
    dist = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(dist, axis=1)
    inertia = float(dist[np.arange(x.shape[0]), labels].sum())
    return labels, inertia


def kmeans(x: np.ndarray, k: int, restarts: int = 10, seed: int = 0) -> Tuple[List[int], float]:
    """Seeded k-means++ with `restarts` runs; the lowest inertia wins (first on ties)."""
    _check_k(k, x.shape[0])
    rng = np.random.default_rng(seed)
    best_labels, best_inertia = None, math.inf
    for _ in range(restarts):
        labels, inertia = _lloyd(x, _kmeans_pp(x, k, rng))
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return _canonical_labels(best_labels.tolist()), best_inertia


def spectral_embedding(values: np.ndarray, k: int, params: SpectralParams,
                       ids: Optional[Sequence[str]] = None) -> np.ndarray:
    """Row-normalized eigenvectors of the k smallest eigenvalues of L_sym."""
    lap = normalized_laplacian(affinity_matrix(values, params), ids)
    _, vectors = jacobi_eigh(lap)
    u = vectors[:, :k]
    norms = np.linalg.norm(u, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return u / norms


def spectral(m: Union[DistanceMatrix, np.ndarray], k: int, params: Optional[SpectralParams] = None,
             ids: Optional[Sequence[str]] = None) -> ClusterAssignment:
    params = params or SpectralParams()
    values, ids = _unpack(m, ids)
    _check_k(k, len(ids))
    embedding = spectral_embedding(values, k, params, ids)
    labels, inertia = kmeans(embedding, k, params.kmeans_restarts, params.seed)
    logger.info(f"Spectral clustering ({params.affinity}): {len(ids)} points into {k} clusters, inertia={inertia:.4g}")
    return ClusterAssignment(ids=ids, labels=labels, k=k, method="spectral")
