"""Spectral embedding and clustering: top-|eigenvalue| pairs, entry-wise
eigenvector ratios, and k-means with farthest-point seeding.

The clustering pipeline ("SCORE" style) removes degree heterogeneity by
dividing the 2nd..Kth eigenvectors entry-wise by the first, then running
k-means on the resulting n x (K-1) rows.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg

from .errors import ConfigError
from .model import require_symmetric

log = logging.getLogger(__name__)

# Above this size, dense tridiagonalization gives way to restarted Lanczos.
DENSE_EIGEN_LIMIT = 4096


@dataclass(frozen=True)
class EigenPairs:
    """Top-K eigenpairs ordered by decreasing |eigenvalue|.

    ``values`` has length K; ``vectors`` is n x K with orthonormal columns.
    Each column is sign-normalized so its largest-magnitude entry is positive.
    """

    values: np.ndarray
    vectors: np.ndarray


def _magnitude_order(values: np.ndarray) -> np.ndarray:
    # |value| descending, ties by signed value descending, then by position
    idx = np.arange(values.size)
    return np.lexsort((idx, -values, -np.abs(values)))


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    vectors = vectors.copy()
    for k in range(vectors.shape[1]):
        col = vectors[:, k]
        lead = np.argmax(np.abs(col))
        if col[lead] < 0:
            vectors[:, k] = -col
    return vectors


def top_k_eigenpairs(M: np.ndarray, K: int) -> EigenPairs:
    """K eigenpairs of largest magnitude of a symmetric matrix.

    Uses a full dense decomposition up to ``DENSE_EIGEN_LIMIT`` and restarted
    Lanczos with magnitude targeting above it. Deterministic: repeated calls
    on the same matrix return bit-identical output.
    """
    M = require_symmetric(M, atol=1e-9, name="M")
    n = M.shape[0]
    if not 1 <= K <= n:
        raise ConfigError(f"need 1 <= K <= n, got K={K}, n={n}")
    if n <= DENSE_EIGEN_LIMIT:
        values, vectors = np.linalg.eigh(M)
    else:
        # v0 fixed for determinism
        values, vectors = scipy.sparse.linalg.eigsh(M, k=K, which="LM", v0=np.ones(n))
    order = _magnitude_order(values)[:K]
    return EigenPairs(values=values[order], vectors=_fix_signs(vectors[:, order]))


def score_embedding(pairs: EigenPairs, clip: float) -> np.ndarray:
    """Entry-wise ratios of eigenvectors 2..K to the first, clipped to [-clip, clip].

    Pass ``clip = inf`` to disable clipping. Rows where the first eigenvector
    is exactly zero are degenerate; they are pinned at the clip boundary
    (falling back to log(n) when clipping is disabled) and logged.
    """
    vectors = pairs.vectors
    n, K = vectors.shape
    if K < 2:
        raise ConfigError("ratio embedding needs at least 2 eigenvectors")
    if clip <= 0:
        raise ConfigError("clip threshold must be positive")
    lead = vectors[:, 0]
    zero_rows = lead == 0.0
    boundary = clip if math.isfinite(clip) else math.log(max(n, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        R = vectors[:, 1:] / lead[:, None]
    if math.isfinite(clip):
        R = np.clip(R, -clip, clip)
    if np.any(zero_rows):
        log.warning("ratio embedding: %d degenerate rows (zero leading entry) pinned at %g",
                    int(zero_rows.sum()), boundary)
        R[zero_rows] = boundary
    return R


def _lloyd(Xs: np.ndarray, centroids: np.ndarray, max_iter: int, tol: float):
    """Lloyd iterations on canonically-ordered points. Returns (labels0, centroids, wcss)."""
    n, _ = Xs.shape
    K = centroids.shape[0]
    sq_x = (Xs * Xs).sum(axis=1)
    prev = np.inf
    assign = np.zeros(n, dtype=int)
    for _ in range(max_iter):
        d2 = sq_x[:, None] - 2.0 * (Xs @ centroids.T) + (centroids * centroids).sum(axis=1)
        np.maximum(d2, 0.0, out=d2)
        assign = np.argmin(d2, axis=1)
        best = d2[np.arange(n), assign]
        # repair empty clusters: reseed at the point farthest from its centroid
        for k in range(K):
            if not np.any(assign == k):
                far = int(np.argmax(best))
                centroids[k] = Xs[far]
                d2_k = sq_x - 2.0 * (Xs @ centroids[k]) + centroids[k] @ centroids[k]
                closer = d2_k < best
                assign[closer] = k
                best[closer] = d2_k[closer]
        obj = float(best.sum())
        for k in range(K):
            members = assign == k
            if np.any(members):
                centroids[k] = Xs[members].mean(axis=0)
        if prev - obj <= tol:
            break
        prev = obj
    return assign, centroids, obj


def _farthest_point_seeds(Xs: np.ndarray, K: int, first: int) -> np.ndarray:
    """Greedy maximin seeding: after a chosen first point, each next centroid is
    the point farthest from the already-chosen set."""
    n = Xs.shape[0]
    centroids = np.empty((K, Xs.shape[1]))
    centroids[0] = Xs[first]
    mind2 = ((Xs - centroids[0]) ** 2).sum(axis=1)
    for k in range(1, K):
        nxt = int(np.argmax(mind2))
        centroids[k] = Xs[nxt]
        d2 = ((Xs - centroids[k]) ** 2).sum(axis=1)
        np.minimum(mind2, d2, out=mind2)
    return centroids


def kmeans(points: np.ndarray, K: int, restarts: int = 100,
           rng: np.random.Generator | None = None, max_iter: int = 300,
           tol: float = 1e-9, init_labels: np.ndarray | None = None) -> np.ndarray:
    """k-means returning labels in {1..K} from the best of ``restarts`` runs.

    Each restart seeds greedily: a random first centroid, then repeatedly the
    point farthest from the chosen set. Empty clusters are repaired by
    reseeding at the point farthest from its centroid. The computation runs in
    a canonical (sorted) point order and final labels are numbered by centroid
    order, so permuting the input rows permutes the output labels identically
    for the same seed. ``init_labels``, when given, adds one extra descent
    started from the centroids of that labeling.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    if n < K:
        raise ConfigError(f"need at least K={K} points, got {n}")
    if K == 1:
        return np.ones(n, dtype=int)
    if rng is None:
        rng = np.random.default_rng(0)

    # canonical order: results must not depend on input row order
    order = np.lexsort(points.T[::-1])
    Xs = points[order]

    best_obj = np.inf
    best_assign = None
    best_centroids = None
    for _ in range(max(restarts, 1)):
        first = min(int(rng.random() * n), n - 1)
        seeds = _farthest_point_seeds(Xs, K, first)
        assign, cents, obj = _lloyd(Xs, seeds, max_iter, tol)
        if obj < best_obj:
            best_obj, best_assign, best_centroids = obj, assign, cents
    if init_labels is not None:
        init_sorted = np.asarray(init_labels, dtype=int)[order]
        cents = np.empty((K, Xs.shape[1]))
        for k in range(K):
            members = init_sorted == k + 1
            cents[k] = Xs[members].mean(axis=0) if np.any(members) else Xs[0]
        assign, cents, obj = _lloyd(Xs, cents, max_iter, tol)
        if obj < best_obj:
            best_obj, best_assign, best_centroids = obj, assign, cents

    # canonical label numbering: clusters ordered by centroid, lexicographically
    cent_order = np.lexsort(best_centroids.T[::-1])
    relabel = np.empty(K, dtype=int)
    relabel[cent_order] = np.arange(1, K + 1)
    labels = np.empty(n, dtype=int)
    labels[order] = relabel[best_assign]
    return labels


def score_detailed(M: np.ndarray, K: int, clip: float | None = None,
                   rng: np.random.Generator | None = None,
                   restarts: int = 100) -> tuple[np.ndarray, EigenPairs]:
    """Spectral-ratio clustering returning (labels, eigenpairs).

    ``clip=None`` uses the default threshold log(n); pass ``inf`` to disable
    clipping entirely.
    """
    if K < 2:
        raise ConfigError("spectral-ratio clustering needs K >= 2")
    pairs = top_k_eigenpairs(M, K)
    n = pairs.vectors.shape[0]
    threshold = math.log(max(n, 2)) if clip is None else float(clip)
    R = score_embedding(pairs, threshold)
    labels = kmeans(R, K, restarts=restarts, rng=rng)
    return labels, pairs


def score(M: np.ndarray, K: int, clip: float | None = None,
          rng: np.random.Generator | None = None, restarts: int = 100) -> np.ndarray:
    """Community labels from spectral-ratio clustering of a symmetric matrix."""
    labels, _ = score_detailed(M, K, clip=clip, rng=rng, restarts=restarts)
    return labels
