"""Choosing the number of clusters by bootstrap loss rank.

The loss of a K-cluster fit is the within-cluster sum of pairwise
dissimilarities. Its loss rank is the fraction of bootstrap resamples that,
re-clustered from scratch with the same K, reach a loss no larger than the
actual data. The Calinski-Harabasz index is provided as the baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numba import njit
from scipy.spatial.distance import pdist

from .resampling import LossRankEstimate, SeedLike, as_generator, as_seedspec, bootstrap_rows

__all__ = [
    "Clustering",
    "UndefinedCriterionError",
    "kmeans",
    "lloyd",
    "within_dissimilarity",
    "within_sum_of_squares",
    "ch_criterion",
    "loss_rank_clusters",
    "select_num_clusters",
    "generate_gaussian_clusters",
]


class UndefinedCriterionError(ValueError):
    """Raised when a criterion is evaluated outside its domain (e.g. CH at K=1)."""


@dataclass(frozen=True)
class Clustering:
    """Hard assignment of points to ``K`` clusters.

    ``assignment`` holds 0-based cluster ids; ``objective`` is the K-means
    objective (sum of squared distances to the cluster centroids).
    """

    assignment: np.ndarray
    K: int
    objective: float

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        if a.ndim != 1 or self.K < 1 or self.K > max(a.size, 1):
            raise ValueError("invalid clustering")
        if a.size and (a.min() < 0 or a.max() >= self.K):
            raise ValueError("cluster ids out of range")
        if self.objective < 0:
            raise ValueError("objective must be nonnegative")
        object.__setattr__(self, "assignment", a)


def _as_points(points) -> np.ndarray:
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError("points must be an (n, d) array with n, d >= 1")
    if not np.all(np.isfinite(X)):
        raise ValueError("points must be finite")
    return X


@njit(cache=True)
def _sq(a, b):
    total = 0.0
    for j in range(a.shape[0]):
        diff = a[j] - b[j]
        total += diff * diff
    return total


@njit(cache=True)
def _seed_pp(X, K, first, u, fallback):
    """k-means++ centres from pre-drawn uniforms (keeps draws on the caller's stream)."""
    n, d = X.shape
    C = np.empty((K, d))
    C[0] = X[first]
    best = np.empty(n)
    for i in range(n):
        best[i] = _sq(X[i], C[0])
    for k in range(1, K):
        total = best.sum()
        pick = fallback[k]
        if total > 0.0:
            target = u[k] * total
            acc = 0.0
            pick = n - 1
            for i in range(n):
                acc += best[i]
                if acc > target:
                    pick = i
                    break
        C[k] = X[pick]
        for i in range(n):
            dk = _sq(X[i], C[k])
            if dk < best[i]:
                best[i] = dk
    return C


@njit(cache=True)
def _assign(X, C, labels, own):
    n, K = X.shape[0], C.shape[0]
    changed = False
    for i in range(n):
        bk, bd = 0, _sq(X[i], C[0])
        for k in range(1, K):
            dk = _sq(X[i], C[k])
            if dk < bd:
                bk, bd = k, dk
        if labels[i] != bk:
            changed = True
        labels[i] = bk
        own[i] = bd
    return changed


@njit(cache=True)
def _lloyd_core(X, C, max_iter):
    """Lloyd iterations with empty-cluster repair; returns labels and objective history."""
    n, d = X.shape
    K = C.shape[0]
    C = C.copy()
    labels = np.full(n, -1, dtype=np.int64)
    own = np.empty(n)
    _assign(X, C, labels, own)
    history = np.empty(max_iter)
    counts = np.zeros(K, dtype=np.int64)
    it = 0
    for it in range(max_iter):
        counts[:] = 0
        for i in range(n):
            counts[labels[i]] += 1
        for k in range(K):
            if counts[k] == 0:
                # farthest point among clusters that keep another member
                far, fd = -1, -1.0
                for i in range(n):
                    if counts[labels[i]] > 1 and own[i] > fd:
                        far, fd = i, own[i]
                if far >= 0:
                    counts[labels[far]] -= 1
                    counts[k] = 1
                    labels[far] = k
                    own[far] = 0.0
        C[:] = 0.0
        for i in range(n):
            C[labels[i]] += X[i]
        for k in range(K):
            if counts[k] > 0:
                C[k] /= counts[k]
        changed = _assign(X, C, labels, own)
        history[it] = own.sum()
        if not changed:
            break
    return labels, history[: it + 1]


@njit(cache=True)
def _ss(X, labels, K):
    n, d = X.shape
    sums = np.zeros((K, d))
    counts = np.zeros(K)
    for i in range(n):
        sums[labels[i]] += X[i]
        counts[labels[i]] += 1.0
    total = 0.0
    for i in range(n):
        k = labels[i]
        for j in range(d):
            diff = X[i, j] - sums[k, j] / counts[k]
            total += diff * diff
    return total


@njit(cache=True)
def _hartigan(X, labels, K, max_sweeps):
    """Single-point transfers that strictly lower the objective (Hartigan's rule).

    Moving point i from A to B changes the objective by
    n_B/(n_B+1)|x_i-c_B|^2 - n_A/(n_A-1)|x_i-c_A|^2. A Hartigan-stable
    partition is also a Lloyd fixed point, so this only refines.
    """
    n, d = X.shape
    labels = labels.copy()
    counts = np.zeros(K)
    sums = np.zeros((K, d))
    for i in range(n):
        counts[labels[i]] += 1.0
        sums[labels[i]] += X[i]
    cent = np.empty((K, d))
    for k in range(K):
        cent[k] = sums[k] / counts[k]
    for _ in range(max_sweeps):
        moved = False
        for i in range(n):
            a = labels[i]
            if counts[a] <= 1.0:
                continue
            stay = counts[a] / (counts[a] - 1.0) * _sq(X[i], cent[a])
            best_b, best_cost = -1, stay - 1e-12 * max(stay, 1.0)
            for b in range(K):
                if b != a:
                    cost = counts[b] / (counts[b] + 1.0) * _sq(X[i], cent[b])
                    if cost < best_cost:
                        best_b, best_cost = b, cost
            if best_b >= 0:
                b = best_b
                sums[a] -= X[i]
                counts[a] -= 1.0
                sums[b] += X[i]
                counts[b] += 1.0
                cent[a] = sums[a] / counts[a]
                cent[b] = sums[b] / counts[b]
                labels[i] = b
                moved = True
        if not moved:
            break
    return labels


@njit(cache=True)
def _best_of_restarts(X, K, first, u, fallback, max_iter):
    best_obj = np.inf
    best = np.zeros(X.shape[0], dtype=np.int64)
    for r in range(first.shape[0]):
        labels, _ = _lloyd_core(X, _seed_pp(X, K, first[r], u[r], fallback[r]), max_iter)
        labels = _hartigan(X, labels, K, max_iter)
        obj = _ss(X, labels, K)
        if obj < best_obj:
            best_obj, best = obj, labels
    return best, best_obj


def lloyd(points, init_centers, max_iter: int = 300):
    """Run Lloyd iterations from given centres.

    Returns
    -------
    assignment : ndarray
    centers : ndarray
        Means of the final clusters.
    history : list of float
        K-means objective after each iteration; nonincreasing.
    """
    X = _as_points(points)
    C = np.asarray(init_centers, dtype=float).reshape(-1, X.shape[1])
    labels, history = _lloyd_core(X, C, max_iter)
    centers = np.array([X[labels == k].mean(0) if np.any(labels == k) else C[k] for k in range(C.shape[0])])
    return labels, centers, [float(h) for h in history]


def within_sum_of_squares(points, assignment, K: Optional[int] = None) -> float:
    """Sum of squared distances from each point to its cluster centroid."""
    X = _as_points(points)
    a = np.asarray(assignment, dtype=np.int64)
    K = int(a.max()) + 1 if K is None else K
    sizes = np.bincount(a, minlength=K).astype(float)
    sums = np.zeros((K, X.shape[1]))
    np.add.at(sums, a, X)
    nonempty = sizes > 0
    cent = np.zeros_like(sums)
    cent[nonempty] = sums[nonempty] / sizes[nonempty, None]
    return float(((X - cent[a]) ** 2).sum())


def kmeans(points, K: int, restarts: int = 10, seed: SeedLike = 0) -> Clustering:
    """Best-of-``restarts`` k-means with k-means++ seeding.

    Each restart runs Lloyd's algorithm, repairing empty clusters by
    reseeding them at the point farthest from its current centre, then
    polishes the result with Hartigan single-point transfers. The polish
    escapes Lloyd fixed points that no data-point seeding can avoid, which
    matters on bootstrap resamples with many duplicated rows.
    """
    X = _as_points(points)
    n = X.shape[0]
    if int(K) != K or K < 1:
        raise ValueError(f"K must be a positive integer, got {K}")
    if K > n:
        raise ValueError(f"K={K} exceeds the number of points n={n}")
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    K = int(K)
    if K == 1:
        return Clustering(np.zeros(n, dtype=np.int64), 1, float(((X - X.mean(0)) ** 2).sum()))
    rng = as_generator(seed)
    first = rng.integers(0, n, size=restarts)
    u = rng.random((restarts, K))
    fallback = rng.integers(0, n, size=(restarts, K))
    labels, obj = _best_of_restarts(X, K, first, u, fallback, 300)
    return Clustering(labels, K, max(float(obj), 0.0))


def within_dissimilarity(points, clustering: Clustering, metric: Optional[Callable] = None) -> float:
    """Half the sum, over ordered pairs inside each cluster, of the dissimilarity.

    ``metric`` defaults to squared Euclidean distance. A custom metric is any
    callable accepted by :func:`scipy.spatial.distance.pdist`.
    """
    X = _as_points(points)
    a = clustering.assignment
    if a.size != X.shape[0]:
        raise ValueError(f"clustering covers {a.size} points, data has {X.shape[0]}")
    metric = "sqeuclidean" if metric is None else metric
    total = 0.0
    for k in range(clustering.K):
        members = X[a == k]
        if members.shape[0] > 1:
            # pdist lists each unordered pair once: exactly half the ordered sum
            total += float(pdist(members, metric).sum())
    return total


def ch_criterion(points, clustering: Clustering) -> float:
    """Calinski-Harabasz index from the between/within sum-of-squares split."""
    X = _as_points(points)
    n, K = X.shape[0], clustering.K
    if clustering.assignment.size != n:
        raise ValueError(f"clustering covers {clustering.assignment.size} points, data has {n}")
    if K < 2:
        raise UndefinedCriterionError("the Calinski-Harabasz index is not defined for K=1")
    if K >= n:
        raise UndefinedCriterionError("the Calinski-Harabasz index needs K < n")
    total = float(((X - X.mean(0)) ** 2).sum())
    within = within_sum_of_squares(X, clustering.assignment, K)
    between = total - within
    if within == 0.0:
        return np.inf
    return (between / (K - 1)) / (within / (n - K))


def loss_rank_clusters(
    points,
    K: int,
    B: int = 200,
    restarts: int = 10,
    seed: SeedLike = 0,
    metric: Optional[Callable] = None,
) -> LossRankEstimate:
    """Bootstrap loss rank of a ``K``-cluster fit.

    ``seed`` must be addressable: sub-stream 0 fits the actual data, sub-stream
    ``(1, b)`` draws and re-fits resample ``b``.
    """
    X = _as_points(points)
    if B < 1:
        raise ValueError("B must be at least 1")
    base = as_seedspec(seed)
    actual = within_dissimilarity(X, kmeans(X, K, restarts, base.child(0)), metric)
    rows = bootstrap_rows(X.shape[0], base.child(1), size=B)
    # resamples that permute the data tie with it up to summation order
    threshold = actual + 1e-9 * max(1.0, abs(actual))
    hits = 0
    for b in range(B):
        Xb = X[rows[b]]
        fit = kmeans(Xb, K, restarts, base.child(2, b))
        hits += within_dissimilarity(Xb, fit, metric) <= threshold
    return LossRankEstimate(int(hits), B)


def select_num_clusters(
    points,
    K_max: int,
    B: int = 200,
    restarts: int = 10,
    seed: SeedLike = 0,
    criterion: str = "LR",
) -> int:
    """Number of clusters chosen by loss rank (argmin over 1..K_max) or CH (argmax over 2..K_max).

    Ties go to the smaller K. Candidate ``K`` uses sub-stream ``K`` of ``seed``.
    """
    X = _as_points(points)
    if K_max > X.shape[0]:
        raise ValueError("K_max exceeds the number of points")
    crit = criterion.upper()
    base = as_seedspec(seed)
    if crit == "LR":
        hits = [loss_rank_clusters(X, K, B, restarts, base.child(K)).hits for K in range(1, K_max + 1)]
        return int(np.argmin(hits)) + 1
    if crit == "CH":
        if K_max < 2:
            raise UndefinedCriterionError("CH needs K_max >= 2")
        scores = [ch_criterion(X, kmeans(X, K, restarts, base.child(K, 0))) for K in range(2, K_max + 1)]
        return int(np.argmax(scores)) + 2
    raise ValueError(f"unknown criterion {criterion!r}; expected 'LR' or 'CH'")


def generate_gaussian_clusters(means, sigma: float, per_cluster: int, seed: SeedLike = 0) -> np.ndarray:
    """Concatenated blocks of ``per_cluster`` draws from N(mean, sigma**2 I)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    means = np.atleast_2d(np.asarray(means, dtype=float))
    rng = as_generator(seed)
    blocks = [mu + sigma * rng.standard_normal((per_cluster, means.shape[1])) for mu in means]
    return np.concatenate(blocks, axis=0)
