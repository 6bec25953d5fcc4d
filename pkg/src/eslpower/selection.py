"""Evenly spread antenna subsets by k-means on ceiling coordinates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import make_rng
from .errors import DomainError


@dataclass(frozen=True, eq=False)
class KMeansResult:
    centroids: np.ndarray
    assignment: np.ndarray
    iterations: int


@dataclass(frozen=True, eq=False)
class SelectionResult:
    chosen_indices: np.ndarray
    centroids: np.ndarray
    iterations: int
    seed: int


def _sq_dist(points, centers):
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)


def _kmeans_pp(points, k, rng):
    n = len(points)
    chosen = [int(rng.integers(n))]
    d2 = _sq_dist(points, points[chosen]).min(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            # Remaining points coincide with centers; take the first unused one.
            idx = next(i for i in range(n) if i not in chosen)
        else:
            idx = int(rng.choice(n, p=d2 / total))
        chosen.append(idx)
        d2 = np.minimum(d2, _sq_dist(points, points[[idx]])[:, 0])
    return points[chosen].copy()


def kmeans_cluster(points, k: int, seed: int = 0, *, max_iter: int = 300,
                   tol: float = 1e-9) -> KMeansResult:
    """Lloyd's algorithm from a k-means++ start.

    Stops once no centroid moves by ``tol`` or more. A cluster that empties
    is restarted at the point farthest from its current centroid.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if not 1 <= k <= n:
        raise DomainError(f"k must lie in [1, {n}], got {k}")
    rng = make_rng(seed)
    centroids = _kmeans_pp(points, k, rng)
    assignment = np.zeros(n, dtype=int)
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sq_dist(points, centroids)
        assignment = np.argmin(d2, axis=1)
        counts = np.bincount(assignment, minlength=k)
        for c in np.flatnonzero(counts == 0):
            own = d2[np.arange(n), assignment]
            far = int(np.argmax(own))
            assignment[far] = c
            d2[far] = 0.0
            counts = np.bincount(assignment, minlength=k)
        new = np.array([points[assignment == c].mean(axis=0) for c in range(k)])
        shift = np.sqrt(((new - centroids) ** 2).sum(axis=1)).max()
        centroids = new
        if shift < tol:
            break
    return KMeansResult(centroids, assignment, it)


def select_subset(layout, m_s: int, seed: int = 0) -> SelectionResult:
    """Pick ``m_s`` antennas, each the nearest free antenna to one cluster center.

    Centre/antenna pairs are matched greedily in order of increasing distance,
    so a contested antenna goes to the closer center and the other center falls
    back to its nearest unclaimed antenna.
    """
    positions = np.asarray(layout.positions, dtype=float)[:, :2]
    M = len(positions)
    if not 1 <= m_s <= M:
        raise DomainError(f"m_s must lie in [1, {M}], got {m_s}")
    km = kmeans_cluster(positions, m_s, seed)
    d2 = _sq_dist(km.centroids, positions)
    order = np.lexsort((np.tile(np.arange(M), m_s), np.repeat(np.arange(m_s), M), d2.ravel()))
    center_taken = np.zeros(m_s, dtype=bool)
    antenna_taken = np.zeros(M, dtype=bool)
    match = np.empty(m_s, dtype=int)
    for flat in order:
        c, a = divmod(int(flat), M)
        if center_taken[c] or antenna_taken[a]:
            continue
        match[c] = a
        center_taken[c] = antenna_taken[a] = True
        if center_taken.all():
            break
    by_antenna = np.argsort(match)
    return SelectionResult(match[by_antenna], km.centroids[by_antenna], km.iterations, seed)
