"""Congregation of fragmented clusters.

The clustering pass tends to split one real-world event across
several clusters. Cluster centroids are themselves clustered with
k-means in embedding space, and source clusters landing in the same
cell are merged. When there are no more clusters than cells the step
is the identity.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .denoise import DataIntegrityError, PrunedCluster

logger = logging.getLogger(__name__)


@dataclass
class KMeansResult:
    centers: np.ndarray
    labels: np.ndarray
    inertia: float
    inertia_trace: list[float]
    n_iter: int


@dataclass
class MergedCluster:
    """Union of source clusters assigned to one cell.

    id is the smallest source cluster id; emb_centroid is recomputed
    as the mean embedding over all surviving members.
    """

    id: int
    member_ids: list[str]
    source_ids: list[int]
    emb_centroid: np.ndarray


def _pairwise_sq_dist(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centers[None, :, :]
    return np.sum(diff * diff, axis=2)


def _seed_centers(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Spread-out seeding: start uniform, then sample proportional to
    squared distance from the chosen set. Degenerate weights fall back
    to the first unchosen point."""
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    while len(chosen) < k:
        total = float(d2.sum())
        if total == 0.0:
            for i in range(n):
                if i not in chosen:
                    chosen.append(i)
                    break
            else:  # pragma: no cover - k <= n is checked by caller
                raise ValueError("not enough points to seed")
            d2 = np.minimum(d2, np.sum((points - points[chosen[-1]]) ** 2, axis=1))
            continue
        pick = int(rng.choice(n, p=d2 / total))
        chosen.append(pick)
        d2 = np.minimum(d2, np.sum((points - points[pick]) ** 2, axis=1))
    return points[chosen].copy()


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = 100,
    initial_centers: np.ndarray | None = None,
) -> KMeansResult:
    """Lloyd iterations with squared Euclidean distance.

    Ties in assignment go to the lowest center index. A center left
    with no points is moved onto the point currently farthest from
    its assigned center. The within-cluster sum of squares is
    recorded each iteration and asserted non-increasing; iteration
    stops when assignments stabilize or max_iter is hit.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("points must be a non-empty 2d array")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    rng = np.random.default_rng(seed)
    if initial_centers is not None:
        centers = np.asarray(initial_centers, dtype=float).copy()
        if centers.shape != (k, points.shape[1]):
            raise ValueError("initial_centers shape mismatch")
    else:
        centers = _seed_centers(points, k, rng)
    labels = None
    trace: list[float] = []
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        d2 = _pairwise_sq_dist(points, centers)
        new_labels = np.argmin(d2, axis=1)
        inertia = float(d2[np.arange(n), new_labels].sum())
        if trace:
            assert inertia <= trace[-1] + 1e-9, "inertia increased"
        trace.append(inertia)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        point_dist = d2[np.arange(n), labels]
        reseeded: set[int] = set()
        for c in range(k):
            mask = labels == c
            if mask.any():
                centers[c] = points[mask].mean(axis=0)
            else:
                order = np.argsort(-point_dist, kind="stable")
                for idx in order:
                    if int(idx) not in reseeded:
                        centers[c] = points[int(idx)]
                        reseeded.add(int(idx))
                        break
    return KMeansResult(
        centers=centers,
        labels=labels,
        inertia=trace[-1],
        inertia_trace=trace,
        n_iter=iterations,
    )


def _mean_embedding(member_ids: list[str], embeddings: dict[str, np.ndarray]) -> np.ndarray:
    rows = []
    for mid in member_ids:
        vec = embeddings.get(mid)
        if vec is None:
            raise DataIntegrityError(f"no embedding for cluster member {mid!r}")
        rows.append(vec)
    return np.mean(np.stack(rows), axis=0)


def defragment(
    pruned: list[PrunedCluster],
    embeddings: dict[str, np.ndarray],
    k_d: int,
    seed: int = 0,
) -> list[MergedCluster]:
    """Merge clusters whose centroids share a k-means cell.

    With at most k_d clusters the mapping is the identity (each
    cluster maps to itself). Merged ids take the smallest source id;
    the member union is disjoint because sources are disjoint. Output
    is ordered by merged id.
    """
    if k_d < 1:
        raise ValueError("k_d must be at least 1")
    if not pruned:
        return []
    if len(pruned) <= k_d:
        groups = [[cl] for cl in pruned]
    else:
        centroids = np.stack([cl.emb_centroid for cl in pruned])
        result = kmeans(centroids, k_d, seed=seed)
        by_label: dict[int, list[PrunedCluster]] = {}
        for cl, label in zip(pruned, result.labels):
            by_label.setdefault(int(label), []).append(cl)
        groups = list(by_label.values())
    merged = []
    for group in groups:
        member_ids = [mid for cl in group for mid in cl.member_ids]
        source_ids = sorted(cl.id for cl in group)
        merged.append(
            MergedCluster(
                id=source_ids[0],
                member_ids=member_ids,
                source_ids=source_ids,
                emb_centroid=_mean_embedding(member_ids, embeddings),
            )
        )
    merged.sort(key=lambda m: m.id)
    return merged
