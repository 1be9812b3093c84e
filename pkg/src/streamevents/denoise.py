"""Embedding-space cluster pruning.

Each cluster's members are compared against the cluster mean in the
document embedding space; members that sit too far from the mean are
dropped, and clusters that are too small to be meaningful are
discarded outright. This removes loosely attached documents the term
weighting stage let in.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .cluster import Cluster

logger = logging.getLogger(__name__)

MIN_CLUSTER_SIZE = 3


class DataIntegrityError(Exception):
    """A cluster member has no embedding vector."""


@dataclass
class PrunedCluster:
    """Cluster after pruning.

    member_ids holds the survivors in original order; emb_centroid is
    the mean embedding of the cluster as it arrived, before any
    member was dropped; source_size is its original member count.
    """

    id: int
    member_ids: list[str]
    emb_centroid: np.ndarray
    source_size: int


def centroid(vectors: list[np.ndarray]) -> np.ndarray:
    """Plain mean of a non-empty vector list."""
    if not vectors:
        raise ValueError("cannot average zero vectors")
    return np.mean(np.stack(vectors), axis=0)


def _cos(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b) / (na * nb)


def prune_cluster(
    cl: Cluster,
    embeddings: dict[str, np.ndarray],
    theta_sd: float,
    min_size_after_prune: bool = False,
) -> PrunedCluster | None:
    """Prune one cluster; None means the cluster is discarded.

    A member survives when its cosine against the source mean is
    strictly above theta_sd/100. By default clusters below
    MIN_CLUSTER_SIZE source members are discarded before their
    survivors are considered; with min_size_after_prune the size test
    moves to the survivor count instead. A cluster losing every
    member is discarded either way.
    """
    if not -100 <= theta_sd <= 100:
        raise ValueError("theta_sd must be a percentage in [-100, 100]")
    vectors = []
    for mid in cl.member_ids:
        vec = embeddings.get(mid)
        if vec is None:
            raise DataIntegrityError(f"no embedding for cluster member {mid!r}")
        vectors.append(vec)
    mu = centroid(vectors)
    threshold = theta_sd / 100.0
    survivors = [
        mid for mid, vec in zip(cl.member_ids, vectors) if _cos(mu, vec) > threshold
    ]
    size_basis = len(survivors) if min_size_after_prune else len(cl.member_ids)
    if size_basis < MIN_CLUSTER_SIZE:
        return None
    if not survivors:
        return None
    return PrunedCluster(
        id=cl.id,
        member_ids=survivors,
        emb_centroid=mu,
        source_size=len(cl.member_ids),
    )


def prune_all(
    clusters: list[Cluster],
    embeddings: dict[str, np.ndarray],
    theta_sd: float,
    min_size_after_prune: bool = False,
) -> list[PrunedCluster]:
    """Prune every cluster, dropping the discarded ones."""
    out = []
    discarded = 0
    for cl in clusters:
        pruned = prune_cluster(cl, embeddings, theta_sd, min_size_after_prune)
        if pruned is None:
            discarded += 1
        else:
            out.append(pruned)
    if discarded:
        logger.debug("discarded %d of %d clusters", discarded, len(clusters))
    return out
