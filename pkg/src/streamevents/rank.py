"""Per-window event ranking and keyword selection.

Clusters that survive pruning and defragmentation are scored from the
frequency of their terms within the window, low-frequency terms are
filtered out of the keyword pool, and each ranked event reports a
rank-dependent number of keywords.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .corpus import CleanDoc
from .defrag import MergedCluster
from .denoise import DataIntegrityError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RankParams:
    theta_rp: float = 80.0
    count_rp: int = 0
    beta1: int = 3
    beta2: int = 25
    beta3: int = 3
    # divide the summed term weight by total token occurrences in the
    # cluster instead of by the number of distinct terms
    m_tokens: bool = False


@dataclass(frozen=True)
class RankedEvent:
    rank: int
    cluster_id: int
    score: float
    keywords: tuple[str, ...]
    size: int


def window_term_counts(docs: Iterable[CleanDoc]) -> Counter:
    """Total occurrences of every term across the window's documents."""
    counts: Counter = Counter()
    for doc in docs:
        counts.update(doc.tokens)
    return counts


def cluster_term_counts(
    cluster: MergedCluster, docs_by_id: Mapping[str, CleanDoc]
) -> Counter:
    counts: Counter = Counter()
    for doc_id in cluster.member_ids:
        doc = docs_by_id.get(doc_id)
        if doc is None:
            raise DataIntegrityError(f"cluster {cluster.id}: no document {doc_id!r}")
        counts.update(doc.tokens)
    return counts


def cluster_word_score(
    cluster_counts: Mapping[str, int],
    window_counts: Mapping[str, int],
    m_tokens: bool = False,
) -> float:
    """Mean window frequency of the cluster's token occurrences.

    Every token occurrence inside the cluster contributes the term's
    window-wide occurrence count; the sum is divided by the number of
    distinct cluster terms (or by total occurrences with m_tokens).
    """
    if not cluster_counts:
        raise ValueError("cluster has no terms")
    total = 0.0
    for term, cnt in cluster_counts.items():
        total += cnt * window_counts.get(term, 0)
    m = sum(cluster_counts.values()) if m_tokens else len(cluster_counts)
    return total / m


def cluster_score(word_score: float, size: int) -> float:
    """ln(word score) * ln(cluster size), word scores below 1 clamped."""
    if size < 1:
        raise ValueError(f"cluster size must be positive, got {size}")
    if word_score < 1.0:
        log.warning("word score %.4f below 1, clamping", word_score)
        word_score = 1.0
    return math.log(word_score) * math.log(size)


def filter_infrequent(window_counts: Mapping[str, int], theta_rp: float) -> set:
    """Keep the most frequent (100 - theta_rp) percent of window terms.

    Terms are ordered by count ascending, ties broken lexicographically,
    and the first floor(theta_rp * T / 100) positions are removed.
    """
    if not 0.0 <= theta_rp <= 100.0:
        raise ValueError(f"theta_rp must be in [0, 100], got {theta_rp}")
    items = sorted(window_counts.items(), key=lambda kv: (kv[1], kv[0]))
    t = len(items)
    if float(theta_rp).is_integer():
        cut = (int(theta_rp) * t) // 100
    else:
        cut = math.floor(theta_rp * t / 100.0)
    return {term for term, _ in items[cut:]}


def keyword_budget(rank: int, beta1: int, beta2: int, beta3: int) -> int:
    """Number of keywords reported at a given rank."""
    if rank < 1:
        raise ValueError(f"rank must be >= 1, got {rank}")
    if beta3 < 1:
        raise ValueError(f"beta3 must be >= 1, got {beta3}")
    return beta1 + beta2 * (rank // beta3)


def rank_events(
    clusters: Sequence[MergedCluster],
    docs_by_id: Mapping[str, CleanDoc],
    window_counts: Mapping[str, int],
    params: RankParams,
) -> list:
    """Order clusters by score and attach their keyword lists.

    Keywords come from the frequent-term pool only; clusters left with
    fewer than count_rp pool terms are dropped before final ranking.
    Each event's keywords are ordered by occurrence count inside the
    cluster, most frequent first, ties broken lexicographically.
    """
    scored = []
    for cluster in clusters:
        counts = cluster_term_counts(cluster, docs_by_id)
        ws = cluster_word_score(counts, window_counts, params.m_tokens)
        score = cluster_score(ws, len(cluster.member_ids))
        scored.append((score, cluster, counts))
    scored.sort(key=lambda item: (-item[0], item[1].id))

    frequent = filter_infrequent(window_counts, params.theta_rp)
    kept = []
    for score, cluster, counts in scored:
        pool = [term for term in counts if term in frequent]
        if len(pool) < params.count_rp:
            continue
        kept.append((score, cluster, counts, pool))

    events = []
    for rank, (score, cluster, counts, pool) in enumerate(kept, start=1):
        budget = keyword_budget(rank, params.beta1, params.beta2, params.beta3)
        ordered = sorted(pool, key=lambda term: (-counts[term], term))
        events.append(
            RankedEvent(
                rank=rank,
                cluster_id=cluster.id,
                score=score,
                keywords=tuple(ordered[:budget]),
                size=len(cluster.member_ids),
            )
        )
    return events


def rank_by_size(
    clusters: Sequence[MergedCluster],
    docs_by_id: Mapping[str, CleanDoc],
    window_counts: Mapping[str, int],
    beta1: int,
) -> list:
    """Fallback ranking with scoring disabled: order clusters by member
    count and report the beta1 most window-frequent cluster terms."""
    ordered = sorted(clusters, key=lambda cl: (-len(cl.member_ids), cl.id))
    events = []
    for rank, cluster in enumerate(ordered, start=1):
        counts = cluster_term_counts(cluster, docs_by_id)
        terms = sorted(counts, key=lambda t: (-window_counts.get(t, 0), t))
        events.append(
            RankedEvent(
                rank=rank,
                cluster_id=cluster.id,
                score=float(len(cluster.member_ids)),
                keywords=tuple(terms[:beta1]),
                size=len(cluster.member_ids),
            )
        )
    return events
