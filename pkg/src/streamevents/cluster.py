"""Term weighting and order-sensitive incremental clustering.

Documents are weighted as raw term count times ln(N/df), L2
normalized, and assigned one at a time: a document joins the best
matching cluster among the most recently updated ones if the cosine
reaches the threshold, otherwise it opens a new cluster. Clusters are
per-window; nothing carries across windows.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import CleanDoc


@dataclass
class Vocabulary:
    """Term to column mapping with document frequencies."""

    index: dict[str, int]
    df: dict[str, int]
    n_docs: int


@dataclass
class SparseVector:
    """Strictly ascending indices with their values."""

    indices: np.ndarray
    values: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


@dataclass
class Cluster:
    id: int
    member_ids: list[str] = field(default_factory=list)
    tfidf_sum: dict[int, float] = field(default_factory=dict)
    last_update_seq: int = 0

    def centroid(self) -> SparseVector:
        """Normalized mean of member vectors."""
        if not self.member_ids:
            raise ValueError("empty cluster has no centroid")
        indices = np.array(sorted(self.tfidf_sum), dtype=int)
        values = np.array(
            [self.tfidf_sum[i] / len(self.member_ids) for i in indices], dtype=float
        )
        n = float(np.linalg.norm(values))
        if n > 0.0:
            values = values / n
        return SparseVector(indices=indices, values=values)


def build_vocab(docs: list[CleanDoc]) -> Vocabulary:
    """Assign lexicographic column order and count document frequency."""
    df: Counter[str] = Counter()
    for doc in docs:
        df.update(set(doc.tokens))
    index = {term: i for i, term in enumerate(sorted(df))}
    return Vocabulary(index=index, df=dict(df), n_docs=len(docs))


def tfidf(doc: CleanDoc, vocab: Vocabulary) -> SparseVector:
    """Weight a document against a vocabulary.

    Weight is count * ln(N/df), L2 normalized. A document whose terms
    all carry zero idf degenerates to uniform weight over its distinct
    terms, so every document keeps a usable direction. Terms missing
    from the vocabulary are a caller error.
    """
    counts = Counter(doc.tokens)
    for term in counts:
        if term not in vocab.index:
            raise ValueError(f"term {term!r} not in vocabulary")
    items = sorted((vocab.index[t], t) for t in counts)
    indices = np.array([i for i, _ in items], dtype=int)
    weights = np.array(
        [
            counts[t] * math.log(vocab.n_docs / vocab.df[t])
            for _, t in items
        ],
        dtype=float,
    )
    norm = float(np.linalg.norm(weights))
    if norm == 0.0:
        weights = np.full(len(items), 1.0 / math.sqrt(len(items)))
    else:
        weights = weights / norm
    return SparseVector(indices=indices, values=weights)


def cosine(a: SparseVector, b: SparseVector) -> float:
    """Cosine over the index intersection; zero vectors give 0."""
    dot = 0.0
    i = j = 0
    ai, av = a.indices, a.values
    bi, bv = b.indices, b.values
    while i < len(ai) and j < len(bi):
        if ai[i] == bi[j]:
            dot += av[i] * bv[j]
            i += 1
            j += 1
        elif ai[i] < bi[j]:
            i += 1
        else:
            j += 1
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


def incremental_cluster(
    docs: list[CleanDoc],
    vectors: dict[str, SparseVector],
    theta_ic: float,
    ic_limit: int,
) -> list[Cluster]:
    """Single-pass assignment in document order.

    For each document the candidate set is the ic_limit most recently
    updated clusters. The document joins the candidate with the
    highest centroid cosine when that reaches theta_ic/100 (ties go to
    the lowest cluster id); otherwise it starts a new cluster. Cluster
    ids count up from 0 in creation order.
    """
    if not 0 <= theta_ic <= 100:
        raise ValueError("theta_ic must be a percentage in [0, 100]")
    if ic_limit < 1:
        raise ValueError("ic_limit must be at least 1")
    threshold = theta_ic / 100.0
    clusters: list[Cluster] = []
    seq = 0
    for doc in docs:
        vec = vectors[doc.doc_id]
        candidates = sorted(
            clusters, key=lambda c: c.last_update_seq, reverse=True
        )[:ic_limit]
        best = None
        best_sim = -1.0
        for cand in candidates:
            sim = cosine(vec, cand.centroid())
            if sim > best_sim or (sim == best_sim and best and cand.id < best.id):
                best = cand
                best_sim = sim
        seq += 1
        if best is not None and best_sim >= threshold:
            best.member_ids.append(doc.doc_id)
            for i, v in zip(vec.indices, vec.values):
                best.tfidf_sum[int(i)] = best.tfidf_sum.get(int(i), 0.0) + float(v)
            best.last_update_seq = seq
        else:
            cl = Cluster(id=len(clusters), member_ids=[doc.doc_id])
            cl.tfidf_sum = {
                int(i): float(v) for i, v in zip(vec.indices, vec.values)
            }
            cl.last_update_seq = seq
            clusters.append(cl)
    return clusters


def dump_clusters(clusters: list[Cluster], path: str | Path) -> None:
    """Debug dump, one record per cluster."""
    with open(path, "w", encoding="utf-8") as fh:
        for cl in clusters:
            fh.write(
                json.dumps(
                    {"cluster_id": cl.id, "member_ids": list(cl.member_ids)}
                )
                + "\n"
            )
