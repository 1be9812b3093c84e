"""End-to-end orchestration over a time-windowed post stream.

Posts are normalized once, split into fixed-length windows, and each
window runs the same stage order: reconstruction-error filtering,
incremental clustering over TF-IDF vectors, embedding-space cluster
pruning, centroid defragmentation, then ranking with keyword
extraction. The reconstruction filter's network is trained once, on
documents that precede train_before_ms, and applied to every later
window.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import autoenc, cluster, defrag, denoise, rank
from .config import PipelineConfig
from .corpus import CleanDoc, RawPost, Window, load_stopwords, preprocess_all, window_split
from .embed import make_provider
from .rank import RankedEvent, RankParams

log = logging.getLogger(__name__)


class PipelineError(Exception):
    """A stage failure, annotated with where it happened."""

    def __init__(self, stage: str, message: str, window_index: int | None = None):
        self.stage = stage
        self.window_index = window_index
        where = f"window {window_index}, " if window_index is not None else ""
        super().__init__(f"{where}stage {stage}: {message}")


@dataclass(frozen=True)
class WindowResult:
    window_index: int
    start_ms: int
    end_ms: int
    n_docs: int
    n_docs_kept: int
    n_clusters: int
    n_pruned: int
    n_merged: int
    events: tuple


@dataclass(frozen=True)
class PipelineResult:
    windows: tuple
    dda_active: bool
    train_losses: tuple

    def events_by_window(self) -> dict:
        return {w.window_index: list(w.events) for w in self.windows}


def _stage(stage: str, window_index: int | None = None):
    class _Context:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is None or isinstance(exc, PipelineError):
                return False
            raise PipelineError(stage, str(exc), window_index) from exc

    return _Context()


def _train_filter(config: PipelineConfig, docs, embeddings):
    """Fit the reconstruction network on pre-cutoff documents, or
    return None when the run has nothing to train on."""
    if not config.dda_enabled:
        return None, ()
    if config.train_before_ms is None:
        log.warning("no train_before_ms configured; reconstruction filter disabled")
        return None, ()
    train_docs = [d for d in docs if d.timestamp < config.train_before_ms]
    if not train_docs:
        log.warning(
            "no documents before train_before_ms=%d; reconstruction filter disabled",
            config.train_before_ms,
        )
        return None, ()
    with _stage("train"):
        data = np.stack([embeddings[d.doc_id] for d in train_docs])
        if data.shape[1] != config.ae_layer_dims[0]:
            raise ValueError(
                f"embedding dim {data.shape[1]} does not match "
                f"ae_layer_dims {list(config.ae_layer_dims)}"
            )
        params = autoenc.init_params(list(config.ae_layer_dims), seed=config.seed)
        result = autoenc.train(
            params,
            data,
            autoenc.TrainConfig(
                epochs=config.ae_epochs,
                batch_size=config.ae_batch_size,
                learning_rate=config.ae_learning_rate,
                seed=config.seed,
            ),
        )
    log.info(
        "trained reconstruction filter on %d docs, loss %.4f -> %.4f",
        len(train_docs),
        result.losses[0],
        result.losses[-1],
    )
    return result.params, tuple(result.losses)


def _window_docs_after_filter(config, window, params, embeddings):
    if params is None:
        return list(window.docs)
    in_training_period = (
        config.train_before_ms is not None and window.end_ms <= config.train_before_ms
    )
    if in_training_period and not config.filter_training_period:
        return list(window.docs)
    scored = autoenc.score_docs(
        params, {d.doc_id: embeddings[d.doc_id] for d in window.docs}
    )
    kept, removed = autoenc.dda_filter(scored, config.theta_dda)
    if removed:
        log.debug(
            "window %d: removed %d of %d docs by reconstruction error",
            window.index,
            len(removed),
            len(scored),
        )
    kept_ids = {s.doc_id for s in kept}
    return [d for d in window.docs if d.doc_id in kept_ids]


def _run_window(config, window, params, embeddings) -> WindowResult:
    with _stage("filter", window.index):
        docs = _window_docs_after_filter(config, window, params, embeddings)

    with _stage("cluster", window.index):
        vocab = cluster.build_vocab(docs)
        vectors = {d.doc_id: cluster.tfidf(d, vocab) for d in docs}
        clusters = cluster.incremental_cluster(
            docs, vectors, config.theta_ic, config.ic_limit
        )

    with _stage("prune", window.index):
        pruned = denoise.prune_all(
            clusters, embeddings, config.theta_sd, config.min_size_after_prune
        )

    with _stage("defrag", window.index):
        merged = defrag.defragment(
            pruned, embeddings, config.k_d, seed=config.seed + window.index
        )

    with _stage("rank", window.index):
        docs_by_id = {d.doc_id: d for d in docs}
        counts = rank.window_term_counts(docs)
        if config.rp_enabled:
            events = rank.rank_events(
                merged,
                docs_by_id,
                counts,
                RankParams(
                    theta_rp=config.theta_rp,
                    count_rp=config.count_rp,
                    beta1=config.beta1,
                    beta2=config.beta2,
                    beta3=config.beta3,
                    m_tokens=config.rank_m_tokens,
                ),
            )
        else:
            events = rank.rank_by_size(merged, docs_by_id, counts, config.beta1)

    return WindowResult(
        window_index=window.index,
        start_ms=window.start_ms,
        end_ms=window.end_ms,
        n_docs=len(window.docs),
        n_docs_kept=len(docs),
        n_clusters=len(clusters),
        n_pruned=len(pruned),
        n_merged=len(merged),
        events=tuple(events),
    )


def run_pipeline(
    config: PipelineConfig, posts: Sequence[RawPost], provider=None
) -> PipelineResult:
    with _stage("normalize"):
        stopwords = load_stopwords(config.stopwords_path)
        docs = preprocess_all(list(posts), stopwords)
    if not docs:
        log.warning("no documents survived normalization")
        return PipelineResult(windows=(), dda_active=False, train_losses=())

    window_len_ms = config.window_minutes * 60_000
    if config.window_start_ms is not None:
        start_ms = config.window_start_ms
    else:
        min_ts = min(d.timestamp for d in docs)
        start_ms = (min_ts // window_len_ms) * window_len_ms
    with _stage("window"):
        windows = window_split(docs, start_ms, window_len_ms)

    with _stage("embed"):
        if provider is None:
            provider = make_provider(
                config.provider,
                dim=config.embed_dim,
                seed=config.seed,
                store_path=config.embeddings_path,
                base_url=config.remote_url,
            )
        embeddings = provider.embed_docs(docs)

    params, losses = _train_filter(config, docs, embeddings)

    results = tuple(
        _run_window(config, window, params, embeddings) for window in windows
    )
    return PipelineResult(
        windows=results, dda_active=params is not None, train_losses=losses
    )


def write_events(result: PipelineResult, path: str | Path) -> None:
    """Line-delimited event records in window order then rank order."""
    with open(path, "w", encoding="utf-8") as fh:
        for window in result.windows:
            for event in window.events:
                record = {
                    "window_index": window.window_index,
                    "rank": event.rank,
                    "score": event.score,
                    "keywords": " ".join(event.keywords),
                    "size": event.size,
                }
                fh.write(json.dumps(record, sort_keys=True) + "\n")


class EventFormatError(Exception):
    pass


def load_events(path: str | Path) -> dict:
    """Read an event report back into per-window ranked event lists."""
    by_window: dict[int, list] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                event = RankedEvent(
                    rank=record["rank"],
                    cluster_id=-1,
                    score=float(record["score"]),
                    keywords=tuple(record["keywords"].split()),
                    size=record["size"],
                )
                window_index = record["window_index"]
                if (
                    not isinstance(window_index, int)
                    or not isinstance(event.rank, int)
                    or not isinstance(event.size, int)
                ):
                    raise TypeError("window_index, rank and size must be integers")
            except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
                raise EventFormatError(f"line {line_no}: {exc}") from exc
            by_window.setdefault(window_index, []).append(event)
    for events in by_window.values():
        events.sort(key=lambda e: e.rank)
    return by_window
