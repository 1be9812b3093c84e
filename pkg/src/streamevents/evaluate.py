"""Scoring detected events against annotated reference topics.

A reference topic labels each of its keywords mandatory, optional, or
forbidden. An event matches a topic when its keywords cover all the
mandatory terms and none of the forbidden ones. Topic recall at K asks
how many topics the top K events match; keyword precision at 2 asks
what fraction of the top two events' keywords are sanctioned by any
topic of the window.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import normalize_term
from .rank import RankedEvent

log = logging.getLogger(__name__)

DEFAULT_KS = (2, 4, 6, 8, 10)


class GoldenFormatError(Exception):
    pass


@dataclass(frozen=True)
class GoldenTopic:
    window_id: int
    mandatory: frozenset
    optional: frozenset
    forbidden: frozenset


@dataclass(frozen=True)
class WindowScores:
    window_id: int
    n_topics: int
    n_events: int
    recall_at: dict
    keyword_precision: float | None


@dataclass(frozen=True)
class EvalReport:
    windows: tuple
    recall_at: dict
    keyword_precision: float | None


def _normalize_set(raw, line_no: int, name: str) -> frozenset:
    if not isinstance(raw, list) or not all(isinstance(t, str) for t in raw):
        raise GoldenFormatError(f"line {line_no}: {name} must be a list of strings")
    out = set()
    for term in raw:
        norm = normalize_term(term)
        if not norm:
            raise GoldenFormatError(
                f"line {line_no}: {name} term {term!r} normalizes to nothing"
            )
        out.add(norm)
    return frozenset(out)


def load_goldens(path: str | Path) -> list:
    """Read reference topics from line-delimited JSON records.

    Each record carries window_id plus mandatory, optional and
    forbidden term lists. Terms are normalized and stemmed on load so
    files may be written in natural surface forms.
    """
    topics = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise GoldenFormatError(f"line {line_no}: bad JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise GoldenFormatError(f"line {line_no}: not an object")
            window_id = record.get("window_id")
            if not isinstance(window_id, int) or isinstance(window_id, bool):
                raise GoldenFormatError(f"line {line_no}: window_id must be an integer")
            mandatory = _normalize_set(record.get("mandatory"), line_no, "mandatory")
            optional = _normalize_set(record.get("optional", []), line_no, "optional")
            forbidden = _normalize_set(record.get("forbidden", []), line_no, "forbidden")
            if not mandatory:
                raise GoldenFormatError(f"line {line_no}: mandatory set is empty")
            if mandatory & optional or mandatory & forbidden or optional & forbidden:
                raise GoldenFormatError(
                    f"line {line_no}: keyword sets must be pairwise disjoint"
                )
            topics.append(
                GoldenTopic(
                    window_id=window_id,
                    mandatory=mandatory,
                    optional=optional,
                    forbidden=forbidden,
                )
            )
    return topics


def topic_matches(event_keywords: Iterable[str], topic: GoldenTopic) -> bool:
    keywords = set(event_keywords)
    return topic.mandatory <= keywords and not (topic.forbidden & keywords)


def topic_recall_at_k(
    events: Sequence[RankedEvent], topics: Sequence[GoldenTopic], k: int
) -> float | None:
    """Fraction of topics matched by at least one of the top k events.

    Undefined (None) when the window has no topics.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if not topics:
        return None
    top = [e for e in events if e.rank <= k]
    matched = sum(
        1 for t in topics if any(topic_matches(e.keywords, t) for e in top)
    )
    return matched / len(topics)


def keyword_precision_top2(
    events: Sequence[RankedEvent], topics: Sequence[GoldenTopic]
) -> float | None:
    """Fraction of the top two events' distinct keywords endorsed by a
    topic (mandatory or optional). Undefined without topics or when the
    top two events carry no keywords."""
    if not topics:
        return None
    pool = set()
    for event in events:
        if event.rank <= 2:
            pool.update(event.keywords)
    if not pool:
        return None
    good = set()
    for topic in topics:
        good |= topic.mandatory | topic.optional
    return len(pool & good) / len(pool)


def score_window(
    window_id: int,
    events: Sequence[RankedEvent],
    topics: Sequence[GoldenTopic],
    ks: Sequence[int] = DEFAULT_KS,
) -> WindowScores:
    return WindowScores(
        window_id=window_id,
        n_topics=len(topics),
        n_events=len(events),
        recall_at={k: topic_recall_at_k(events, topics, k) for k in ks},
        keyword_precision=keyword_precision_top2(events, topics),
    )


def _mean_defined(values: Iterable[float | None]) -> float | None:
    defined = [v for v in values if v is not None]
    if not defined:
        return None
    return sum(defined) / len(defined)


def aggregate(windows: Sequence[WindowScores]) -> EvalReport:
    """Unweighted mean of each metric over the windows where it is
    defined; a metric undefined everywhere stays undefined."""
    ks: list[int] = []
    for w in windows:
        for k in w.recall_at:
            if k not in ks:
                ks.append(k)
    recall = {k: _mean_defined(w.recall_at.get(k) for w in windows) for k in ks}
    kp = _mean_defined(w.keyword_precision for w in windows)
    return EvalReport(windows=tuple(windows), recall_at=recall, keyword_precision=kp)


def evaluate(
    events_by_window: Mapping[int, Sequence[RankedEvent]],
    topics: Sequence[GoldenTopic],
    ks: Sequence[int] = DEFAULT_KS,
) -> EvalReport:
    """Score every window that has events or topics, then average."""
    topics_by_window: dict[int, list] = {}
    for topic in topics:
        topics_by_window.setdefault(topic.window_id, []).append(topic)
    window_ids = sorted(set(events_by_window) | set(topics_by_window))
    scored = [
        score_window(
            wid,
            events_by_window.get(wid, ()),
            topics_by_window.get(wid, ()),
            ks,
        )
        for wid in window_ids
    ]
    return aggregate(scored)


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.4f}"


def render_report(report: EvalReport) -> str:
    """Fixed-width text table, one row per window plus the average."""
    ks = sorted(report.recall_at)
    header = ["window", "topics", "events"]
    header += [f"recall@{k}" for k in ks]
    header.append("kw-prec@2")
    rows = [header]
    for w in report.windows:
        row = [str(w.window_id), str(w.n_topics), str(w.n_events)]
        row += [_fmt(w.recall_at.get(k)) for k in ks]
        row.append(_fmt(w.keyword_precision))
        rows.append(row)
    avg = ["avg", "", ""]
    avg += [_fmt(report.recall_at[k]) for k in ks]
    avg.append(_fmt(report.keyword_precision))
    rows.append(avg)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = []
    for r in rows:
        lines.append("  ".join(cell.rjust(w) for cell, w in zip(r, widths)))
    return "\n".join(lines) + "\n"


def report_records(report: EvalReport) -> list:
    """Line-delimited record form of the report: one record per window
    and a final average record."""
    records = []
    for w in report.windows:
        records.append(
            {
                "window_id": w.window_id,
                "n_topics": w.n_topics,
                "n_events": w.n_events,
                "recall_at": {str(k): w.recall_at[k] for k in sorted(w.recall_at)},
                "keyword_precision": w.keyword_precision,
            }
        )
    records.append(
        {
            "window_id": "avg",
            "recall_at": {str(k): report.recall_at[k] for k in sorted(report.recall_at)},
            "keyword_precision": report.keyword_precision,
        }
    )
    return records


def write_report(report: EvalReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in report_records(report):
            fh.write(json.dumps(record, sort_keys=True) + "\n")
