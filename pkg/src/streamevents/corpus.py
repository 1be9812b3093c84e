"""Post ingestion, text normalization and time windowing.

Raw posts arrive as line-delimited JSON records. Normalization reduces
each post to a list of lowercase stemmed tokens; posts left with fewer
than two tokens are dropped. Windowing partitions the surviving
documents into contiguous half-open time slices of fixed length.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import porter

logger = logging.getLogger(__name__)

# characters a finished token may contain
_KEEP = frozenset("abcdefghijklmnopqrstuvwxyz0123456789-")
_ALNUM = frozenset("abcdefghijklmnopqrstuvwxyz0123456789")

_URL_PREFIXES = ("http://", "https://", "www.")


@dataclass(frozen=True)
class RawPost:
    """One ingested post, untouched."""

    id: str
    created_at: int  # epoch milliseconds
    text: str


@dataclass(frozen=True)
class CleanDoc:
    """A post after normalization.

    tokens holds stemmed lowercase terms, order preserved, duplicates
    kept. Every token matches [a-z0-9-]+ and contains at least one
    alphanumeric character.
    """

    doc_id: str
    timestamp: int
    tokens: tuple[str, ...]
    raw_text: str


@dataclass(frozen=True)
class Window:
    """Half-open time slice [start_ms, end_ms) with its documents."""

    index: int
    start_ms: int
    end_ms: int
    docs: tuple[CleanDoc, ...]


@dataclass
class ParseResult:
    posts: list[RawPost] = field(default_factory=list)
    skipped: int = 0


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load a stopword list, one entry per line.

    Blank lines and lines starting with '#' are ignored. Each entry is
    normalized with the same character filter preprocessing applies, so
    the file may contain natural spellings.
    """
    if path is None:
        text = (
            resources.files("streamevents")
            .joinpath("data/stopwords_en.txt")
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cleaned = _clean_token(line)
        if cleaned:
            words.add(cleaned)
    return frozenset(words)


def parse_posts(path: str | Path) -> ParseResult:
    """Read line-delimited post records.

    Each line must be a JSON object with string id, integer created_at
    (epoch ms) and string text. Malformed lines are skipped and
    counted, never fatal. File order is preserved.
    """
    result = ParseResult()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                post = RawPost(
                    id=rec["id"],
                    created_at=rec["created_at"],
                    text=rec["text"],
                )
                if not isinstance(post.id, str):
                    raise TypeError("id must be a string")
                if not isinstance(post.created_at, int) or isinstance(
                    post.created_at, bool
                ):
                    raise TypeError("created_at must be an integer")
                if not isinstance(post.text, str):
                    raise TypeError("text must be a string")
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                logger.warning("skipping malformed post line %d: %s", lineno, exc)
                result.skipped += 1
                continue
            result.posts.append(post)
    return result


def _strip_non_ascii(token: str) -> str:
    # emoji and symbol removal: keep Basic Latin code points only
    return "".join(ch for ch in token if ord(ch) < 128)


def _clean_token(token: str) -> str:
    """Lowercase, drop characters outside [a-z0-9-], trim hyphens."""
    lowered = token.lower()
    kept = "".join(ch for ch in lowered if ch in _KEEP)
    kept = kept.strip("-")
    if not any(ch in _ALNUM for ch in kept):
        return ""
    return kept


def _stem_token(token: str) -> str:
    # stemming is defined over plain letters; tokens carrying digits or
    # hyphens pass through unchanged
    if token.isalpha():
        return porter.stem(token)
    return token


def normalize_term(term: str) -> str:
    """Run one standalone term through the same cleanup and stemming
    applied to post tokens. Returns "" when nothing survives."""
    cleaned = _clean_token(_strip_non_ascii(term))
    if not cleaned:
        return ""
    return _stem_token(cleaned)


def preprocess(post: RawPost, stopwords: frozenset[str]) -> CleanDoc | None:
    """Normalize one post, or return None when it drops out.

    Steps, in order: discard tokens containing '#' or '@'; discard URL
    tokens and strip non Basic Latin code points; strip remaining
    special characters and lowercase; discard stopwords; stem. A post
    keeping fewer than two tokens is dropped.
    """
    tokens: list[str] = []
    for raw in post.text.split():
        if "#" in raw or "@" in raw:
            continue
        if raw.lower().startswith(_URL_PREFIXES):
            continue
        raw = _strip_non_ascii(raw)
        if not raw:
            continue
        cleaned = _clean_token(raw)
        if not cleaned:
            continue
        if cleaned in stopwords:
            continue
        tokens.append(_stem_token(cleaned))
    if len(tokens) < 2:
        return None
    return CleanDoc(
        doc_id=post.id,
        timestamp=post.created_at,
        tokens=tuple(tokens),
        raw_text=post.text,
    )


def preprocess_all(
    posts: list[RawPost], stopwords: frozenset[str]
) -> list[CleanDoc]:
    """Normalize a batch, dropping posts that fall below two tokens."""
    docs = []
    for post in posts:
        doc = preprocess(post, stopwords)
        if doc is not None:
            docs.append(doc)
    dropped = len(posts) - len(docs)
    if dropped:
        logger.info("dropped %d of %d posts in normalization", dropped, len(posts))
    return docs


def window_split(
    docs: list[CleanDoc], start_ms: int, window_len_ms: int
) -> list[Window]:
    """Partition documents into contiguous half-open windows.

    Windows run [start_ms + i*len, start_ms + (i+1)*len) and cover
    every document timestamp; empty interior windows are kept so the
    result is gap-free. Documents inside a window are ordered by
    timestamp (ties keep input order).
    """
    if window_len_ms <= 0:
        raise ValueError("window_len_ms must be positive")
    if not docs:
        return []
    if any(d.timestamp < start_ms for d in docs):
        raise ValueError("document timestamp precedes window start")
    max_ts = max(d.timestamp for d in docs)
    count = (max_ts - start_ms) // window_len_ms + 1
    buckets: list[list[CleanDoc]] = [[] for _ in range(count)]
    for doc in docs:
        buckets[(doc.timestamp - start_ms) // window_len_ms].append(doc)
    windows = []
    for i, bucket in enumerate(buckets):
        bucket.sort(key=lambda d: d.timestamp)
        windows.append(
            Window(
                index=i,
                start_ms=start_ms + i * window_len_ms,
                end_ms=start_ms + (i + 1) * window_len_ms,
                docs=tuple(bucket),
            )
        )
    return windows
