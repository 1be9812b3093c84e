"""Document embedding providers and the vector store file format.

Three interchangeable providers: a deterministic hashing stub for
tests and synthetic runs, a file-backed store of precomputed vectors,
and a client for the remote encoder sidecar. All three are
deterministic for fixed inputs and configuration.

Store format (text, one record per line after the header):

    SMMEMB 1 <dim>
    <doc_id>\t<v1> <v2> ... <vdim>

Values are written with 8 significant digits, which keeps round-trip
error per entry below 1e-6 for unit-scale vectors.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests

from .corpus import CleanDoc

logger = logging.getLogger(__name__)

MAGIC = "SMMEMB"
FORMAT_VERSION = 1
DEFAULT_DIM = 1024


class EmbeddingError(Exception):
    """Base class for embedding failures."""


class EmbeddingFormatError(EmbeddingError):
    """Vector store file violates the format."""


class MissingEmbeddingError(EmbeddingError):
    """A document id has no stored vector."""


class RemoteTransportError(EmbeddingError):
    """Could not reach the encoder service; retrying may help."""


class RemoteProtocolError(EmbeddingError):
    """Encoder service answered with something off-contract."""


def _token_direction(token: str, dim: int, seed: int) -> np.ndarray:
    digest = hashlib.sha256(f"{seed}:{token}".encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


class StubProvider:
    """Deterministic pseudo-random embeddings from token content.

    Each distinct token maps to a fixed unit direction seeded from a
    stable hash; a document embeds as the L2-normalized mean of its
    token directions, occurrences counted. Token order does not
    matter; repeated tokens pull the mean toward their direction.
    """

    kind = "stub"

    def __init__(self, dim: int = DEFAULT_DIM, seed: int = 0):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.seed = seed
        self._cache: dict[str, np.ndarray] = {}

    def _direction(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            vec = _token_direction(token, self.dim, self.seed)
            self._cache[token] = vec
        return vec

    def embed_tokens(self, tokens) -> np.ndarray:
        if not tokens:
            raise ValueError("cannot embed an empty token list")
        acc = np.zeros(self.dim)
        for tok in tokens:
            acc += self._direction(tok)
        acc /= len(tokens)
        norm = np.linalg.norm(acc)
        if norm == 0.0:  # pragma: no cover - needs exactly cancelling directions
            raise ValueError("token directions cancelled to zero")
        return acc / norm

    def embed_docs(self, docs: list[CleanDoc]) -> dict[str, np.ndarray]:
        return {d.doc_id: self.embed_tokens(d.tokens) for d in docs}


@dataclass
class EmbeddingStore:
    dim: int
    vectors: dict[str, np.ndarray]


class FileProvider:
    """Serves vectors preloaded from a store file."""

    kind = "file"

    def __init__(self, path: str | Path):
        store = load_embeddings(path)
        self.dim = store.dim
        self._vectors = store.vectors

    def embed_docs(self, docs: list[CleanDoc]) -> dict[str, np.ndarray]:
        out = {}
        for d in docs:
            vec = self._vectors.get(d.doc_id)
            if vec is None:
                raise MissingEmbeddingError(
                    f"no stored vector for document {d.doc_id!r}"
                )
            out[d.doc_id] = vec
        return out


class RemoteProvider:
    """Client for the encoder sidecar.

    On construction the service is interrogated for its model name,
    dimension and batch limit; embedding requests are chunked to the
    advertised limit. Wire shape: POST /embed {"texts": [...]} answers
    {"vectors": [[...]], "model": str, "dim": int}.
    """

    kind = "remote"

    def __init__(self, base_url: str, timeout: float = 30.0, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()
        info = self._get_info()
        try:
            self.model = info["model"]
            self.dim = int(info["dim"])
            self.max_batch = int(info["max_batch"])
        except (KeyError, TypeError, ValueError) as exc:
            raise RemoteProtocolError(f"bad info payload: {info!r}") from exc
        if self.dim <= 0 or self.max_batch <= 0:
            raise RemoteProtocolError(f"bad info payload: {info!r}")

    def _get_info(self) -> dict:
        try:
            resp = self._session.get(
                f"{self.base_url}/info", timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise RemoteTransportError(f"info request failed: {exc}") from exc
        if resp.status_code != 200:
            raise RemoteProtocolError(
                f"info returned status {resp.status_code}"
            )
        try:
            return resp.json()
        except ValueError as exc:
            raise RemoteProtocolError("info payload is not JSON") from exc

    def embed_texts(self, texts: list[str]) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for i in range(0, len(texts), self.max_batch):
            out.extend(self._embed_batch(texts[i : i + self.max_batch]))
        return out

    def _embed_batch(self, batch: list[str]) -> list[np.ndarray]:
        if not batch:
            return []
        try:
            resp = self._session.post(
                f"{self.base_url}/embed",
                json={"texts": batch},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise RemoteTransportError(f"embed request failed: {exc}") from exc
        if resp.status_code != 200:
            raise RemoteProtocolError(
                f"embed returned status {resp.status_code}: {resp.text[:200]}"
            )
        try:
            payload = resp.json()
            vectors = payload["vectors"]
        except (ValueError, KeyError) as exc:
            raise RemoteProtocolError("embed payload malformed") from exc
        if len(vectors) != len(batch):
            raise RemoteProtocolError(
                f"asked for {len(batch)} vectors, got {len(vectors)}"
            )
        out = []
        for row in vectors:
            vec = np.asarray(row, dtype=float)
            if vec.shape != (self.dim,):
                raise RemoteProtocolError(
                    f"vector of dim {vec.shape} does not match service dim {self.dim}"
                )
            out.append(vec)
        return out

    def embed_docs(self, docs: list[CleanDoc]) -> dict[str, np.ndarray]:
        texts = [d.raw_text if d.raw_text else " ".join(d.tokens) for d in docs]
        vectors = self.embed_texts(texts)
        return {d.doc_id: v for d, v in zip(docs, vectors)}


def save_embeddings(
    path: str | Path, vectors: dict[str, np.ndarray], dim: int
) -> None:
    """Write a vector store file; ids must be free of tabs and newlines."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{MAGIC} {FORMAT_VERSION} {dim}\n")
        for doc_id, vec in vectors.items():
            if any(c in doc_id for c in "\t\n\r"):
                raise EmbeddingFormatError(
                    f"document id {doc_id!r} contains separator characters"
                )
            if len(vec) != dim:
                raise EmbeddingFormatError(
                    f"vector for {doc_id!r} has dim {len(vec)}, store dim is {dim}"
                )
            values = " ".join(f"{v:.8g}" for v in vec)
            fh.write(f"{doc_id}\t{values}\n")


def load_embeddings(path: str | Path) -> EmbeddingStore:
    """Read a vector store file, validating header and row dimensions."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 3 or parts[0] != MAGIC:
            raise EmbeddingFormatError(f"line 1: bad header {header!r}")
        if parts[1] != str(FORMAT_VERSION):
            raise EmbeddingFormatError(f"line 1: unsupported version {parts[1]!r}")
        try:
            dim = int(parts[2])
        except ValueError:
            raise EmbeddingFormatError(f"line 1: bad dimension {parts[2]!r}")
        if dim <= 0:
            raise EmbeddingFormatError(f"line 1: bad dimension {dim}")
        vectors: dict[str, np.ndarray] = {}
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                doc_id, values = line.split("\t", 1)
            except ValueError:
                raise EmbeddingFormatError(f"line {lineno}: missing id separator")
            if doc_id in vectors:
                raise EmbeddingFormatError(f"line {lineno}: duplicate id {doc_id!r}")
            try:
                vec = np.array([float(v) for v in values.split()], dtype=float)
            except ValueError:
                raise EmbeddingFormatError(f"line {lineno}: unparseable values")
            if len(vec) != dim:
                raise EmbeddingFormatError(
                    f"line {lineno}: got {len(vec)} values, header says {dim}"
                )
            vectors[doc_id] = vec
    return EmbeddingStore(dim=dim, vectors=vectors)


def make_provider(
    kind: str,
    *,
    dim: int = DEFAULT_DIM,
    seed: int = 0,
    store_path: str | Path | None = None,
    base_url: str | None = None,
):
    """Build a provider by kind name: stub, file or remote."""
    if kind == "stub":
        return StubProvider(dim=dim, seed=seed)
    if kind == "file":
        if store_path is None:
            raise ValueError("file provider needs a store path")
        return FileProvider(store_path)
    if kind == "remote":
        if base_url is None:
            raise ValueError("remote provider needs a base url")
        return RemoteProvider(base_url)
    raise ValueError(f"unknown provider kind {kind!r}")
