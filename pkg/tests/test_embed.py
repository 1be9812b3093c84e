"""Embedding providers and the vector store format."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from streamevents import embed
from streamevents.corpus import CleanDoc


def doc(did, tokens):
    return CleanDoc(doc_id=did, timestamp=0, tokens=tuple(tokens), raw_text=" ".join(tokens))


class TestStubProvider:
    def test_deterministic_across_instances(self):
        a = embed.StubProvider(dim=64, seed=7)
        b = embed.StubProvider(dim=64, seed=7)
        va = a.embed_tokens(["goal", "chelsea"])
        vb = b.embed_tokens(["goal", "chelsea"])
        assert np.array_equal(va, vb)

    def test_seed_changes_vectors(self):
        a = embed.StubProvider(dim=64, seed=1)
        b = embed.StubProvider(dim=64, seed=2)
        assert not np.allclose(a.embed_tokens(["goal", "x"]), b.embed_tokens(["goal", "x"]))

    def test_unit_norm(self):
        p = embed.StubProvider(dim=32, seed=0)
        v = p.embed_tokens(["a", "b", "c"])
        assert abs(np.linalg.norm(v) - 1.0) < 1e-9

    @given(st.permutations(["alpha", "beta", "gamma", "delta"]))
    def test_token_order_independent(self, perm):
        p = embed.StubProvider(dim=48, seed=3)
        base = p.embed_tokens(["alpha", "beta", "gamma", "delta"])
        assert np.allclose(p.embed_tokens(list(perm)), base, atol=1e-12)

    def test_duplicate_tokens_shift_vector(self):
        p = embed.StubProvider(dim=48, seed=3)
        v1 = p.embed_tokens(["alpha", "beta"])
        v2 = p.embed_tokens(["alpha", "alpha", "beta"])
        assert not np.allclose(v1, v2)
        # the duplicated token pulls the mean toward its direction
        d = p.embed_tokens(["alpha"])
        assert float(v2 @ d) > float(v1 @ d)

    def test_empty_tokens_error(self):
        p = embed.StubProvider(dim=16)
        with pytest.raises(ValueError):
            p.embed_tokens([])

    def test_disjoint_docs_nearly_orthogonal(self):
        # mean absolute cosine over random disjoint pairs stays small
        # at the default dimension
        p = embed.StubProvider(dim=1024, seed=0)
        rng = np.random.default_rng(0)
        cosines = []
        for i in range(100):
            n1 = int(rng.integers(2, 8))
            n2 = int(rng.integers(2, 8))
            t1 = [f"left{i}w{j}" for j in range(n1)]
            t2 = [f"right{i}w{j}" for j in range(n2)]
            cosines.append(abs(float(p.embed_tokens(t1) @ p.embed_tokens(t2))))
        assert float(np.mean(cosines)) < 0.1


class TestStoreFormat:
    def test_round_trip(self, tmp_path):
        p = embed.StubProvider(dim=20, seed=5)
        docs = [doc(f"d{i}", [f"tok{i}", f"tok{i+1}"]) for i in range(10)]
        vectors = p.embed_docs(docs)
        path = tmp_path / "vecs.txt"
        embed.save_embeddings(path, vectors, dim=20)
        store = embed.load_embeddings(path)
        assert store.dim == 20
        assert set(store.vectors) == set(vectors)
        for did, vec in vectors.items():
            assert np.max(np.abs(store.vectors[did] - vec)) <= 1e-6

    def test_header_layout(self, tmp_path):
        path = tmp_path / "vecs.txt"
        embed.save_embeddings(path, {"a": np.ones(3)}, dim=3)
        first = path.read_text().splitlines()[0]
        assert first == "SMMEMB 1 3"

    def test_bad_header(self, tmp_path):
        path = tmp_path / "vecs.txt"
        path.write_text("NOTRIGHT 1 4\n")
        with pytest.raises(embed.EmbeddingFormatError, match="line 1"):
            embed.load_embeddings(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "vecs.txt"
        path.write_text("SMMEMB 9 4\n")
        with pytest.raises(embed.EmbeddingFormatError, match="version"):
            embed.load_embeddings(path)

    def test_row_dim_mismatch_names_line(self, tmp_path):
        path = tmp_path / "vecs.txt"
        path.write_text("SMMEMB 1 3\nok\t1 2 3\nshort\t1 2\n")
        with pytest.raises(embed.EmbeddingFormatError, match="line 3"):
            embed.load_embeddings(path)

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "vecs.txt"
        path.write_text("SMMEMB 1 2\na\t1 2\na\t3 4\n")
        with pytest.raises(embed.EmbeddingFormatError, match="duplicate"):
            embed.load_embeddings(path)

    def test_save_rejects_wrong_dim(self, tmp_path):
        with pytest.raises(embed.EmbeddingFormatError):
            embed.save_embeddings(tmp_path / "v.txt", {"a": np.ones(2)}, dim=3)

    def test_save_rejects_tab_in_id(self, tmp_path):
        with pytest.raises(embed.EmbeddingFormatError):
            embed.save_embeddings(tmp_path / "v.txt", {"a\tb": np.ones(2)}, dim=2)


class TestFileProvider:
    def test_serves_stored_vectors(self, tmp_path):
        path = tmp_path / "vecs.txt"
        vecs = {"d1": np.array([1.0, 0.0]), "d2": np.array([0.0, 1.0])}
        embed.save_embeddings(path, vecs, dim=2)
        provider = embed.FileProvider(path)
        out = provider.embed_docs([doc("d1", ["a", "b"]), doc("d2", ["c", "d"])])
        assert np.allclose(out["d1"], [1.0, 0.0])
        assert np.allclose(out["d2"], [0.0, 1.0])

    def test_missing_id_is_error(self, tmp_path):
        path = tmp_path / "vecs.txt"
        embed.save_embeddings(path, {"d1": np.ones(2)}, dim=2)
        provider = embed.FileProvider(path)
        with pytest.raises(embed.MissingEmbeddingError, match="d9"):
            provider.embed_docs([doc("d9", ["a", "b"])])


class FakeResponse:
    def __init__(self, status_code=200, payload=None):
        self.status_code = status_code
        self._payload = payload
        self.text = str(payload)

    def json(self):
        if self._payload is None:
            raise ValueError("no body")
        return self._payload


class FakeSession:
    """Canned responses keyed by path suffix."""

    def __init__(self, info=None, embed_fn=None):
        self.info = info or {"model": "m", "dim": 4, "max_batch": 2}
        self.embed_fn = embed_fn
        self.batches = []

    def get(self, url, timeout=None):
        assert url.endswith("/info")
        return FakeResponse(payload=self.info)

    def post(self, url, json=None, timeout=None):
        assert url.endswith("/embed")
        texts = json["texts"]
        self.batches.append(list(texts))
        if self.embed_fn:
            return self.embed_fn(texts)
        dim = self.info["dim"]
        return FakeResponse(
            payload={
                "vectors": [[float(len(t))] * dim for t in texts],
                "model": self.info["model"],
                "dim": dim,
            }
        )


class TestRemoteProvider:
    def test_reads_info(self):
        p = embed.RemoteProvider("http://svc", session=FakeSession())
        assert p.dim == 4 and p.max_batch == 2 and p.model == "m"

    def test_chunks_to_max_batch_and_preserves_order(self):
        session = FakeSession()
        p = embed.RemoteProvider("http://svc", session=session)
        texts = [f"t{i}" * (i + 1) for i in range(5)]
        vectors = p.embed_texts(texts)
        assert [len(b) for b in session.batches] == [2, 2, 1]
        assert [v[0] for v in vectors] == [float(len(t)) for t in texts]

    def test_count_mismatch_is_protocol_error(self):
        session = FakeSession(
            embed_fn=lambda texts: FakeResponse(payload={"vectors": []})
        )
        p = embed.RemoteProvider("http://svc", session=session)
        with pytest.raises(embed.RemoteProtocolError):
            p.embed_texts(["a"])

    def test_dim_mismatch_is_protocol_error(self):
        session = FakeSession(
            embed_fn=lambda texts: FakeResponse(
                payload={"vectors": [[1.0, 2.0]] * len(texts)}
            )
        )
        p = embed.RemoteProvider("http://svc", session=session)
        with pytest.raises(embed.RemoteProtocolError, match="dim"):
            p.embed_texts(["a"])

    def test_http_error_is_protocol_error(self):
        session = FakeSession(
            embed_fn=lambda texts: FakeResponse(status_code=500, payload={"error": "x"})
        )
        p = embed.RemoteProvider("http://svc", session=session)
        with pytest.raises(embed.RemoteProtocolError, match="500"):
            p.embed_texts(["a"])

    def test_bad_info_payload(self):
        with pytest.raises(embed.RemoteProtocolError):
            embed.RemoteProvider("http://svc", session=FakeSession(info={"model": "m"}))

    def test_empty_input_sends_nothing(self):
        session = FakeSession()
        p = embed.RemoteProvider("http://svc", session=session)
        assert p.embed_texts([]) == []
        assert session.batches == []


def test_make_provider_kinds(tmp_path):
    assert embed.make_provider("stub", dim=8).kind == "stub"
    path = tmp_path / "v.txt"
    embed.save_embeddings(path, {"a": np.ones(2)}, dim=2)
    assert embed.make_provider("file", store_path=path).kind == "file"
    with pytest.raises(ValueError):
        embed.make_provider("nope")
    with pytest.raises(ValueError):
        embed.make_provider("file")
