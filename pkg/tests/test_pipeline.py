"""End-to-end pipeline wiring on small hand-built corpora."""

import dataclasses
import logging

import pytest

from streamevents.config import PipelineConfig
from streamevents.corpus import RawPost
from streamevents.denoise import DataIntegrityError
from streamevents.embed import make_provider
from streamevents.pipeline import (
    EventFormatError,
    PipelineError,
    load_events,
    run_pipeline,
    write_events,
)

MINUTE = 60_000


def small_config(**overrides) -> PipelineConfig:
    base = dict(
        embed_dim=16,
        ae_layer_dims=(16, 8, 16),
        ae_epochs=3,
        window_minutes=1,
        dda_enabled=False,
        seed=0,
    )
    base.update(overrides)
    return PipelineConfig(**base)


def burst_posts() -> list[RawPost]:
    """Window 0 carries chatter, window 1 a six-post burst plus strays."""
    background = [
        "morning coffee tastes great",
        "traffic jammed downtown again",
        "new guitar string arrived",
        "garden tomatoes ripening fast",
        "library closes early tonight",
        "puppy learned another trick",
        "rainbow after heavy showers",
        "bicycle tire needs patching",
        "homemade bread smells amazing",
        "chess club meets thursday",
        "painting the fence white",
        "lost keys found under couch",
    ]
    posts = [
        RawPost(id=f"b{i:02d}", created_at=i * 4_000, text=text)
        for i, text in enumerate(background)
    ]
    for i in range(6):
        posts.append(
            RawPost(
                id=f"e{i:02d}",
                created_at=MINUTE + 5_000 + i * 1_000,
                text="goal scored liverpool",
            )
        )
    strays = ["violin practice tonight", "baking lemon cake", "marathon training run"]
    for i, text in enumerate(strays):
        posts.append(
            RawPost(id=f"s{i:02d}", created_at=MINUTE + 20_000 + i * 1_000, text=text)
        )
    return posts


class TestDetection:
    def test_burst_becomes_ranked_event(self):
        result = run_pipeline(small_config(), burst_posts())
        assert len(result.windows) == 2
        events = result.windows[1].events
        assert len(events) == 1
        event = events[0]
        assert event.rank == 1
        assert event.size == 6
        assert event.keywords == ("goal", "liverpool", "score")

    def test_strays_do_not_survive_pruning(self):
        result = run_pipeline(small_config(), burst_posts())
        window = result.windows[1]
        assert window.n_clusters >= 4
        assert window.n_pruned == 1

    def test_counts_monotone(self):
        result = run_pipeline(small_config(), burst_posts())
        for window in result.windows:
            assert window.n_docs_kept <= window.n_docs
            assert window.n_pruned <= window.n_clusters
            assert window.n_merged <= window.n_pruned
            assert len(window.events) <= window.n_merged

    def test_empty_interior_window(self):
        posts = burst_posts()
        shifted = [
            dataclasses.replace(p, created_at=p.created_at + MINUTE)
            for p in posts
            if p.id.startswith(("e", "s"))
        ]
        posts = [p for p in posts if p.id.startswith("b")] + shifted
        result = run_pipeline(small_config(), posts)
        assert len(result.windows) == 3
        middle = result.windows[1]
        assert middle.n_docs == 0
        assert middle.events == ()

    def test_size_ranking_when_reranking_disabled(self):
        result = run_pipeline(small_config(rp_enabled=False), burst_posts())
        event = result.windows[1].events[0]
        assert event.score == 6.0
        assert len(event.keywords) == 3

    def test_events_by_window_mapping(self):
        result = run_pipeline(small_config(), burst_posts())
        mapping = result.events_by_window()
        assert set(mapping) == {0, 1}
        assert mapping[1] == list(result.windows[1].events)


class TestTrainingFilter:
    def test_filter_active_with_training_period(self):
        config = small_config(dda_enabled=True, train_before_ms=MINUTE)
        result = run_pipeline(config, burst_posts())
        assert result.dda_active
        assert len(result.train_losses) == config.ae_epochs
        training, live = result.windows
        assert training.n_docs_kept == training.n_docs == 12
        # floor(98 * 9 / 100) of the 9 live-window docs survive
        assert live.n_docs == 9
        assert live.n_docs_kept == 8

    def test_training_window_filtered_on_request(self):
        config = small_config(
            dda_enabled=True, train_before_ms=MINUTE, filter_training_period=True
        )
        result = run_pipeline(config, burst_posts())
        training = result.windows[0]
        assert training.n_docs == 12
        assert training.n_docs_kept == 11

    def test_no_training_boundary_disables_filter(self, caplog):
        config = small_config(dda_enabled=True, train_before_ms=None)
        with caplog.at_level(logging.WARNING):
            result = run_pipeline(config, burst_posts())
        assert not result.dda_active
        assert result.train_losses == ()
        assert any("train_before_ms" in r.message for r in caplog.records)

    def test_empty_training_period_disables_filter(self, caplog):
        config = small_config(dda_enabled=True, train_before_ms=0)
        with caplog.at_level(logging.WARNING):
            result = run_pipeline(config, burst_posts())
        assert not result.dda_active
        assert any("no documents before" in r.message for r in caplog.records)


class TestWindowGrid:
    def test_grid_anchored_to_window_multiple(self):
        posts = [
            RawPost(id=f"p{i}", created_at=90_000 + i * 1_000, text="quiet evening walk")
            for i in range(4)
        ]
        result = run_pipeline(small_config(), posts)
        assert result.windows[0].start_ms == 60_000
        assert result.windows[0].end_ms == 120_000

    def test_explicit_grid_start(self):
        posts = [
            RawPost(id=f"p{i}", created_at=90_000 + i * 1_000, text="quiet evening walk")
            for i in range(4)
        ]
        result = run_pipeline(small_config(window_start_ms=90_000), posts)
        assert result.windows[0].start_ms == 90_000

    def test_no_posts_gives_empty_result(self):
        result = run_pipeline(small_config(), [])
        assert result.windows == ()
        assert not result.dda_active

    def test_nothing_survives_normalization(self, caplog):
        posts = [RawPost(id="p0", created_at=0, text="the of and is")]
        with caplog.at_level(logging.WARNING):
            result = run_pipeline(small_config(), posts)
        assert result.windows == ()


class _MissingOneProvider:
    """Delegates to the stub then drops one document's vector."""

    def __init__(self, victim: str):
        self.victim = victim
        self.inner = make_provider("stub", dim=16, seed=0)

    def embed_docs(self, docs):
        table = self.inner.embed_docs(docs)
        table.pop(self.victim, None)
        return table


class TestFailureShape:
    def test_window_stage_error_is_located(self):
        posts = burst_posts()
        provider = _MissingOneProvider("e03")
        with pytest.raises(PipelineError) as info:
            run_pipeline(small_config(), posts, provider=provider)
        message = str(info.value)
        assert "window 1" in message
        assert "prune" in message
        assert isinstance(info.value.__cause__, DataIntegrityError)


class TestEventFiles:
    def test_round_trip(self, tmp_path):
        result = run_pipeline(small_config(), burst_posts())
        path = tmp_path / "events.jsonl"
        write_events(result, path)
        loaded = load_events(path)
        assert set(loaded) == {1}
        event = loaded[1][0]
        original = result.windows[1].events[0]
        assert event.rank == original.rank
        assert event.score == pytest.approx(original.score)
        assert event.keywords == original.keywords
        assert event.size == original.size

    def test_two_runs_byte_identical(self, tmp_path):
        paths = []
        for name in ("a.jsonl", "b.jsonl"):
            result = run_pipeline(small_config(), burst_posts())
            path = tmp_path / name
            write_events(result, path)
            paths.append(path.read_bytes())
        assert paths[0] == paths[1]

    def test_garbage_line_rejected(self, tmp_path):
        path = tmp_path / "events.jsonl"
        path.write_text("not json\n", encoding="utf-8")
        with pytest.raises(EventFormatError, match="line 1"):
            load_events(path)

    def test_missing_field_rejected(self, tmp_path):
        path = tmp_path / "events.jsonl"
        path.write_text('{"rank": 1}\n', encoding="utf-8")
        with pytest.raises(EventFormatError):
            load_events(path)

    def test_fractional_rank_rejected(self, tmp_path):
        path = tmp_path / "events.jsonl"
        record = (
            '{"keywords": "a", "rank": 1.5, "score": 2.0, '
            '"size": 4, "window_index": 0}'
        )
        path.write_text(record + "\n", encoding="utf-8")
        with pytest.raises(EventFormatError):
            load_events(path)
