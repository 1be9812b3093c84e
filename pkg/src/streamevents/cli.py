"""Command line interface.

Subcommands: run (full pipeline over a post file), eval (score an
event report against reference topics), gen-synth (emit the standard
synthetic benchmark corpus), embed (precompute a vector store), and
train-ae (fit and save a reconstruction-filter checkpoint).

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

import numpy as np

from . import autoenc, evaluate, pipeline, synth
from .config import ConfigError, PipelineConfig, load_config, validate
from .corpus import load_stopwords, parse_posts, preprocess_all
from .denoise import DataIntegrityError
from .embed import EmbeddingError, make_provider, save_embeddings
from .evaluate import GoldenFormatError
from .pipeline import EventFormatError, PipelineError
from .synth import SynthConfigError

log = logging.getLogger(__name__)

USAGE_EXIT = 1
DATA_EXIT = 2

_DATA_ERRORS = (
    EventFormatError,
    GoldenFormatError,
    EmbeddingError,
    DataIntegrityError,
    PipelineError,
    autoenc.CheckpointError,
    autoenc.TrainingDiverged,
    OSError,
)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems by default; this tool
    # reserves 2 for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(USAGE_EXIT)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="streamevents", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the detection pipeline over a post file")
    run.add_argument("--config", help="key=value config file")
    run.add_argument("--posts", required=True, help="line-delimited post records")
    run.add_argument("--goldens", help="reference topics to score against")
    run.add_argument("--embeddings", help="vector store for the file provider")
    run.add_argument("--provider", choices=["stub", "file", "remote"])
    run.add_argument("--seed", type=int)
    run.add_argument("--out", default="events.jsonl", help="event report path")
    run.add_argument("--eval-out", help="metric report path (needs --goldens)")
    run.add_argument("--no-dda", action="store_true",
                     help="disable the reconstruction-error filter")
    run.add_argument("--no-rp", action="store_true",
                     help="replace ranking with size ordering")

    ev = sub.add_parser("eval", help="score an event report against topics")
    ev.add_argument("--events", required=True, help="event report from `run`")
    ev.add_argument("--goldens", required=True)
    ev.add_argument("--out", help="metric report path")

    gen = sub.add_parser("gen-synth", help="generate the synthetic benchmark corpus")
    gen.add_argument("--seed", type=int, default=synth.DEFAULT_BENCHMARK_SEED)
    gen.add_argument("--out-posts", default="posts.jsonl")
    gen.add_argument("--out-goldens", default="goldens.jsonl")

    emb = sub.add_parser("embed", help="precompute document embeddings")
    emb.add_argument("--config", help="key=value config file")
    emb.add_argument("--posts", required=True)
    emb.add_argument("--provider", choices=["stub", "remote"])
    emb.add_argument("--seed", type=int)
    emb.add_argument("--out", default="embeddings.txt")

    tr = sub.add_parser("train-ae", help="train and save the reconstruction filter")
    tr.add_argument("--config", help="key=value config file")
    tr.add_argument("--posts", required=True)
    tr.add_argument("--embeddings", help="vector store for the file provider")
    tr.add_argument("--provider", choices=["stub", "file", "remote"])
    tr.add_argument("--seed", type=int)
    tr.add_argument("--train-before-ms", type=int,
                    help="only train on documents before this timestamp")
    tr.add_argument("--out", default="filter.ckpt")
    return parser


def _load_base_config(args) -> PipelineConfig:
    config = load_config(args.config) if args.config else PipelineConfig()
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "provider", None) is not None:
        updates["provider"] = args.provider
    if getattr(args, "embeddings", None) is not None:
        updates["embeddings_path"] = args.embeddings
    if getattr(args, "no_dda", False):
        updates["dda_enabled"] = False
    if getattr(args, "no_rp", False):
        updates["rp_enabled"] = False
    if getattr(args, "train_before_ms", None) is not None:
        updates["train_before_ms"] = args.train_before_ms
    if updates:
        config = dataclasses.replace(config, **updates)
        validate(config)
    return config


def _parse_posts_or_fail(path):
    parsed = parse_posts(path)
    if not parsed.posts and parsed.skipped:
        raise EventFormatError(f"{path}: no valid post records")
    return parsed.posts


def _cmd_run(args) -> int:
    if args.eval_out and not args.goldens:
        raise ConfigError("--eval-out needs --goldens")
    config = _load_base_config(args)
    posts = _parse_posts_or_fail(args.posts)
    result = pipeline.run_pipeline(config, posts)
    pipeline.write_events(result, args.out)
    n_events = sum(len(w.events) for w in result.windows)
    print(f"{len(result.windows)} windows, {n_events} events -> {args.out}")
    if args.goldens:
        topics = evaluate.load_goldens(args.goldens)
        report = evaluate.evaluate(result.events_by_window(), topics)
        print(evaluate.render_report(report), end="")
        if args.eval_out:
            evaluate.write_report(report, args.eval_out)
    return 0


def _cmd_eval(args) -> int:
    events = pipeline.load_events(args.events)
    topics = evaluate.load_goldens(args.goldens)
    report = evaluate.evaluate(events, topics)
    print(evaluate.render_report(report), end="")
    if args.out:
        evaluate.write_report(report, args.out)
    return 0


def _cmd_gen_synth(args) -> int:
    config = synth.benchmark_config(seed=args.seed)
    synth.write_corpus(config, args.out_posts, args.out_goldens)
    posts, goldens = synth.build_corpus(config)
    print(
        f"{len(posts)} posts -> {args.out_posts}, "
        f"{len(goldens)} topics -> {args.out_goldens}"
    )
    return 0


def _cmd_embed(args) -> int:
    config = _load_base_config(args)
    if config.provider == "file":
        raise ConfigError("embed needs a generating provider (stub or remote)")
    posts = _parse_posts_or_fail(args.posts)
    docs = preprocess_all(posts, load_stopwords(config.stopwords_path))
    provider = make_provider(
        config.provider,
        dim=config.embed_dim,
        seed=config.seed,
        base_url=config.remote_url,
    )
    vectors = provider.embed_docs(docs)
    dim = len(next(iter(vectors.values()))) if vectors else config.embed_dim
    save_embeddings(args.out, vectors, dim)
    print(f"{len(vectors)} vectors of dim {dim} -> {args.out}")
    return 0


def _cmd_train_ae(args) -> int:
    config = _load_base_config(args)
    posts = _parse_posts_or_fail(args.posts)
    docs = preprocess_all(posts, load_stopwords(config.stopwords_path))
    if config.train_before_ms is not None:
        docs = [d for d in docs if d.timestamp < config.train_before_ms]
    if not docs:
        raise EventFormatError("no documents to train on")
    provider = make_provider(
        config.provider,
        dim=config.embed_dim,
        seed=config.seed,
        store_path=config.embeddings_path,
        base_url=config.remote_url,
    )
    vectors = provider.embed_docs(docs)
    data = np.stack([vectors[d.doc_id] for d in docs])
    if data.shape[1] != config.ae_layer_dims[0]:
        raise ConfigError(
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
    autoenc.save_checkpoint(args.out, result.params)
    print(
        f"trained on {len(docs)} docs, loss {result.losses[0]:.4f} -> "
        f"{result.losses[-1]:.4f}, checkpoint -> {args.out}"
    )
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "eval": _cmd_eval,
    "gen-synth": _cmd_gen_synth,
    "embed": _cmd_embed,
    "train-ae": _cmd_train_ae,
}


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else USAGE_EXIT
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, SynthConfigError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
