"""Reconstruction-based document filter.

A small tanh autoencoder is trained on embeddings of pre-event
documents; at detection time each window document is scored by its
reconstruction error and the worst few percent are eliminated. Poorly
reconstructed vectors correspond to content unlike anything in the
training period, which at the filter's percentile setting is
overwhelmingly off-topic noise.

Checkpoint format (text):

    SMMAE 1 <dims comma-separated>

followed per layer by fan_out lines of fan_in weight values (one line
per output unit) and one line of fan_out bias values.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

MAGIC = "SMMAE"
FORMAT_VERSION = 1

DEFAULT_HIDDEN = (512, 256, 512)


class CheckpointError(Exception):
    """Checkpoint file unreadable or inconsistent."""


class TrainingDiverged(Exception):
    """Loss stopped being finite during training."""


@dataclass
class MLPParams:
    """Mirror-shaped multilayer perceptron parameters.

    layer_dims runs input to output and must start and end with the
    same dimension. weights[i] has shape (layer_dims[i+1],
    layer_dims[i]); hidden activations are tanh, the output layer is
    linear.
    """

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "MLPParams":
        return MLPParams(
            layer_dims=self.layer_dims,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 0.05
    seed: int = 0


@dataclass
class TrainResult:
    params: MLPParams
    losses: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class ScoredDoc:
    doc_id: str
    error: float


def init_params(layer_dims, seed: int = 0) -> MLPParams:
    """Glorot-uniform weights, zero biases.

    Each weight is drawn from U(-s, s) with s = sqrt(6 / (fan_in +
    fan_out)). Deterministic for a fixed seed.
    """
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 2:
        raise ValueError("need at least input and output layers")
    if any(d <= 0 for d in dims):
        raise ValueError("layer dims must be positive")
    if dims[0] != dims[-1]:
        raise ValueError(
            f"input dim {dims[0]} must equal output dim {dims[-1]}"
        )
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims, dims[1:]):
        s = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-s, s, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MLPParams(layer_dims=dims, weights=weights, biases=biases)


def _forward_activations(params: MLPParams, x: np.ndarray) -> list[np.ndarray]:
    """All layer activations for a batch, input included."""
    activations = [x]
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = activations[-1] @ w.T + b
        activations.append(z if i == last else np.tanh(z))
    return activations


def forward(params: MLPParams, x: np.ndarray) -> np.ndarray:
    """Reconstruct one vector or a batch (rows are samples)."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    batch = arr[None, :] if single else arr
    if batch.shape[1] != params.layer_dims[0]:
        raise ValueError(
            f"input dim {batch.shape[1]} does not match model dim {params.layer_dims[0]}"
        )
    out = _forward_activations(params, batch)[-1]
    return out[0] if single else out


def reconstruction_error(x: np.ndarray, x_hat: np.ndarray) -> float:
    """Sum of squared differences between a vector and its reconstruction."""
    x = np.asarray(x, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x.shape != x_hat.shape:
        raise ValueError("shape mismatch")
    d = x - x_hat
    return float(d @ d)


def batch_loss(params: MLPParams, batch: np.ndarray) -> float:
    """Mean per-sample sum-of-squares reconstruction loss."""
    out = _forward_activations(params, batch)[-1]
    d = out - batch
    return float(np.sum(d * d) / batch.shape[0])


def loss_and_gradients(params: MLPParams, batch: np.ndarray):
    """Loss plus analytic gradients for every weight and bias.

    Returns (loss, weight_grads, bias_grads) with gradient arrays
    shaped like their parameters. Gradients are of the mean
    per-sample sum-of-squares loss.
    """
    acts = _forward_activations(params, batch)
    n = batch.shape[0]
    d = acts[-1] - batch
    loss = float(np.sum(d * d) / n)
    delta = 2.0 * d / n
    weight_grads = [np.empty(0)] * len(params.weights)
    bias_grads = [np.empty(0)] * len(params.biases)
    for i in range(len(params.weights) - 1, -1, -1):
        weight_grads[i] = delta.T @ acts[i]
        bias_grads[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i]) * (1.0 - acts[i] ** 2)
    return loss, weight_grads, bias_grads


def train(params: MLPParams, data: np.ndarray, config: TrainConfig) -> TrainResult:
    """Plain mini-batch gradient descent.

    The input params object is not mutated. Sample order is shuffled
    each epoch from the config seed, so runs are reproducible. The
    returned loss trace holds one mean loss per epoch, measured on
    each batch before its update. A non-finite loss aborts.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError("training data must be a non-empty 2d array")
    if data.shape[1] != params.layer_dims[0]:
        raise ValueError(
            f"data dim {data.shape[1]} does not match model dim {params.layer_dims[0]}"
        )
    if config.batch_size <= 0:
        raise ValueError("batch_size must be positive")
    if config.epochs < 0:
        raise ValueError("epochs must be non-negative")
    out = params.copy()
    rng = np.random.default_rng(config.seed)
    n = data.shape[0]
    losses = []
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            batch = data[perm[start : start + config.batch_size]]
            loss, w_grads, b_grads = loss_and_gradients(out, batch)
            if not math.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch offset {start}"
                )
            total += loss * batch.shape[0]
            for w, g in zip(out.weights, w_grads):
                w -= config.learning_rate * g
            for b, g in zip(out.biases, b_grads):
                b -= config.learning_rate * g
        losses.append(total / n)
    return TrainResult(params=out, losses=losses)


def score_docs(params: MLPParams, vectors: dict[str, np.ndarray]) -> list[ScoredDoc]:
    """Reconstruction error per document, input order preserved."""
    if not vectors:
        return []
    ids = list(vectors.keys())
    batch = np.stack([np.asarray(vectors[i], dtype=float) for i in ids])
    out = _forward_activations(params, batch)[-1]
    errors = np.sum((out - batch) ** 2, axis=1)
    return [ScoredDoc(doc_id=i, error=float(e)) for i, e in zip(ids, errors)]


def dda_filter(scored: list[ScoredDoc], theta: float):
    """Keep the best-reconstructed theta percent of documents.

    Documents are ordered by (error, doc_id) ascending and the first
    floor(theta/100 * N) survive; the rest are eliminated. Returns
    (kept, removed), both in that order.
    """
    if not 0 <= theta <= 100:
        raise ValueError("theta must be a percentage in [0, 100]")
    ordered = sorted(scored, key=lambda s: (s.error, s.doc_id))
    n = len(ordered)
    if float(theta).is_integer():
        keep = (int(theta) * n) // 100
    else:
        keep = math.floor(theta * n / 100.0)
    return ordered[:keep], ordered[keep:]


def save_checkpoint(path: str | Path, params: MLPParams) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        dims = ",".join(str(d) for d in params.layer_dims)
        fh.write(f"{MAGIC} {FORMAT_VERSION} {dims}\n")
        for w, b in zip(params.weights, params.biases):
            for row in w:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
            fh.write(" ".join(f"{v:.17g}" for v in b) + "\n")


def load_checkpoint(path: str | Path, expect_dims=None) -> MLPParams:
    """Read a checkpoint; dims must match expect_dims when given."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != MAGIC:
            raise CheckpointError("line 1: bad checkpoint header")
        if header[1] != str(FORMAT_VERSION):
            raise CheckpointError(f"line 1: unsupported version {header[1]!r}")
        try:
            dims = tuple(int(d) for d in header[2].split(","))
        except ValueError:
            raise CheckpointError(f"line 1: bad dims {header[2]!r}")
        if len(dims) < 2:
            raise CheckpointError("line 1: need at least two dims")
        if expect_dims is not None and dims != tuple(expect_dims):
            raise CheckpointError(
                f"checkpoint dims {dims} do not match expected {tuple(expect_dims)}"
            )
        weights = []
        biases = []
        lineno = 1

        def next_row(expect: int) -> np.ndarray:
            nonlocal lineno
            line = fh.readline()
            lineno += 1
            if not line:
                raise CheckpointError(f"line {lineno}: file truncated")
            try:
                row = np.array([float(v) for v in line.split()], dtype=float)
            except ValueError:
                raise CheckpointError(f"line {lineno}: unparseable values")
            if len(row) != expect:
                raise CheckpointError(
                    f"line {lineno}: got {len(row)} values, expected {expect}"
                )
            return row

        for fan_in, fan_out in zip(dims, dims[1:]):
            w = np.stack([next_row(fan_in) for _ in range(fan_out)])
            b = next_row(fan_out)
            weights.append(w)
            biases.append(b)
        if fh.readline().strip():
            raise CheckpointError("trailing content after final layer")
    return MLPParams(layer_dims=dims, weights=weights, biases=biases)
