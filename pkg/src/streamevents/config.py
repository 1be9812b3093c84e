"""Run configuration: defaults, key=value file parsing, validation.

Config files are flat text: one `key = value` per line, `#` comments
and blank lines ignored. Every key has a default, so an empty file is
a valid config.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    # stage thresholds; percentage-style knobs range over 0..100
    theta_dda: float = 98.0
    theta_ic: float = 70.0
    ic_limit: int = 64
    theta_sd: float = 85.0
    k_d: int = 16
    theta_rp: float = 80.0
    count_rp: int = 0
    beta1: int = 3
    beta2: int = 25
    beta3: int = 3

    # windowing
    window_minutes: int = 10
    window_start_ms: int | None = None
    train_before_ms: int | None = None

    # embeddings
    provider: str = "stub"
    embed_dim: int = 128
    embeddings_path: str | None = None
    remote_url: str | None = None

    # reconstruction filter network
    ae_layer_dims: tuple = (128, 64, 32, 64, 128)
    ae_epochs: int = 50
    ae_batch_size: int = 32
    ae_learning_rate: float = 0.05

    # switches
    dda_enabled: bool = True
    rp_enabled: bool = True
    filter_training_period: bool = False
    min_size_after_prune: bool = False
    rank_m_tokens: bool = False

    seed: int = 0
    stopwords_path: str | None = None


_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig)}

_INT_OPTIONAL = {"window_start_ms", "train_before_ms"}
_STR_OPTIONAL = {"embeddings_path", "remote_url", "stopwords_path"}
_BOOL_KEYS = {
    "dda_enabled",
    "rp_enabled",
    "filter_training_period",
    "min_size_after_prune",
    "rank_m_tokens",
}
_FLOAT_KEYS = {"theta_dda", "theta_ic", "theta_sd", "theta_rp", "ae_learning_rate"}
_INT_KEYS = {
    "ic_limit",
    "k_d",
    "count_rp",
    "beta1",
    "beta2",
    "beta3",
    "window_minutes",
    "embed_dim",
    "ae_epochs",
    "ae_batch_size",
    "seed",
}
_STR_KEYS = {"provider"}
_TUPLE_KEYS = {"ae_layer_dims"}


def _parse_value(key: str, raw: str):
    if key in _BOOL_KEYS:
        lowered = raw.lower()
        if lowered in ("true", "yes", "1"):
            return True
        if lowered in ("false", "no", "0"):
            return False
        raise ConfigError(f"{key}: expected true/false, got {raw!r}")
    try:
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _INT_KEYS or key in _INT_OPTIONAL:
            return int(raw)
        if key in _TUPLE_KEYS:
            return tuple(int(part) for part in raw.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: bad value {raw!r}") from exc
    return raw


def load_config(path: str | Path) -> PipelineConfig:
    """Read a key=value file and return a validated config."""
    overrides = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {line_no}: expected key = value")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _FIELDS:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        if key in overrides:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        overrides[key] = _parse_value(key, raw)
    config = PipelineConfig(**overrides)
    validate(config)
    return config


def validate(config: PipelineConfig) -> None:
    problems = []
    for key in ("theta_dda", "theta_ic", "theta_rp"):
        value = getattr(config, key)
        if not 0.0 <= value <= 100.0:
            problems.append(f"{key} must be in [0, 100], got {value}")
    if not -100.0 <= config.theta_sd <= 100.0:
        problems.append(f"theta_sd must be in [-100, 100], got {config.theta_sd}")
    for key in (
        "ic_limit",
        "k_d",
        "beta3",
        "window_minutes",
        "embed_dim",
        "ae_epochs",
        "ae_batch_size",
    ):
        value = getattr(config, key)
        if value < 1:
            problems.append(f"{key} must be >= 1, got {value}")
    for key in ("count_rp", "beta1", "beta2"):
        value = getattr(config, key)
        if value < 0:
            problems.append(f"{key} must be >= 0, got {value}")
    if config.ae_learning_rate <= 0:
        problems.append("ae_learning_rate must be positive")
    if config.provider not in ("stub", "file", "remote"):
        problems.append(f"provider must be stub, file or remote, got {config.provider!r}")
    dims = config.ae_layer_dims
    if len(dims) < 2 or any(d < 1 for d in dims):
        problems.append(f"ae_layer_dims needs >= 2 positive entries, got {dims}")
    elif dims[0] != dims[-1]:
        problems.append("ae_layer_dims must start and end with the same width")
    elif config.dda_enabled and config.provider == "stub" and dims[0] != config.embed_dim:
        problems.append(
            f"ae_layer_dims width {dims[0]} does not match embed_dim {config.embed_dim}"
        )
    if problems:
        raise ConfigError("; ".join(problems))


def render_config(config: PipelineConfig) -> str:
    """Write every key back out as a loadable key=value file."""
    lines = []
    for field in dataclasses.fields(PipelineConfig):
        value = getattr(config, field.name)
        if value is None:
            continue
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, tuple):
            text = ",".join(str(v) for v in value)
        else:
            text = str(value)
        lines.append(f"{field.name} = {text}")
    return "\n".join(lines) + "\n"
