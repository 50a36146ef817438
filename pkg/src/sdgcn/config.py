"""Run configuration: one flat key=value file controls data paths, model
hyperparameters, training, and the ablation switches."""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass

from .errors import ConfigError
from .gcn import TOPOLOGIES


@dataclass
class RunConfig:
    # data
    train_xml: str = ""
    test_xml: str = ""
    embeddings: str = ""
    # model
    d_emb: int = 300
    d_hid: int = 300
    num_layers: int = 2
    topology: str = "global"
    position_cutoff: int = 20
    dropout: float = 0.5
    lam: float = 0.01
    # ablation switches
    use_position: bool = True
    use_c2a_attention: bool = True
    use_gcn: bool = True
    attend_over_weighted_context: bool = False
    train_embeddings: bool = False
    # training
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 0.001
    seed: int = 1
    max_aspects: int = 16

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"topology must be one of {TOPOLOGIES}, got '{self.topology}'")
        if not 1 <= self.num_layers <= 8:
            raise ConfigError(f"num_layers must be in 1..8, got {self.num_layers}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.lam < 0:
            raise ConfigError(f"lam must be non-negative, got {self.lam}")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")
        if self.learning_rate < 0:
            raise ConfigError(f"learning_rate must be non-negative, got {self.learning_rate}")
        for name in ("d_emb", "d_hid", "position_cutoff", "max_aspects"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELDS[name].type
    raw = raw.strip()
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: '{raw}'")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for '{name}': {exc}") from exc


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse key=value lines; '#' starts a comment; unknown keys are errors."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key=value, got '{line}'")
        key, raw = line.split("=", 1)
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"config line {lineno}: unknown key '{key}'")
        values[key] = _coerce(key, raw)
    for key, raw in (overrides or {}).items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key '{key}'")
        values[key] = _coerce(key, str(raw)) if isinstance(raw, str) else raw
    return RunConfig(**values)


def load_config(path, overrides: dict | None = None) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config '{path}': {exc}") from exc
    return parse_config(text, overrides)


def config_lines(config: RunConfig) -> list[str]:
    return [f"{f.name}={getattr(config, f.name)}" for f in dataclasses.fields(RunConfig)]


def config_hash(config: RunConfig) -> str:
    """Stable short digest of every field, for results files."""
    canon = "\n".join(config_lines(config))
    return hashlib.blake2b(canon.encode("utf-8"), digest_size=8).hexdigest()
