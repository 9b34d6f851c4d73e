"""Experiment configuration: one YAML document with data/model/train sections.

The file is schema-versioned; every validation failure carries the dotted
path of the offending key so CLI users can fix the exact line.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field, fields

import yaml

from ..errors import ConfigError
from ..model.config import TRAIN_MODES, ModelConfig
from ..synthdata import CorpusConfig

SCHEMA_VERSION = 1

ACCENT_LOSSES = ("ce", "focal")
EMBEDDING_SOURCES = ("none", "labeled", "extracted")
NOVEL_STRATEGIES = ("untrained_row", "dominant_accent_row")
SPLITS = ("all", "s18")


@dataclass
class TrainConfig:
    """Knobs for one training run.

    ``beta_activation`` / ``anneal_epoch`` default to ceil(epochs / 2) when
    left as None; the accent term enters the total loss only after the
    activation epoch, and the learning rate decays by ``anneal_factor`` at
    the start of every epoch past the anneal boundary.
    """

    mode: str = "baseline"
    split: str = "all"
    accent_loss: str = "ce"
    lam: float = 0.3
    beta: float = 0.03
    gamma: float = 0.5
    epochs: int = 10
    beta_activation: int | None = None
    lr: float = 0.0012
    anneal_factor: float = 0.95
    anneal_epoch: int | None = None
    batch_size: int = 16
    embedding_source: str = "none"
    corruption_rate: float = 0.0
    novel_strategy: str = "untrained_row"
    strict_feasibility: bool = False
    # restrict training data to these accent ids (None = all available)
    train_accents: list[int] | None = None
    probe_limit: int = 120
    seed: int = 0

    def validate(self) -> None:
        if self.mode not in TRAIN_MODES:
            raise ConfigError("train.mode", f"must be one of {TRAIN_MODES}, got {self.mode!r}")
        if self.split not in SPLITS:
            raise ConfigError("train.split", f"must be one of {SPLITS}, got {self.split!r}")
        if self.accent_loss not in ACCENT_LOSSES:
            raise ConfigError(
                "train.accent_loss", f"must be one of {ACCENT_LOSSES}, got {self.accent_loss!r}"
            )
        for name in ("lam", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise ConfigError(f"train.{name}", "must be >= 0")
        if self.epochs < 1:
            raise ConfigError("train.epochs", "need at least one epoch")
        if self.lr <= 0:
            raise ConfigError("train.lr", "learning rate must be positive")
        if not 0.0 < self.anneal_factor <= 1.0:
            raise ConfigError("train.anneal_factor", "must lie in (0, 1]")
        for name in ("beta_activation", "anneal_epoch"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ConfigError(f"train.{name}", "must be >= 0 (or null for the default)")
        if self.batch_size < 1:
            raise ConfigError("train.batch_size", "need batch_size >= 1")
        if self.embedding_source not in EMBEDDING_SOURCES:
            raise ConfigError(
                "train.embedding_source",
                f"must be one of {EMBEDDING_SOURCES}, got {self.embedding_source!r}",
            )
        if not 0.0 <= self.corruption_rate <= 1.0:
            raise ConfigError("train.corruption_rate", "must lie in [0, 1]")
        if self.novel_strategy not in NOVEL_STRATEGIES:
            raise ConfigError(
                "train.novel_strategy",
                f"must be one of {NOVEL_STRATEGIES}, got {self.novel_strategy!r}",
            )
        if self.probe_limit < 1:
            raise ConfigError("train.probe_limit", "need probe_limit >= 1")

    @property
    def activation_epoch(self) -> int:
        if self.beta_activation is not None:
            return self.beta_activation
        return math.ceil(self.epochs / 2)

    @property
    def anneal_boundary(self) -> int:
        if self.anneal_epoch is not None:
            return self.anneal_epoch
        return math.ceil(self.epochs / 2)

    def beta_at(self, epoch: int) -> float:
        """Accent-loss weight for a 1-based epoch (0 before activation)."""
        if self.mode == "baseline":
            return 0.0
        return self.beta if epoch > self.activation_epoch else 0.0


@dataclass
class ExperimentConfig:
    data: CorpusConfig = field(default_factory=CorpusConfig)
    model: ModelConfig = field(default_factory=ModelConfig.desk)
    train: TrainConfig = field(default_factory=TrainConfig)

    def validate(self) -> None:
        self.model.validate()
        self.train.validate()
        if self.model.input_dim != self.data.feature_dim:
            raise ConfigError(
                "model.input_dim",
                f"must match data.feature_dim ({self.data.feature_dim}), "
                f"got {self.model.input_dim}",
            )
        if self.model.vocab_size != self.data.vocab_size:
            raise ConfigError(
                "model.vocab_size",
                f"must match data.vocab_size ({self.data.vocab_size}), "
                f"got {self.model.vocab_size}",
            )
        if self.model.n_accents != self.data.n_accents:
            raise ConfigError(
                "model.n_accents",
                f"must match data.n_accents ({self.data.n_accents}), "
                f"got {self.model.n_accents}",
            )
        if self.train.embedding_source == "none":
            if self.model.fusion != "none":
                raise ConfigError(
                    "train.embedding_source",
                    f"fusion {self.model.fusion!r} needs an embedding source",
                )
        elif self.model.fusion == "none":
            raise ConfigError(
                "model.fusion",
                f"embedding source {self.train.embedding_source!r} needs a fusion mode",
            )
        if self.train.train_accents is not None:
            for a in self.train.train_accents:
                if not 0 <= a < self.data.n_accents:
                    raise ConfigError("train.train_accents", f"unknown accent id {a}")


def to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "data": dataclasses.asdict(cfg.data),
        "model": dataclasses.asdict(cfg.model),
        "train": dataclasses.asdict(cfg.train),
    }


def config_fingerprint(cfg: ExperimentConfig) -> str:
    """Stable short hash of the fully resolved configuration."""
    blob = json.dumps(to_dict(cfg), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


_SECTIONS = {"data": CorpusConfig, "model": ModelConfig, "train": TrainConfig}

# model keys that, when omitted, are copied from the data section so the two
# cannot drift apart in hand-written configs
_DERIVED_MODEL_KEYS = {
    "input_dim": "feature_dim",
    "vocab_size": "vocab_size",
    "n_accents": "n_accents",
}


def _build_section(name: str, cls, raw: dict):
    allowed = {f.name for f in fields(cls)}
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"{name}.{key}", "unknown field")
    try:
        return cls(**raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(name, str(exc)) from exc


def from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config document must be a mapping")
    version = doc.get("schema_version")
    if version is None:
        raise ConfigError("schema_version", "missing (expected 1)")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}, got {version}")
    for key in doc:
        if key != "schema_version" and key not in _SECTIONS:
            raise ConfigError(key, "unknown section")
    sections = {}
    for name, cls in _SECTIONS.items():
        raw = doc.get(name, {})
        if not isinstance(raw, dict):
            raise ConfigError(name, "section must be a mapping")
        sections[name] = dict(raw)
    for model_key, data_key in _DERIVED_MODEL_KEYS.items():
        if model_key not in sections["model"] and data_key in sections["data"]:
            sections["model"][model_key] = sections["data"][data_key]
    cfg = ExperimentConfig(
        data=_build_section("data", CorpusConfig, sections["data"]),
        model=_build_section("model", ModelConfig, sections["model"]),
        train=_build_section("train", TrainConfig, sections["train"]),
    )
    cfg.validate()
    return cfg


def parse_override(text: str) -> tuple[list[str], object]:
    """Parse one ``section.key=value`` override; values use YAML typing."""
    if "=" not in text:
        raise ConfigError("--override", f"expected key=value, got {text!r}")
    key, _, value = text.partition("=")
    path = key.strip().split(".")
    if len(path) != 2 or not all(path):
        raise ConfigError("--override", f"key must look like section.field, got {key!r}")
    try:
        parsed = yaml.safe_load(value)
    except yaml.YAMLError as exc:
        raise ConfigError(key, f"unparseable value {value!r}: {exc}") from exc
    return path, parsed


def apply_overrides(doc: dict, overrides) -> dict:
    doc = {k: (dict(v) if isinstance(v, dict) else v) for k, v in doc.items()}
    for text in overrides:
        (section, key), value = parse_override(text)
        if section not in _SECTIONS:
            raise ConfigError(section, "unknown section")
        doc.setdefault(section, {})[key] = value
    return doc


def load_config(path, overrides=()) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"invalid YAML: {exc}") from exc
    if doc is None:
        doc = {}
    if overrides:
        doc = apply_overrides(doc, overrides)
    return from_dict(doc)


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(to_dict(cfg), fh, sort_keys=False)
