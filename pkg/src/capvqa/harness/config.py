"""Experiment configuration: one human-readable file per experiment.

Config files are JSON or YAML. Named presets record the reference training
protocols; desk-scale presets shrink steps and batch so the suite stays
fast. Relative dataset paths resolve against ``data_root`` (falling back to
the CAPVQA_DATA_ROOT environment variable, then the current directory).

Every run is identified by a hash of its resolved config, and all run
artifacts live under ``<run_root>/<hash>/``.
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from ..errors import ConfigError

DATA_ROOT_ENV = "CAPVQA_DATA_ROOT"

RUN_MODES = ("caption", "question_only", "multimodal", "early_fusion")
CAPTION_SOURCES = ("generated", "gold")


@dataclass
class RunConfig:
    mode: str = "caption"
    steps: int = 2000
    batch_size: int = 10
    learning_rate: float = 0.01
    schedule: str = "cosine_warmup"
    warmup_steps: int = 100
    weight_decay: float = 0.0
    seeds: list = field(default_factory=lambda: [0, 1, 2])

    # dataset files
    train_questions: str = ""
    train_annotations: str = ""
    eval_questions: str = ""
    eval_annotations: str = ""
    captions: str = ""
    regions: str = ""
    caption_source: str = "generated"
    gold_caption_eval_seeds: list = field(default_factory=list)

    # answer vocabulary: a prebuilt file, or exactly one cutoff
    vocab_path: str = ""
    vocab_max_size: int = 0
    vocab_min_count: int = 0

    # adapter and toy-model hyperparameters
    classifier_adapter: str = "toy-classifier"
    distributions: str = ""
    init_checkpoint: str = ""  # warm start; chains pretrain -> finetune runs
    d_h: int = 32
    n_token: int = 512

    # step-selection protocol
    val_fraction: float = 0.2
    split_seed: int = 0
    eval_interval: int = 50

    official_averaging: bool = False
    run_root: str = "runs"
    data_root: str = ""

    def __post_init__(self):
        if self.mode not in RUN_MODES:
            raise ConfigError(f"unknown run mode {self.mode!r}")
        if self.steps <= 0:
            raise ConfigError("steps must be positive")
        if self.batch_size <= 0:
            raise ConfigError("batch_size must be positive")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.schedule == "constant" and self.warmup_steps != 0:
            raise ConfigError("constant schedule requires warmup_steps = 0")
        if self.schedule not in ("constant", "cosine_warmup"):
            raise ConfigError(f"unknown schedule {self.schedule!r}")
        if self.caption_source not in CAPTION_SOURCES:
            raise ConfigError(f"unknown caption_source {self.caption_source!r}")
        if not (0.0 < self.val_fraction < 1.0):
            raise ConfigError("val_fraction must be in (0, 1)")
        if self.eval_interval <= 0:
            raise ConfigError("eval_interval must be positive")
        if not self.vocab_path and bool(self.vocab_max_size) == bool(self.vocab_min_count):
            raise ConfigError(
                "supply a vocab_path, or exactly one of vocab_max_size / "
                "vocab_min_count"
            )

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {unknown}")
        return cls(**d)

    @classmethod
    def from_preset(cls, name, **overrides):
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
        merged = dict(PRESETS[name])
        merged.update(overrides)
        return cls.from_dict(merged)

    @classmethod
    def from_payload(cls, payload):
        """Build from a raw mapping, honoring an optional 'preset' key."""
        if not isinstance(payload, dict):
            raise ConfigError("expected a mapping of config fields")
        payload = dict(payload)
        preset = payload.pop("preset", None)
        if preset:
            return cls.from_preset(preset, **payload)
        return cls.from_dict(payload)

    @classmethod
    def from_file(cls, path):
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as f:
            if path.suffix in (".yaml", ".yml"):
                doc = yaml.safe_load(f)
            else:
                try:
                    doc = json.load(f)
                except json.JSONDecodeError as e:
                    raise ConfigError(f"{path}:{e.lineno}: {e.msg}") from e
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: expected a mapping of config fields")
        return cls.from_payload(doc)

    def resolved_data_root(self):
        return Path(self.data_root or os.environ.get(DATA_ROOT_ENV, "") or ".")

    def resolve_path(self, value):
        if not value:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.resolved_data_root() / p

    def config_hash(self):
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def run_dir(self):
        return Path(self.run_root) / self.config_hash()

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")


# Reference protocols plus a desk-scale preset for tests and demos.
PRESETS = {
    # Classification fine-tuning: 88K AdamW steps, batch 56, peak lr 5e-5,
    # cosine schedule with 2K linear warmup steps, three seeds.
    "bert-classify": {
        "mode": "caption",
        "steps": 88_000,
        "batch_size": 56,
        "learning_rate": 5e-5,
        "schedule": "cosine_warmup",
        "warmup_steps": 2_000,
        "seeds": [0, 1, 2],
        "vocab_max_size": 3129,
    },
    # Generative fine-tuning: fixed lr 5e-5, no scheduler; the step count
    # comes from the select-steps protocol (20K-step search by default).
    "t5-generate": {
        "mode": "caption",
        "steps": 20_000,
        "batch_size": 56,
        "learning_rate": 5e-5,
        "schedule": "constant",
        "warmup_steps": 0,
        "seeds": [0, 1, 2],
        "vocab_max_size": 3129,
    },
    # Desk-scale toy runs: small model, few steps, fast suite.
    "toy-classify": {
        "mode": "caption",
        "steps": 2_000,
        "batch_size": 10,
        "learning_rate": 0.01,
        "schedule": "cosine_warmup",
        "warmup_steps": 100,
        "seeds": [0, 1, 2],
        "vocab_max_size": 64,
        "d_h": 32,
        "n_token": 512,
    },
}
