"""Pipeline configuration.

Defaults mirror the tuned hyperparameters: temperature 0.0, attribute weights
what=2/others=1, temporal penalty 2, consensus threshold 4, 25 reduced
dimensions, 50-node dimension sample, 18-item review sessions. Precedence
when loading: explicit flag overrides > config file > environment variables >
defaults.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from layermind.errors import PreconditionError

ATTRIBUTES = ("what", "when", "where", "who", "why", "how")


def default_weights() -> dict[str, int]:
    return {"what": 2, "when": 1, "where": 1, "who": 1, "why": 1, "how": 1}


@dataclass
class ConsensusConfig:
    weights: dict[str, int] = field(default_factory=default_weights)
    same_date_penalty: int = 2
    tau: int = 4
    reduce_dim: int = 25
    min_cluster_size: int = 2
    seed: int = 7

    def validate(self) -> None:
        if set(self.weights) != set(ATTRIBUTES):
            raise PreconditionError(f"weights must cover exactly {ATTRIBUTES}")
        if any(w <= 0 for w in self.weights.values()):
            raise PreconditionError("attribute weights must be positive")
        if self.tau < 1:
            raise PreconditionError("tau must be >= 1")
        if self.reduce_dim < 2:
            raise PreconditionError("reduce_dim must be >= 2")

    @property
    def max_raw_score(self) -> int:
        return sum(self.weights.values())


@dataclass
class AbstractionConfig:
    sample_size: int = 50
    dims_per_layer: int = 3
    clusters_per_dimension: int | None = None  # None: max(2, |prev layer| // 5)
    seed: int = 7

    def validate(self) -> None:
        if self.sample_size < 1:
            raise PreconditionError("sample_size must be >= 1")
        if self.dims_per_layer < 1:
            raise PreconditionError("dims_per_layer must be >= 1")

    def clusters_for(self, prev_layer_size: int) -> int:
        if self.clusters_per_dimension is not None:
            return self.clusters_per_dimension
        return max(2, prev_layer_size // 5)


@dataclass
class LlmConfig:
    mode: str = "replay"  # live | replay | record
    backend: str = "scripted"  # scripted | http (live/record modes)
    endpoint: str = ""
    api_key: str = ""
    model_name: str = "gemini-2.5-pro"
    temperature: float = 0.0
    fixture_dir: str = "fixtures"
    max_inflight: int = 4

    def validate(self) -> None:
        if self.mode not in ("live", "replay", "record"):
            raise PreconditionError(f"unknown llm mode: {self.mode!r}")
        if self.mode == "replay" and self.temperature != 0.0:
            raise PreconditionError("replay-verified runs require temperature 0.0")
        if self.backend not in ("scripted", "http"):
            raise PreconditionError(f"unknown llm backend: {self.backend!r}")


@dataclass
class EmbeddingConfig:
    provider: str = "hashing"  # hashing | sentence-transformer
    model_name: str = "sentence-transformers/all-MiniLM-L6-v2"
    dim: int = 384


@dataclass
class EvalConfig:
    num_target_labels: int = 5
    testset_size: int = 27
    window_days: int = 21


@dataclass
class HitlConfig:
    session_size: int = 18


@dataclass
class PipelineConfig:
    consensus: ConsensusConfig = field(default_factory=ConsensusConfig)
    abstraction: AbstractionConfig = field(default_factory=AbstractionConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    hitl: HitlConfig = field(default_factory=HitlConfig)
    seed: int = 7
    data_dir: str = "data"
    api_token: str = ""  # optional static bearer token for the HTTP service

    def validate(self) -> "PipelineConfig":
        self.consensus.validate()
        self.abstraction.validate()
        self.llm.validate()
        return self


_SECTION_TYPES = {
    "consensus": ConsensusConfig,
    "abstraction": AbstractionConfig,
    "llm": LlmConfig,
    "embedding": EmbeddingConfig,
    "eval": EvalConfig,
    "hitl": HitlConfig,
}

_ENV_MAP = {
    "PTM_LLM_ENDPOINT": ("llm", "endpoint"),
    "PTM_LLM_API_KEY": ("llm", "api_key"),
    "PTM_LLM_MODEL": ("llm", "model_name"),
    "PTM_EMBED_ENDPOINT": ("embedding", "model_name"),
    "PTM_MODE": ("llm", "mode"),
    "PTM_DATA_DIR": (None, "data_dir"),
    "PTM_FIXTURE_DIR": ("llm", "fixture_dir"),
    "PTM_API_TOKEN": (None, "api_token"),
}


def _apply(config: PipelineConfig, section: str | None, key: str, value) -> None:
    target = config if section is None else getattr(config, section)
    current = getattr(target, key)
    if isinstance(current, bool):
        value = bool(value)
    elif isinstance(current, int) and not isinstance(value, bool):
        value = int(value)
    elif isinstance(current, float):
        value = float(value)
    setattr(target, key, value)


def load_config(
    path: str | Path | None = None,
    overrides: dict | None = None,
    env: dict | None = None,
) -> PipelineConfig:
    """Build a config from defaults, then env, then file, then overrides."""
    env = dict(os.environ if env is None else env)
    config = PipelineConfig()
    for env_key, (section, key) in _ENV_MAP.items():
        if env_key in env:
            _apply(config, section, key, env[env_key])
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        for section, payload in doc.items():
            if section in _SECTION_TYPES and isinstance(payload, dict):
                for key, value in payload.items():
                    _apply(config, section, key, value)
            elif hasattr(config, section) and section not in _SECTION_TYPES:
                _apply(config, None, section, value=payload)
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        if "." in dotted:
            section, key = dotted.split(".", 1)
            _apply(config, section, key, value)
        else:
            _apply(config, None, dotted, value)
    return config.validate()


def config_to_dict(config: PipelineConfig) -> dict:
    return dataclasses.asdict(config)
