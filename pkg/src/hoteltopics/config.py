"""Pipeline configuration: strict JSON schema and per-stage seed derivation.

Unknown keys anywhere in the config file are errors (they are almost always
typos), and per-stage seeds cannot be set directly: every stage derives its
seed from the global seed hashed with a stage tag, which keeps runs
reproducible without correlated random streams.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .coherence import CoherenceConfig
from .embedding import EmbedConfig
from .lda import LdaConfig
from .projection import ProjectConfig
from .stats import AnalysisConfig


class ConfigError(ValueError):
    """Malformed pipeline configuration."""


def derive_seed(seed: int, tag: str) -> int:
    """Stable 63-bit stage seed from the global seed and a stage tag."""
    digest = hashlib.blake2b(f"{seed}:{tag}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") & (2**63 - 1)


@dataclass(frozen=True)
class InputConfig:
    path: str
    format: str = "jsonl"
    language: str | None = None

    def __post_init__(self) -> None:
        if self.format not in ("jsonl", "csv"):
            raise ConfigError(f"input.format must be jsonl or csv, got {self.format!r}")


@dataclass(frozen=True)
class ResourceConfig:
    stopwords: str | None = None
    lemmas: str | None = None
    min_token_len: int = 2
    min_count: int = 5


@dataclass(frozen=True)
class SweepConfig:
    enabled: bool = True
    k_min: int = 2
    k_max: int = 9
    runs: int = 20

    def __post_init__(self) -> None:
        if self.k_min < 2:
            raise ConfigError("sweep.k_min must be >= 2")
        if self.k_max < self.k_min:
            raise ConfigError("sweep.k_max must be >= sweep.k_min")
        if self.runs < 1:
            raise ConfigError("sweep.runs must be >= 1")

    @property
    def k_values(self) -> tuple[int, ...]:
        return tuple(range(self.k_min, self.k_max + 1))


_SECTION_TYPES = {
    "input": InputConfig,
    "resources": ResourceConfig,
    "sweep": SweepConfig,
    "lda": LdaConfig,
    "coherence": CoherenceConfig,
    "embedding": EmbedConfig,
    "projection": ProjectConfig,
    "analysis": AnalysisConfig,
}

# Stage seeds are always derived; explicit per-section seeds would silently
# be ignored, so reject them outright.
_FORBIDDEN = {"lda": {"seed"}, "embedding": {"seed"}, "projection": {"seed"}}


def _build_section(name: str, cls, data: dict):
    if not isinstance(data, dict):
        raise ConfigError(f"section {name!r} must be an object")
    allowed = {f.name for f in fields(cls)} - _FORBIDDEN.get(name, set())
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown key {name}.{sorted(unknown)[0]}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad section {name!r}: {exc}") from exc


@dataclass(frozen=True)
class PipelineConfig:
    input: InputConfig
    output_dir: str
    seed: int = 0
    jobs: int = 1
    resources: ResourceConfig = field(default_factory=ResourceConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    lda: LdaConfig = field(default_factory=lambda: LdaConfig(n_topics=10))
    coherence: CoherenceConfig = field(default_factory=CoherenceConfig)
    embedding: EmbedConfig = field(default_factory=EmbedConfig)
    projection: ProjectConfig = field(default_factory=ProjectConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration root must be an object")
        allowed = {f.name for f in fields(cls)}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown key {sorted(unknown)[0]}")
        if "input" not in data:
            raise ConfigError("missing required section 'input'")
        if "output_dir" not in data:
            raise ConfigError("missing required key 'output_dir'")
        kwargs = {
            "output_dir": str(data["output_dir"]),
            "seed": int(data.get("seed", 0)),
            "jobs": int(data.get("jobs", 1)),
        }
        if kwargs["seed"] < 0:
            raise ConfigError("seed must be unsigned")
        for name, section_cls in _SECTION_TYPES.items():
            if name in data:
                kwargs[name] = _build_section(name, section_cls, data[name])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"no such config file: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        config = cls.from_dict(data)
        # Relative data paths resolve against the config file's directory.
        base = path.parent
        return config.resolve_paths(base)

    def resolve_paths(self, base: Path) -> "PipelineConfig":
        def _resolve(value: str | None) -> str | None:
            if value is None:
                return None
            p = Path(value)
            return str(p if p.is_absolute() else base / p)

        return dataclasses.replace(
            self,
            input=dataclasses.replace(self.input, path=_resolve(self.input.path)),
            resources=dataclasses.replace(
                self.resources,
                stopwords=_resolve(self.resources.stopwords),
                lemmas=_resolve(self.resources.lemmas),
            ),
            output_dir=_resolve(self.output_dir),
        )

    def override(self, seed: int | None = None, output_dir: str | None = None) -> "PipelineConfig":
        config = self
        if seed is not None:
            if seed < 0:
                raise ConfigError("seed must be unsigned")
            config = dataclasses.replace(config, seed=seed)
        if output_dir is not None:
            config = dataclasses.replace(config, output_dir=output_dir)
        return config

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)
