"""Flat ``section.key = value`` pipeline configuration."""

from __future__ import annotations

import dataclasses
import hashlib
import os
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .embed import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass
class Paths:
    food_reviews: str | None = None
    wine_reviews: str | None = None
    food_item_map: str | None = None
    aroma_wheel: str | None = None
    anchors: str | None = None
    flavor_nodes: str | None = None
    flavor_edges: str | None = None
    metapaths: str | None = None


@dataclass
class CorpusSettings:
    min_count: int = 10
    score_threshold: float = 10.0


@dataclass
class TextSettings:
    dim: int = 300
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    min_count: int = 1
    subsample_t: float = 1e-4
    table_size: int = 10_000_000


@dataclass
class ProfileSettings:
    wheel_level: str = "tier2"


@dataclass
class RuleSettings:
    tau_high: float = 0.75
    tau_bitter: float = 0.75


@dataclass
class PairSettings:
    k: int = 3


@dataclass
class GraphSettings:
    include_wine: bool = True
    dim: int = 300
    window: int = 5
    negatives: int = 5
    epochs: int = 20
    initial_lr: float = 0.025
    subsample_t: float = 0.0
    table_size: int = 10_000_000


@dataclass
class WalkSettings:
    walks_per_node: int = 100
    walk_length: int = 50
    weighted: bool = False
    dump_walks: bool = False


@dataclass
class EvalSettings:
    dataset: str = ""
    nmi_average: str = "geometric"
    restarts: int = 10
    max_iter: int = 300


@dataclass
class QuerySettings:
    k: int = 3


@dataclass
class PipelineConfig:
    output_dir: str = "out"
    seed: int = 42
    paths: Paths = field(default_factory=Paths)
    corpus: CorpusSettings = field(default_factory=CorpusSettings)
    text: TextSettings = field(default_factory=TextSettings)
    profile: ProfileSettings = field(default_factory=ProfileSettings)
    rules: RuleSettings = field(default_factory=RuleSettings)
    pair: PairSettings = field(default_factory=PairSettings)
    graph: GraphSettings = field(default_factory=GraphSettings)
    walk: WalkSettings = field(default_factory=WalkSettings)
    eval: EvalSettings = field(default_factory=EvalSettings)
    query: QuerySettings = field(default_factory=QuerySettings)

    def text_train_config(self) -> TrainConfig:
        return TrainConfig(seed=self.seed, **dataclasses.asdict(self.text))

    def graph_train_config(self) -> TrainConfig:
        fields = dataclasses.asdict(self.graph)
        fields.pop("include_wine")
        return TrainConfig(seed=self.seed, **fields)

    def flat(self) -> dict[str, str]:
        out = {"output_dir": self.output_dir, "seed": str(self.seed)}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if dataclasses.is_dataclass(value):
                for k, v in dataclasses.asdict(value).items():
                    out[f"{f.name}.{k}"] = "" if v is None else str(v)
        return out


def _convert(raw: str, hint, key: str):
    if hint is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if hint in (int, float):
        try:
            return hint(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected {hint.__name__}, got {raw!r}") from None
    if hint is str:
        return raw
    return raw or None  # optional path


def _set(target, name: str, raw: str, key: str) -> None:
    hints = typing.get_type_hints(type(target))
    if name not in hints or dataclasses.is_dataclass(hints[name]):
        raise ConfigError(f"unknown config key {key!r}")
    setattr(target, name, _convert(raw, hints[name], key))


def parse_config(text: str, base_dir: str | Path = ".") -> PipelineConfig:
    cfg = PipelineConfig()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected key = value")
        section, _, name = key.rpartition(".")
        if not section:
            _set(cfg, name, value, key)
            continue
        sub = getattr(cfg, section, None)
        if not dataclasses.is_dataclass(sub):
            raise ConfigError(f"unknown config section {section!r}")
        _set(sub, name, value, key)

    base = Path(base_dir)
    for f in dataclasses.fields(cfg.paths):
        p = getattr(cfg.paths, f.name)
        if p and not Path(p).is_absolute():
            setattr(cfg.paths, f.name, os.path.normpath(base / p))
    if not Path(cfg.output_dir).is_absolute():
        cfg.output_dir = os.path.normpath(base / cfg.output_dir)
    return cfg


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), path.resolve().parent)


# keys each stage adds on top of its upstream stages
STAGE_KEYS = {
    "prepare": ("paths.food_reviews", "paths.wine_reviews", "paths.food_item_map", "corpus."),
    "train-text": ("text.", "seed"),
    "profile": ("paths.aroma_wheel", "paths.anchors", "profile."),
    "pair": ("rules.", "pair."),
    "build-graph": ("paths.flavor_nodes", "paths.flavor_edges", "graph.include_wine"),
    "train-graph": ("paths.metapaths", "walk.", "graph."),
    "evaluate": ("eval.",),
}
STAGE_ORDER = tuple(STAGE_KEYS)


def stage_hash(cfg: PipelineConfig, stage: str) -> str:
    """Hash of every config value that can influence ``stage``'s output."""
    prefixes = [p for s in STAGE_ORDER[: STAGE_ORDER.index(stage) + 1] for p in STAGE_KEYS[s]]
    flat = cfg.flat()
    items = sorted(
        (k, v) for k, v in flat.items()
        if any(k == p or (p.endswith(".") and k.startswith(p)) for p in prefixes)
        and k != "walk.dump_walks"
    )
    blob = "\n".join(f"{k}={v}" for k, v in items).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
