"""Run configuration: one YAML file, documented defaults, range checks."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .metrics import ScoreWeights
from .qagen import GenConfig
from .templates import ALL_SUBTASKS
from .tracks import MotionThresholds


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    annotations: str | None = None   # line-delimited annotation records
    durations: str | None = None     # optional {video_id, duration_s} records
    vocab: str | None = None         # None -> packaged vocabulary
    templates: str | None = None     # None -> packaged registry
    fps: float = 30.0                # target frame rate after broadcasting
    source_fps: float = 1.0          # annotation rate of the raw stream
    half_window_s: float = 0.5       # broadcast reach on each side of a label
    clip_min_s: float = 20.0
    clip_max_s: float = 30.0
    delta: float = 0.3 * math.sqrt(2.0)
    gate: float = 0.3
    slow_threshold: float = 0.02
    active_threshold: float = 0.10
    default_quota: int = 20
    quotas: dict = field(default_factory=dict)
    velocity_numeric_weight: float = 0.5
    comparison_verdict_weight: float = 0.5
    cot_conclusion_weight: float = 0.7
    seed: int = 0
    max_reject_rate: float = 0.0
    workers: int = 1

    def __post_init__(self):
        def need(ok: bool, msg: str):
            if not ok:
                raise ConfigError(msg)

        need(self.fps > 0 and self.source_fps > 0, "fps and source_fps must be positive")
        need(0 <= self.half_window_s <= 5, "half_window_s must lie in [0, 5]")
        need(0 < self.clip_min_s <= self.clip_max_s, "need 0 < clip_min_s <= clip_max_s")
        need(0 < self.delta <= math.sqrt(2.0), "delta must lie in (0, sqrt(2)]")
        need(0 < self.gate <= math.sqrt(2.0), "gate must lie in (0, sqrt(2)]")
        need(0 <= self.slow_threshold <= self.active_threshold, "need 0 <= slow_threshold <= active_threshold")
        need(self.default_quota >= 0, "default_quota must be non-negative")
        unknown = set(self.quotas) - set(ALL_SUBTASKS)
        need(not unknown, f"quotas for unknown subtasks: {sorted(unknown)}")
        need(all(int(v) >= 0 for v in self.quotas.values()), "quotas must be non-negative")
        for name in ("velocity_numeric_weight", "comparison_verdict_weight", "cot_conclusion_weight",
                     "max_reject_rate"):
            need(0 <= getattr(self, name) <= 1, f"{name} must lie in [0, 1]")
        need(self.workers >= 1, "workers must be at least 1")
        need(isinstance(self.seed, int) and self.seed >= 0, "seed must be a non-negative integer")

    @classmethod
    def from_mapping(cls, data: dict | None) -> "Config":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path | None) -> "Config":
        if path is None:
            return cls()
        try:
            data = yaml.safe_load(Path(path).read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if data is not None and not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        return cls.from_mapping(data)

    def to_mapping(self) -> dict:
        return asdict(self)

    def gen_config(self) -> GenConfig:
        return GenConfig(delta=self.delta, gate=self.gate,
                         thresholds=MotionThresholds(self.slow_threshold, self.active_threshold),
                         default_quota=self.default_quota, quotas=dict(self.quotas))

    def weights(self) -> ScoreWeights:
        return ScoreWeights(self.velocity_numeric_weight, self.comparison_verdict_weight,
                            self.cot_conclusion_weight)
