"""Rule-based per-sample scoring and micro-averaged task reports."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import kernels
from .parsing import FAILED, ParsedAnswer, parse_answer
from .templates import CORE_OF, CORE_TASKS, SUBTASKS
from .vocab import Vocabulary

SQRT2 = math.sqrt(2.0)
RELERR_FLOOR = 0.001

# (column header, "core" or "subtask", key) in the published column order
TABLE_COLUMNS: tuple[tuple[str, str, str], ...] = (
    ("ST Grounding", "core", "st_grounding"),
    ("Ref.Int. Captioning", "core", "ref_interaction"),
    ("Velocity Est.", "core", "velocity"),
    ("ST Rel. Comp.", "core", "st_relation"),
    ("MC Counting", "subtask", "mc_counting"),
    ("MC Existence", "subtask", "mc_existence"),
    ("MC Class", "subtask", "mc_class"),
    ("CoT", "core", "cot"),
)


@dataclass(frozen=True)
class EndpointError:
    dt: float
    ds: float

    def __post_init__(self):
        if not (0.0 <= self.dt <= 1.0 and 0.0 <= self.ds <= 1.0):
            raise ValueError("normalized endpoint errors must lie in [0, 1]")

    @property
    def magnitude(self) -> float:
        return math.sqrt(self.dt * self.dt + self.ds * self.ds)


@dataclass(frozen=True)
class ScoreWeights:
    velocity_numeric: float = 0.5
    comparison_verdict: float = 0.5
    cot_conclusion: float = 0.7

    def __post_init__(self):
        for name in ("velocity_numeric", "comparison_verdict", "cot_conclusion"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"weight {name} must lie in [0, 1]")


def iou(b1, b2) -> float:
    return kernels.iou(b1, b2)


def _center(b) -> tuple[float, float]:
    return ((b[0] + b[2]) / 2, (b[1] + b[3]) / 2)


def spatial_error(b_pred, b_gold) -> float:
    """Center distance of two unit-space boxes over the unit-square diagonal."""
    (px, py), (gx, gy) = _center(b_pred), _center(b_gold)
    dx, dy = px - gx, py - gy
    return min(1.0, math.sqrt(dx * dx + dy * dy) / SQRT2)


def temporal_error(t_pred: float, t_gold: float) -> float:
    return abs(t_pred - t_gold)


def composite_st_error(e1: EndpointError, e2: EndpointError) -> float:
    return 0.5 * (e1.magnitude + e2.magnitude)


def _unit(box) -> tuple[float, ...]:
    return tuple(v / 1000 for v in box)


def _clip01(x: float) -> float:
    return min(1.0, max(0.0, x))


def _match(a, b) -> float:
    return 1.0 if a is not None and a == b else 0.0


# --- per-family scoring ----------------------------------------------------
# Each returns (score in [0, 100], detail dict).

def _score_temporal_window(gold: dict, p: ParsedAnswer):
    preds = list(p.get("items") or []) + list(p.extras.get("items_partial", []))
    used = set()
    per_item = []
    for g in gold["items"]:
        k = next((i for i, it in enumerate(preds) if i not in used and it.get("name") == g["name"]), None)
        if k is None:
            per_item.append(0.0)
            continue
        used.add(k)
        it = preds[k]
        if not all(f in it for f in ("start", "end", "start_bbox", "end_bbox")):
            per_item.append(0.0)
            continue
        e1 = EndpointError(_clip01(temporal_error(it["start"], g["start"])),
                           spatial_error(_unit(it["start_bbox"]), _unit(g["start_bbox"])))
        e2 = EndpointError(_clip01(temporal_error(it["end"], g["end"])),
                           spatial_error(_unit(it["end_bbox"]), _unit(g["end_bbox"])))
        per_item.append(max(0.0, 1.0 - composite_st_error(e1, e2)))
    value = 100.0 * math.fsum(per_item) / len(per_item) if per_item else 0.0
    return value, {"items": per_item}


def score_grounding(subtask: str, gold: dict, p: ParsedAnswer):
    if subtask == "temporal_window":
        return _score_temporal_window(gold, p)
    if subtask == "locate":
        box = p.get("bbox")
        v = iou(_unit(box), _unit(gold["bbox"])) if box else 0.0
        return 100.0 * v, {"iou": v}
    if subtask == "closest":
        v = _match(p.get("name"), gold["name"])
        return 100.0 * v, {"name": v}
    if subtask == "frame_segment":
        v = _match(p.get("horizontal"), gold["horizontal"]) * _match(p.get("vertical"), gold["vertical"])
        return 100.0 * v, {"segment": v}
    if subtask == "trajectory_extreme":
        t, box = p.get("t"), p.get("bbox")
        if t is None or box is None:
            return 0.0, {"error": None}
        dt = _clip01(temporal_error(t, gold["t"]))
        ds = spatial_error(_unit(box), _unit(gold["bbox"]))
        err = math.sqrt(dt * dt + ds * ds)
        return 100.0 * max(0.0, 1.0 - err), {"error": err}
    raise KeyError(f"{subtask} is not a grounding subtask")


def relative_error(pred: float, gold: float) -> float:
    return abs(pred - gold) / max(gold, RELERR_FLOOR)


def score_velocity(gold: dict, p: ParsedAnswer, weights: ScoreWeights = ScoreWeights()):
    parts = {}
    for key in ("min", "max", "mean"):
        pred = p.get(key)
        parts[key] = 0.0 if pred is None else max(0.0, 1.0 - relative_error(pred, gold[key]))
    numeric = math.fsum(parts.values()) / 3
    categorical = _match(p.get("descriptor"), gold["descriptor"])
    w = weights.velocity_numeric
    return 100.0 * (w * numeric + (1 - w) * categorical), {"numeric": numeric, "descriptor": categorical, **parts}


_INTERACTION_FIELDS = {
    "sequential_actions": ("verb", "target"),
    "action_status": ("verb",),
    "target_interaction": ("target",),
    "instrument_id": ("name",),
}


def score_interaction(subtask: str, gold: dict, p: ParsedAnswer):
    fields = _INTERACTION_FIELDS[subtask]
    hits = {f: _match(p.get(f), gold[f]) for f in fields}
    return 100.0 * math.fsum(hits.values()) / len(fields), hits


def score_relation(subtask: str, gold: dict, p: ParsedAnswer, weights: ScoreWeights = ScoreWeights()):
    if subtask == "relative_position":
        hits = {f: _match(p.get(f), gold[f]) for f in ("horizontal", "vertical")}
        return 100.0 * (hits["horizontal"] + hits["vertical"]) / 2, hits
    if subtask == "relative_change":
        v = _match(p.get("change"), gold["change"])
        return 100.0 * v, {"change": v}
    if subtask == "interaction_comparison":
        verdict = _match(p.get("verdict"), gold["verdict"])
        pairs = [_match(p.get(f"verb{i}"), gold[f"verb{i}"]) * _match(p.get(f"target{i}"), gold[f"target{i}"])
                 for i in (1, 2)]
        w = weights.comparison_verdict
        return 100.0 * (w * verdict + (1 - w) * (pairs[0] + pairs[1]) / 2), {"verdict": verdict, "pairs": pairs}
    raise KeyError(f"{subtask} is not a relation subtask")


def score_multichoice(gold_letter: str, p: ParsedAnswer):
    v = _match(p.get("letter"), gold_letter)
    return 100.0 * v, {"letter": v}


def score_cot(gold: dict, p: ParsedAnswer, weights: ScoreWeights = ScoreWeights()):
    concl = p.extras.get("conclusion") or {}
    hits = [_match(concl.get(f), gold[f]) for f in ("name", "verb", "target")]
    conclusion = math.fsum(hits) / 3
    ev = p.extras.get("evidence") or {}

    def has(key, value):
        return value in ev.get(key, ())

    stages = {
        "localization": has("horizontal", gold["horizontal"]) and has("vertical", gold["vertical"]),
        "kinematics": has("descriptor", gold["descriptor"]),
        "interaction": has("verb", gold["verb"]) and has("target", gold["target"]),
    }
    stage_frac = sum(stages.values()) / 3
    w = weights.cot_conclusion
    return 100.0 * (w * conclusion + (1 - w) * stage_frac), {"conclusion": conclusion, "stages": stages}


# --- sample level ------------------------------------------------------------

@dataclass
class SampleScore:
    sample_id: str
    core_task: str
    subtask: str
    primary_score: float
    detail: dict = field(default_factory=dict)
    parse_status: str = FAILED

    def to_record(self) -> dict:
        return {"sample_id": self.sample_id, "core_task": self.core_task, "subtask": self.subtask,
                "primary_score": self.primary_score, "parse_status": self.parse_status,
                "detail": _jsonable(self.detail)}

    @classmethod
    def from_record(cls, rec: dict) -> "SampleScore":
        score = float(rec["primary_score"])
        if not 0.0 <= score <= 100.0:
            raise ValueError(f"{rec.get('sample_id')}: score outside [0, 100]")
        return cls(rec["sample_id"], rec["core_task"], rec["subtask"], score,
                   rec.get("detail", {}), rec.get("parse_status", FAILED))


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set)):
        items = sorted(value) if isinstance(value, set) else value
        return [_jsonable(v) for v in items]
    return value


def score_parsed(subtask: str, gold: dict, p: ParsedAnswer, weights: ScoreWeights = ScoreWeights()):
    core = CORE_OF[subtask]
    if core == "st_grounding":
        return score_grounding(subtask, gold, p)
    if core == "ref_interaction":
        return score_interaction(subtask, gold, p)
    if core == "st_relation":
        return score_relation(subtask, gold, p, weights)
    if core == "velocity":
        return score_velocity(gold, p, weights)
    if core == "multichoice":
        return score_multichoice(gold["letter"], p)
    return score_cot(gold, p, weights)


def score_sample(sample, prediction: str | None, vocab: Vocabulary,
                 weights: ScoreWeights = ScoreWeights()) -> SampleScore:
    """Score one QASample against a free-text prediction; ``None`` means missing."""
    if prediction is None:
        return SampleScore(sample.sample_id, sample.core_task, sample.subtask, 0.0,
                           {"missing_prediction": True}, FAILED)
    p = parse_answer(prediction, sample.subtask, vocab)
    value, detail = score_parsed(sample.subtask, sample.gold, p, weights)
    if p.parse_status == FAILED:
        value = 0.0
    value = min(100.0, max(0.0, value))
    return SampleScore(sample.sample_id, sample.core_task, sample.subtask, value, detail, p.parse_status)


# --- aggregation -------------------------------------------------------------

@dataclass
class TaskReport:
    subtask_means: dict[str, float] = field(default_factory=dict)
    core_means: dict[str, float] = field(default_factory=dict)
    subtask_counts: dict[str, int] = field(default_factory=dict)
    core_counts: dict[str, int] = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not self.core_counts

    def column_values(self) -> list[float | None]:
        out = []
        for _, kind, key in TABLE_COLUMNS:
            src = self.core_means if kind == "core" else self.subtask_means
            out.append(src.get(key))
        return out

    def to_dict(self) -> dict:
        return {
            "subtasks": {k: {"mean": self.subtask_means[k], "n": self.subtask_counts[k]}
                         for k in sorted(self.subtask_means)},
            "core_tasks": {k: {"mean": self.core_means[k], "n": self.core_counts[k]}
                           for k in sorted(self.core_means)},
            "table": dict(zip([c[0] for c in TABLE_COLUMNS], self.column_values())),
            "note": "scores use toolchain-defined error-to-score mappings",
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TaskReport":
        return cls(
            {k: v["mean"] for k, v in data.get("subtasks", {}).items()},
            {k: v["mean"] for k, v in data.get("core_tasks", {}).items()},
            {k: v["n"] for k, v in data.get("subtasks", {}).items()},
            {k: v["n"] for k, v in data.get("core_tasks", {}).items()},
        )

    def to_table(self, label: str = "model", sep: str = "\t") -> str:
        header = sep.join(["Model", *(c[0] for c in TABLE_COLUMNS)])
        cells = ["-" if v is None else f"{v:.2f}" for v in self.column_values()]
        return header + "\n" + sep.join([label, *cells]) + "\n"


def aggregate_report(scores: Iterable[SampleScore]) -> TaskReport:
    """Micro-averaged report; sums run in sample_id order so results are bit-stable."""
    ordered = sorted(scores, key=lambda s: s.sample_id)
    by_sub: dict[str, list[float]] = {}
    by_core: dict[str, list[float]] = {}
    for s in ordered:
        by_sub.setdefault(s.subtask, []).append(s.primary_score)
        by_core.setdefault(s.core_task, []).append(s.primary_score)
    report = TaskReport()
    for sub in sorted(by_sub):
        report.subtask_means[sub] = math.fsum(by_sub[sub]) / len(by_sub[sub])
        report.subtask_counts[sub] = len(by_sub[sub])
    for core in CORE_TASKS:
        if core in by_core:
            report.core_means[core] = math.fsum(by_core[core]) / len(by_core[core])
            report.core_counts[core] = len(by_core[core])
    return report


def evaluate(samples: Sequence, predictions: dict[str, str], vocab: Vocabulary,
             weights: ScoreWeights = ScoreWeights()) -> tuple[list[SampleScore], TaskReport]:
    scores = [score_sample(s, predictions.get(s.sample_id), vocab, weights)
              for s in sorted(samples, key=lambda s: s.sample_id)]
    return scores, aggregate_report(scores)


__all__ = [
    "EndpointError", "ScoreWeights", "SampleScore", "TaskReport", "TABLE_COLUMNS", "SUBTASKS",
    "iou", "spatial_error", "temporal_error", "composite_st_error", "relative_error",
    "score_grounding", "score_velocity", "score_interaction", "score_relation",
    "score_multichoice", "score_cot", "score_parsed", "score_sample", "aggregate_report", "evaluate",
]
