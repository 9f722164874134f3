"""Task template registry and gold-to-text rendering."""
from __future__ import annotations

import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .vocab import display

CORE_TASKS = ("st_grounding", "ref_interaction", "st_relation", "velocity", "multichoice", "cot")

SUBTASKS = {
    "st_grounding": ("temporal_window", "locate", "closest", "frame_segment", "trajectory_extreme"),
    "ref_interaction": ("sequential_actions", "action_status", "target_interaction", "instrument_id"),
    "st_relation": ("relative_position", "relative_change", "interaction_comparison"),
    "velocity": ("velocity",),
    "multichoice": ("mc_existence", "mc_class", "mc_counting"),
    "cot": ("cot",),
}
CORE_OF = {sub: core for core, subs in SUBTASKS.items() for sub in subs}
ALL_SUBTASKS = tuple(CORE_OF)


class TemplateError(ValueError):
    pass


@dataclass(frozen=True)
class Schema:
    query: dict[str, str]
    answer: dict[str, str]
    item: dict[str, str] = field(default_factory=dict)


_T, _L, _B, _S, _X = "time", "label", "box", "speed", "term"

SCHEMAS: dict[str, Schema] = {
    "temporal_window": Schema({"t": _T}, {"items": "items"},
                              {"name": _L, "start": _T, "end": _T, "start_bbox": _B, "end_bbox": _B}),
    "locate": Schema({"name": _L, "t": _T}, {"name": _L, "bbox": _B}),
    "closest": Schema({"point": _B, "t": _T}, {"name": _L}),
    "frame_segment": Schema({"name": _L, "t": _T}, {"name": _L, "horizontal": _X, "vertical": _X}),
    "trajectory_extreme": Schema({"name": _L, "t1": _T, "t2": _T, "direction": _X},
                                 {"name": _L, "direction": _X, "t": _T, "bbox": _B}),
    "sequential_actions": Schema({"name": _L, "verb0": _L, "target0": _L, "t1": _T, "t2": _T},
                                 {"name": _L, "verb": _L, "target": _L}),
    "action_status": Schema({"name": _L, "t1": _T, "t2": _T}, {"name": _L, "verb": _L}),
    "target_interaction": Schema({"name": _L, "t1": _T, "t2": _T}, {"name": _L, "target": _L}),
    "instrument_id": Schema({"bbox": _B, "t": _T}, {"name": _L}),
    "relative_position": Schema({"name1": _L, "name2": _L, "t": _T},
                                {"name1": _L, "horizontal": _X, "vertical": _X, "name2": _L}),
    "relative_change": Schema({"name1": _L, "name2": _L, "t1": _T, "t2": _T},
                              {"name1": _L, "name2": _L, "change": _X}),
    "interaction_comparison": Schema({"name1": _L, "name2": _L, "t1": _T, "t2": _T},
                                     {"verdict": _X, "name1": _L, "verb1": _L, "target1": _L,
                                      "name2": _L, "verb2": _L, "target2": _L}),
    "velocity": Schema({"name": _L, "t1": _T, "t2": _T},
                       {"name": _L, "min": _S, "max": _S, "mean": _S, "descriptor": _X}),
    "mc_existence": Schema({"name": _L, "t": _T, "options": "options"}, {"letter": "letter"}),
    "mc_class": Schema({"t": _T, "options": "options"}, {"letter": "letter"}),
    "mc_counting": Schema({"name": _L, "t": _T, "options": "options"}, {"letter": "letter"}),
    "cot": Schema({"name": _L, "t1": _T, "t2": _T},
                  {"name": _L, "horizontal": _X, "vertical": _X, "bbox": _B,
                   "descriptor": _X, "mean": _S, "verb": _L, "target": _L}),
}

LETTERS = "ABCD"


def format_box(box) -> str:
    return "<" + ", ".join(str(int(v)) for v in box) + ">"


def format_options(options) -> str:
    return " ".join(f"({LETTERS[i]}) {text}" for i, text in enumerate(options))


def format_value(kind: str, value) -> str:
    if kind == _T:
        return f"{value:.2f}"
    if kind == _S:
        return f"{value:.3f}"
    if kind == _B:
        return format_box(value)
    if kind == _L:
        return display(value)
    if kind == "options":
        return format_options(value)
    return str(value)


def placeholders(pattern: str) -> set[str]:
    return {name for _, name, _, _ in string.Formatter().parse(pattern) if name}


@dataclass(frozen=True)
class TaskTemplate:
    template_id: str
    core_task: str
    subtask: str
    question: str
    answer: str
    schema: str
    answer_item: str = ""
    answer_join: str = "; "
    requires: tuple[str, ...] = ()
    reconstructed: bool = False

    def __post_init__(self):
        if self.subtask not in CORE_OF:
            raise TemplateError(f"{self.template_id}: unknown subtask {self.subtask!r}")
        if CORE_OF[self.subtask] != self.core_task:
            raise TemplateError(f"{self.template_id}: subtask {self.subtask} is not in {self.core_task}")
        schema = SCHEMAS.get(self.schema)
        if schema is None:
            raise TemplateError(f"{self.template_id}: unknown gold schema {self.schema!r}")
        if placeholders(self.question) != set(schema.query):
            raise TemplateError(f"{self.template_id}: question placeholders {sorted(placeholders(self.question))} "
                                f"do not match schema query fields {sorted(schema.query)}")
        if placeholders(self.answer) != set(schema.answer):
            raise TemplateError(f"{self.template_id}: answer placeholders {sorted(placeholders(self.answer))} "
                                f"do not match schema answer fields {sorted(schema.answer)}")
        if placeholders(self.answer_item) != set(schema.item):
            raise TemplateError(f"{self.template_id}: item placeholders do not match schema item fields")

    @property
    def gold_schema(self) -> Schema:
        return SCHEMAS[self.schema]

    def render_question(self, query: dict) -> str:
        kinds = self.gold_schema.query
        return self.question.format(**{k: format_value(kinds[k], query[k]) for k in kinds})

    def render_answer(self, gold: dict) -> str:
        schema = self.gold_schema
        values = {}
        for k, kind in schema.answer.items():
            if kind == "items":
                values[k] = self.answer_join.join(
                    self.answer_item.format(**{f: format_value(fk, item[f]) for f, fk in schema.item.items()})
                    for item in gold[k])
            else:
                values[k] = format_value(kind, gold[k])
        return self.answer.format(**values)


def load_registry(path: str | Path | None = None) -> list[TaskTemplate]:
    if path is None:
        text = resources.files("stqa.data").joinpath("templates.yaml").read_text()
    else:
        text = Path(path).read_text()
    data = yaml.safe_load(text) or {}
    templates = []
    seen = set()
    for raw in data.get("templates", []):
        raw = dict(raw)
        raw["requires"] = tuple(raw.get("requires") or ())
        tpl = TaskTemplate(**raw)
        if tpl.template_id in seen:
            raise TemplateError(f"duplicate template id {tpl.template_id!r}")
        seen.add(tpl.template_id)
        templates.append(tpl)
    return sorted(templates, key=lambda t: t.template_id)
