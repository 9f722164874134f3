from __future__ import annotations

import pytest

from stqa.templates import ALL_SUBTASKS, SCHEMAS, SUBTASKS, TaskTemplate, TemplateError, format_box, load_registry


def test_registry_covers_every_subtask(registry):
    assert sorted(t.subtask for t in registry) == sorted(ALL_SUBTASKS)
    assert [t.template_id for t in registry] == sorted(t.template_id for t in registry)
    assert {t.subtask for t in registry if t.reconstructed} == {"mc_counting", "cot"}


def test_core_task_partition():
    assert len(ALL_SUBTASKS) == 17
    assert sum(len(v) for v in SUBTASKS.values()) == 17
    assert set(SCHEMAS) == set(ALL_SUBTASKS)


def test_placeholder_mismatch_is_rejected():
    with pytest.raises(TemplateError, match="placeholders"):
        TaskTemplate("x", "st_grounding", "locate", "Where is the {name}?", "At {bbox}.", "locate")
    with pytest.raises(TemplateError, match="not in"):
        TaskTemplate("x", "velocity", "locate", "{name} {t}", "{name} {bbox}", "locate")


def test_rendering(registry):
    tpl = next(t for t in registry if t.subtask == "locate")
    assert tpl.render_answer({"name": "needle_driver", "bbox": [1, 2, 3, 4]}) == \
        "The needle driver is located at <1, 2, 3, 4>."
    assert format_box((0, 0, 1000, 1000)) == "<0, 0, 1000, 1000>"


def test_duplicate_ids_rejected(tmp_path):
    text = ("templates:\n" + "".join(
                "  - {template_id: a, core_task: velocity, subtask: velocity, schema: velocity,\n"
                "     question: 'How fast is the {name} between {t1} and {t2}?',\n"
                "     answer: '{name} {min} {max} {mean} {descriptor}'}\n" for _ in range(2)))
    path = tmp_path / "t.yaml"
    path.write_text(text)
    with pytest.raises(TemplateError, match="duplicate"):
        load_registry(path)
