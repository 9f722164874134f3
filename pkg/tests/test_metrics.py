from __future__ import annotations

import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES
from stqa.metrics import (
    TABLE_COLUMNS,
    EndpointError,
    SampleScore,
    ScoreWeights,
    aggregate_report,
    composite_st_error,
    evaluate,
    iou,
    score_sample,
    spatial_error,
    temporal_error,
)
from stqa.qagen import QASample, load_dataset

HAND = FIXTURES / "hand"


def test_iou_examples():
    assert iou((0.1, 0.1, 0.4, 0.5), (0.1, 0.1, 0.4, 0.5)) == 1.0
    assert iou((0, 0, 0.1, 0.1), (0.2, 0.2, 0.3, 0.3)) == 0.0
    assert iou((0, 0, 200, 200), (100, 0, 300, 200)) == pytest.approx(1 / 3, abs=1e-15)


def unit_box():
    # boxes on the [0, 1000] rendering grid
    u = st.integers(0, 900)
    return st.tuples(u, u, st.integers(1, 100), st.integers(1, 100)).map(
        lambda v: (v[0] / 1000, v[1] / 1000, (v[0] + v[2]) / 1000, (v[1] + v[3]) / 1000))


@settings(max_examples=300)
@given(unit_box(), unit_box())
def test_iou_symmetric_identity(a, b):
    assert iou(a, b) == iou(b, a)
    assert iou(a, a) == 1.0
    if a != b:
        assert iou(a, b) < 1.0


@settings(max_examples=200)
@given(unit_box(), st.lists(st.floats(0, 0.5), min_size=2, max_size=6))
def test_iou_monotone_under_translation(a, shifts):
    vals = [iou(a, (a[0] + s, a[1], a[2] + s, a[3])) for s in sorted(shifts)]
    assert all(x >= y - 1e-12 for x, y in zip(vals, vals[1:]))


def test_spatial_and_temporal_examples():
    assert spatial_error((0.1, 0.1, 0.3, 0.3), (0.1, 0.1, 0.3, 0.3)) == 0.0
    assert spatial_error((0, 0, 0, 0), (1, 1, 1, 1)) == 1.0
    assert spatial_error((0.1, 0.1, 0.1, 0.1), (0.4, 0.5, 0.4, 0.5)) == pytest.approx(0.5 / math.sqrt(2))
    assert temporal_error(0.5, 0.5) == 0 and temporal_error(0.0, 1.0) == 1.0
    assert temporal_error(0.28, 0.30) == pytest.approx(0.02)


def test_composite_examples():
    zero = EndpointError(0.0, 0.0)
    assert composite_st_error(zero, zero) == 0.0
    assert composite_st_error(EndpointError(0.3, 0.4), zero) == pytest.approx(0.25, abs=1e-12)
    assert composite_st_error(EndpointError(0.6, 0.8), EndpointError(0.6, 0.8)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        EndpointError(-0.1, 0.0)


errs = st.builds(EndpointError, st.floats(0, 1), st.floats(0, 1))


@settings(max_examples=300)
@given(errs, errs)
def test_composite_symmetric_and_bounded(e1, e2):
    v = composite_st_error(e1, e2)
    assert v == composite_st_error(e2, e1)
    assert 0.0 <= v <= math.sqrt(2) + 1e-12


def _sample(subtask, gold, core):
    return QASample("s1", "c", core, subtask, "q", "a", gold, {})


def test_velocity_weighting(vocab):
    gold = {"name": "hook", "min": 0.1, "max": 0.3, "mean": 0.2, "descriptor": "moving actively"}
    s = _sample("velocity", gold, "velocity")
    exact = "min speed 0.100, max speed 0.300, mean speed 0.200, moving actively"
    assert score_sample(s, exact, vocab).primary_score == pytest.approx(100)
    assert score_sample(s, exact.replace("actively", "slowly"), vocab).primary_score == pytest.approx(50)
    half = "min 0.15, max 0.45, mean 0.3, moving actively"
    assert score_sample(s, half, vocab).primary_score == pytest.approx(75)


def test_velocity_floor_for_stationary_gold(vocab):
    gold = {"name": "hook", "min": 0.0, "max": 0.0, "mean": 0.0, "descriptor": "stationary"}
    s = _sample("velocity", gold, "velocity")
    r = score_sample(s, "min 0.0005, max 0.0005, mean 0.0005, stationary", vocab)
    assert r.primary_score == pytest.approx(75)


def test_interaction_mean_and_synonyms(vocab):
    s = _sample("sequential_actions", {"name": "hook", "verb": "clip", "target": "cystic_duct"}, "ref_interaction")
    assert score_sample(s, "Next the hook is clipping the cystic duct", vocab).primary_score == 100
    assert score_sample(s, "Next the hook is clipping the liver", vocab).primary_score == 50


def test_relation_components(vocab):
    pos = _sample("relative_position", {"name1": "hook", "horizontal": "right", "vertical": "below",
                                         "name2": "grasper"}, "st_relation")
    assert score_sample(pos, "hook right of and below grasper", vocab).primary_score == 100
    assert score_sample(pos, "hook left of and below grasper", vocab).primary_score == 50
    chg = _sample("relative_change", {"name1": "hook", "name2": "grasper", "change": "closer"}, "st_relation")
    assert score_sample(chg, "the hook and grasper move nearer", vocab).primary_score == 100
    cmp_ = _sample("interaction_comparison", {"verdict": "different", "name1": "hook", "verb1": "dissect",
                                              "target1": "liver", "name2": "grasper", "verb2": "grasp",
                                              "target2": "gallbladder"}, "st_relation")
    text = "different: the hook performs cut on the omentum, the grasper performs pack on the gut"
    assert score_sample(cmp_, text, vocab).primary_score == 50


def test_multichoice(vocab):
    s = _sample("mc_class", {"letter": "C"}, "multichoice")
    assert score_sample(s, "(C)", vocab).primary_score == 100
    assert score_sample(s, "(A)", vocab).primary_score == 0
    assert score_sample(s, "no idea", vocab).primary_score == 0


def test_cot_weights(vocab):
    gold = {"name": "hook", "horizontal": "left", "vertical": "top", "bbox": [0, 0, 100, 100],
            "descriptor": "stationary", "mean": 0.0, "verb": "dissect", "target": "liver"}
    s = _sample("cot", gold, "cot")
    assert score_sample(s, "Conclusion: the hook performs dissect on the liver.", vocab).primary_score \
        == pytest.approx(70)
    full = ("The hook sits in the left top segment, it is stationary and dissects the liver. "
            "Conclusion: the hook performs dissect on the liver.")
    assert score_sample(s, full, vocab).primary_score == pytest.approx(100)
    assert score_sample(s, "", vocab).primary_score == 0


def test_grounding_examples(vocab):
    loc = _sample("locate", {"name": "hook", "bbox": [0, 0, 200, 200]}, "st_grounding")
    assert score_sample(loc, "<100, 0, 300, 200>", vocab).primary_score == pytest.approx(100 / 3)
    assert score_sample(loc, "<0, 0, 1200, 200>", vocab).primary_score == 0
    assert score_sample(loc, "", vocab).primary_score == 0
    tw = _sample("temporal_window", {"items": [{"name": "hook", "start": 0.1, "end": 0.9,
                                                "start_bbox": [0, 0, 100, 100],
                                                "end_bbox": [500, 500, 600, 600]}]}, "st_grounding")
    text = "hook: Window [0.40 - 0.90], Start BBox <400, 400, 500, 500>, End BBox <500, 500, 600, 600>"
    assert score_sample(tw, text, vocab).primary_score == pytest.approx(75)
    ext = _sample("trajectory_extreme", {"name": "hook", "direction": "left", "t": 0.5,
                                         "bbox": [0, 0, 100, 100]}, "st_grounding")
    assert score_sample(ext, "leftmost at 0.80 with <0, 0, 100, 100>", vocab).primary_score == pytest.approx(70)


def test_missing_prediction_scores_zero(vocab):
    s = _sample("locate", {"name": "hook", "bbox": [0, 0, 10, 10]}, "st_grounding")
    r = score_sample(s, None, vocab)
    assert r.primary_score == 0 and r.detail["missing_prediction"]


@settings(max_examples=150, deadline=None)
@given(st.text(max_size=200))
def test_scores_bounded_for_any_text(vocab, text):
    gold = {"name": "hook", "min": 0.1, "max": 0.3, "mean": 0.2, "descriptor": "moving actively"}
    r = score_sample(_sample("velocity", gold, "velocity"), text, vocab)
    assert 0 <= r.primary_score <= 100


def test_aggregate_is_micro_average():
    scores = [SampleScore("a", "st_grounding", "locate", 40.0), SampleScore("b", "st_grounding", "closest", 60.0),
              SampleScore("c", "st_grounding", "closest", 80.0)]
    rep = aggregate_report(scores)
    assert rep.core_means["st_grounding"] == pytest.approx(60)
    assert rep.subtask_means == {"closest": 70.0, "locate": 40.0}
    assert aggregate_report(scores[:1]).core_means["st_grounding"] == 40
    assert aggregate_report([]).empty
    assert aggregate_report(reversed(scores)).to_dict() == rep.to_dict()


def test_table_column_order():
    assert [c[0] for c in TABLE_COLUMNS] == ["ST Grounding", "Ref.Int. Captioning", "Velocity Est.",
                                            "ST Rel. Comp.", "MC Counting", "MC Existence", "MC Class", "CoT"]


def test_custom_weights(vocab):
    gold = {"name": "hook", "min": 0.1, "max": 0.3, "mean": 0.2, "descriptor": "moving actively"}
    s = _sample("velocity", gold, "velocity")
    r = score_sample(s, "min 0.1 max 0.3 mean 0.2 slowly", vocab, ScoreWeights(velocity_numeric=0.8))
    assert r.primary_score == pytest.approx(80)


def hand_report(vocab):
    samples = load_dataset(HAND / "dataset.jsonl")
    preds = {r["sample_id"]: r["output"] for r in map(json.loads, (HAND / "predictions.jsonl").read_text().splitlines())}
    return evaluate(samples, preds, vocab)


def test_hand_fixture_report(vocab):
    # h1 IoU 2e4 / 6e4; h2 E_ST = (0.5 + 0) / 2; h3 relErr 0.5 everywhere with the
    # right descriptor; h4 wrong letter; h5 one axis of two
    expected = json.loads((HAND / "expected_report.json").read_text())
    scores, report = hand_report(vocab)
    for s in scores:
        assert s.primary_score == pytest.approx(expected["samples"][s.sample_id], abs=0.01)
    for core, value in expected["core_tasks"].items():
        assert report.core_means[core] == pytest.approx(value, abs=0.01)
    assert report.to_table("hand").splitlines()[1] == expected["table_row"]


def test_gold_self_consistency(corpus, vocab):
    _, samples, _ = corpus
    scores, report = evaluate(samples, {s.sample_id: s.answer for s in samples}, vocab)
    assert all(s.primary_score == pytest.approx(100, abs=1e-9) for s in scores)
    assert all(f"{v:.2f}" == "100.00" for v in report.column_values())
