from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stqa.parsing import (
    FAILED,
    OK,
    PARTIAL,
    ParseFailure,
    canonicalize_entity,
    parse_answer,
    parse_bboxes,
    parse_descriptor,
    parse_mc_choice,
    parse_relation_terms,
    parse_speeds,
    parse_timestamps,
    parse_windows,
)

FILLER = ("the procedure continues as planned and the team reviews each view carefully while noting "
          "overall progress of this case during routine observation with calm steady attention").split()


def filler(rng: random.Random, n: int) -> str:
    return " ".join(rng.choice(FILLER) for _ in range(n))


@pytest.mark.parametrize("text,letter", [("The answer is (B).", "B"), ("b", "B"), ("(c) because", "C"),
                                         ("I pick D", "D"), ("Answer: a", "A"),
                                         ("(B) ... on reflection (A)", "B")])
def test_mc_choice(text, letter):
    assert parse_mc_choice(text) == letter


def test_mc_choice_failure():
    with pytest.raises(ParseFailure) as exc:
        parse_mc_choice("the grasper is used")
    assert exc.value.missing == ["letter"]


def test_bboxes():
    assert parse_bboxes("<100, 200, 300, 400>") == [(100, 200, 300, 400)]
    assert parse_bboxes("[0,0,1000,1000] then <10,10,20,20>") == [(0, 0, 1000, 1000), (10, 10, 20, 20)]
    assert parse_bboxes("<1200, 0, 50, 50>") == []
    assert parse_bboxes("<300, 0, 200, 50>") == []
    with pytest.raises(ParseFailure):
        parse_bboxes("<1200, 0, 50, 50>", required=True)


@settings(max_examples=300)
@given(st.lists(st.tuples(*[st.integers(-50, 1100)] * 4), max_size=5), st.sampled_from(["<{}>", "[{}]"]))
def test_bboxes_never_violate_invariants(groups, wrap):
    text = " and ".join(wrap.format(", ".join(map(str, g))) for g in groups)
    for x1, y1, x2, y2 in parse_bboxes(text):
        assert 0 <= x1 < x2 <= 1000 and 0 <= y1 < y2 <= 1000
    valid = [g for g in groups if all(0 <= v <= 1000 for v in g) and g[0] < g[2] and g[1] < g[3]]
    assert parse_bboxes(text) == valid


def test_timestamps():
    assert parse_windows("Window [0.10 - 0.90]") == [(0.1, 0.9)]
    assert parse_timestamps("at 0.28 of the video") == [0.28]
    assert parse_timestamps("1.5") == []
    assert parse_timestamps("box <100, 200, 300, 400> at 0.5.") == [0.5]
    with pytest.raises(ParseFailure):
        parse_timestamps("never", required=True)


def test_speeds():
    assert parse_speeds("min 0.100, max 0.300, mean 0.200") == {"min": 0.1, "max": 0.3, "mean": 0.2}
    assert parse_speeds("average speed 0.2") == {"mean": 0.2}
    assert parse_speeds("maximum of 0.5 and lowest 0.1.") == {"max": 0.5, "min": 0.1}
    with pytest.raises(ParseFailure):
        parse_speeds("fast")


def test_speed_partial_status(vocab):
    p = parse_answer("The hook has average speed 0.2 and is moving slowly.", "velocity", vocab)
    assert p.parse_status == PARTIAL
    assert set(p.missing) == {"min", "max"}


def test_canonicalize_entity(vocab):
    assert canonicalize_entity("clipping", vocab) == "clip"
    assert canonicalize_entity("Grasper", vocab) == "grasper"
    assert canonicalize_entity("the Gall  Bladder", vocab, "target") == "gallbladder"
    with pytest.raises(ParseFailure):
        canonicalize_entity("laser sword", vocab)


@settings(max_examples=100)
@given(st.data())
def test_canonicalize_is_idempotent(vocab, data):
    surface = data.draw(st.sampled_from(sorted(vocab.surface_map)))
    once = canonicalize_entity(surface, vocab)
    assert canonicalize_entity(once, vocab) == once


def test_relation_terms():
    assert parse_relation_terms("to the right and below") == {"horizontal": "right", "vertical": "below"}
    assert parse_relation_terms("they move nearer")["change"] == "closer"
    assert parse_relation_terms("drifting farther")["change"] == "further"
    with pytest.raises(ParseFailure):
        parse_relation_terms("adjacent")


def test_descriptor_synonyms():
    assert parse_descriptor("it is basically motionless") == "stationary"
    assert parse_descriptor("the hook moves slowly") == "moving slowly"
    assert parse_descriptor("quite fast") == "moving actively"
    assert parse_descriptor("no idea") is None


def test_empty_prediction_fails(vocab):
    p = parse_answer("", "locate", vocab)
    assert p.parse_status == FAILED and p.fields == {}


def _expected(sample):
    return {k: v for k, v in sample.gold.items() if k not in ("query", "stages")}


def test_gold_answers_parse_to_gold(corpus, vocab):
    _, samples, _ = corpus
    for s in samples:
        p = parse_answer(s.answer, s.subtask, vocab)
        assert p.parse_status == OK, (s.sample_id, p.missing)
        assert p.fields == _expected(s), s.sample_id


def test_gold_answers_survive_filler(corpus, vocab):
    _, samples, _ = corpus
    rng = random.Random(7)
    for s in samples[::3]:
        text = f"{filler(rng, 100)}. {s.answer} {filler(rng, 100)}."
        p = parse_answer(text, s.subtask, vocab)
        assert p.parse_status == OK and p.fields == _expected(s), s.sample_id


def test_unknown_schema(vocab):
    with pytest.raises(KeyError):
        parse_answer("x", "nope", vocab)
