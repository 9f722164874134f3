from __future__ import annotations

import copy

import pytest

from conftest import SCENES
from stqa.qagen import GenConfig
from stqa.synth import SceneScript, ScriptError, oracle_check, random_script, render_scene, run_scene
from stqa.templates import ALL_SUBTASKS


def load(name):
    return SceneScript.load(SCENES / f"{name}.yaml")


def test_static_grasper_renders_identical_tuples():
    tuples, truth = render_scene(load("static_grasper"))
    assert len(tuples) == 30
    assert len({(e.instrument, e.bbox) for e in tuples}) == 1
    inst = truth.script.instruments[0]
    assert truth.speeds(inst, truth.script.frames) == [0.0] * 29


def test_linear_motion_speed():
    script = load("linear_diagonal")
    _, truth = render_scene(script)
    hook = script.instruments[0]
    assert truth.speeds(hook, [float(t) for t in range(10)]) == pytest.approx([0.1] * 9, abs=1e-12)


def test_closest_flips_at_crossover():
    script = load("crossing")
    _, truth = render_scene(script)
    point = (0.25, 0.525)

    def nearest(t):
        return min(truth.present(t), key=lambda i: (i.centroid(t)[0] - point[0]) ** 2
                   + (i.centroid(t)[1] - point[1]) ** 2).name

    # distances to the point are equal when 0.02 t - 0.05 = 0.55 - 0.02 t, i.e. t = 15
    assert [nearest(t) for t in (0, 14)] == ["grasper", "grasper"]
    assert [nearest(t) for t in (16, 29)] == ["hook", "hook"]


def test_fixture_scenes_pass_oracle(scene_scripts, registry, vocab):
    assert len(scene_scripts) >= 20
    for script in scene_scripts:
        script.check_vocab(vocab)
        report = oracle_check(run_scene(script, registry, vocab, seed=11))
        assert report.ok, (script.video_id, report.discrepancies[:3])
        assert report.checked > 0


@pytest.mark.parametrize("field,bump", [("bbox", 1), ("mean", 0.001), ("letter", None), ("name", None)])
def test_oracle_catches_tampered_gold(registry, vocab, field, bump):
    run = run_scene(load("linear_diagonal"), registry, vocab, seed=4)
    victim = next(s for s in run.samples if field in s.gold and s.subtask != "temporal_window")
    tampered = copy.deepcopy(victim)
    if field == "bbox":
        tampered.gold["bbox"][2] += bump
    elif field == "mean":
        tampered.gold["mean"] += bump
    elif field == "letter":
        tampered.gold["letter"] = "B" if victim.gold["letter"] == "A" else "A"
    else:
        tampered.gold["name"] = "scissors"
    run.samples[run.samples.index(victim)] = tampered
    report = oracle_check(run)
    assert len(report.discrepancies) == 1 and victim.sample_id in report.discrepancies[0]


def test_jump_reported_as_filtered(registry, vocab):
    cfg = GenConfig(gate=2.0)
    report = oracle_check(run_scene(load("jump"), registry, vocab, cfg=cfg), cfg)
    assert report.ok
    assert len(report.filtered) == 1 and "1.2700" in report.filtered[0]


def test_random_scripts_make_every_subtask_feasible(registry, vocab):
    for seed in range(5):
        run = run_scene(random_script(seed), registry, vocab, seed=seed)
        assert {s.subtask for s in run.samples} == set(ALL_SUBTASKS), seed


def test_yaml_round_trip(tmp_path):
    script = random_script(3)
    path = tmp_path / "s.yaml"
    script.dump(path)
    assert SceneScript.load(path) == script


@pytest.mark.parametrize("mutate,msg", [
    (lambda d: d["instruments"][0]["segments"].append(
        {"t0": 5, "t1": 8, "start": [0.5, 0.5], "end": [0.5, 0.5]}), "overlapping"),
    (lambda d: d["instruments"][0]["segments"][0].update(start=[0.99, 0.5]), "unit square"),
    (lambda d: d["instruments"][0]["segments"][0].update(t1=0), "t0 >= t1"),
    (lambda d: d.update(fps=0), "positive"),
    (lambda d: d["instruments"][0].pop("segments"), "malformed"),
])
def test_invalid_scripts(mutate, msg):
    data = load("static_grasper").to_mapping()
    mutate(data)
    with pytest.raises(ScriptError, match=msg):
        SceneScript.from_mapping(data)


def test_unknown_labels_rejected(vocab):
    data = load("static_grasper").to_mapping()
    data["instruments"][0]["name"] = "laser_sword"
    with pytest.raises(ScriptError, match="unknown instrument"):
        SceneScript.from_mapping(data).check_vocab(vocab)


def test_oracle_refuses_unresolvable_frame_rate(registry, vocab):
    data = load("static_grasper").to_mapping()
    data["fps"] = 10
    run = run_scene(SceneScript.from_mapping(data), registry, vocab, cfg=GenConfig(default_quota=1))
    with pytest.raises(ValueError, match="frame rate"):
        oracle_check(run)
