from __future__ import annotations

import sys
from functools import lru_cache
from pathlib import Path

import pytest

from stqa.events import segment_clips
from stqa.qagen import GenConfig, generate_dataset, prepare_clip
from stqa.synth import load_fixture_scripts, random_script, render_scene
from stqa.templates import load_registry
from stqa.vocab import Vocabulary

FIXTURES = Path(__file__).parent / "fixtures"
SCENES = FIXTURES / "scenes"


@lru_cache(maxsize=None)
def _vocab() -> Vocabulary:
    return Vocabulary.load()


@lru_cache(maxsize=None)
def _registry():
    return tuple(load_registry())


@pytest.fixture(scope="session")
def vocab() -> Vocabulary:
    return _vocab()


@pytest.fixture(scope="session")
def registry():
    return list(_registry())


@pytest.fixture(scope="session")
def scene_scripts():
    return load_fixture_scripts(SCENES)


def corpus_clips(n_scripts: int, duration: float = 60.0, first_seed: int = 100, cfg: GenConfig = GenConfig()):
    """Clips from ``n_scripts`` random scenes with distinct video ids."""
    clips = []
    for k in range(n_scripts):
        script = random_script(first_seed + k, duration=duration, vocab=_vocab(), video_id=f"vid{k:03d}")
        tuples, _ = render_scene(script, cfg.gate)
        for m in segment_clips(script.duration, video_id=script.video_id, fps=script.fps):
            clips.append(prepare_clip(m, tuples, cfg.gate))
    return clips


@lru_cache(maxsize=None)
def synth_corpus(n_scripts: int = 10, seed: int = 2024):
    clips = corpus_clips(n_scripts)
    samples, notes = generate_dataset(clips, list(_registry()), seed, _vocab())
    return clips, samples, notes


@pytest.fixture(scope="session")
def corpus():
    return synth_corpus()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
