"""Template-driven QA synthesis over continuity-filtered tracks and semantic blocks."""
from __future__ import annotations

import hashlib
import json
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations, permutations
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import kernels
from .events import TIME_TOL, ClipManifest, EventTuple, clip_tuples, normalize_time, quantize_bbox
from .templates import LETTERS, TaskTemplate
from .tracks import (
    DEFAULT_DELTA,
    DEFAULT_GATE,
    DIRECTIONS,
    InstrumentTrack,
    MotionThresholds,
    QueryWindow,
    SemanticBlock,
    build_tracks,
    compute_kinematics,
    is_continuous,
    track_blocks,
    trajectory_extreme,
)
from .vocab import Vocabulary, display

DEFAULT_QUOTA = 20


@dataclass(frozen=True)
class GenConfig:
    delta: float = DEFAULT_DELTA
    gate: float = DEFAULT_GATE
    thresholds: MotionThresholds = MotionThresholds()
    closest_gap: float = 0.05
    axis_gap: float = 0.02
    change_band: float = 0.02
    segment_margin: float = 0.01
    seq_max_gap_s: float = 1.0
    min_velocity_samples: int = 3
    default_quota: int = DEFAULT_QUOTA
    quotas: dict = field(default_factory=dict)

    def quota(self, subtask: str) -> int:
        return int(self.quotas.get(subtask, self.default_quota))


@dataclass
class QASample:
    sample_id: str
    clip_id: str
    core_task: str
    subtask: str
    question: str
    answer: str
    gold: dict
    provenance: dict
    options: list[str] | None = None

    def to_record(self) -> dict:
        rec = {
            "sample_id": self.sample_id,
            "clip_id": self.clip_id,
            "core_task": self.core_task,
            "subtask": self.subtask,
            "question": self.question,
            "answer": self.answer,
            "gold": self.gold,
            "provenance": self.provenance,
        }
        if self.options is not None:
            rec["options"] = self.options
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "QASample":
        return cls(rec["sample_id"], rec["clip_id"], rec["core_task"], rec["subtask"], rec["question"],
                   rec["answer"], _untuple(rec["gold"]), rec["provenance"], rec.get("options"))

    @property
    def source_video_id(self) -> str:
        return self.provenance.get("source_video_id", "")


def _untuple(value):
    # JSON has no tuples; keep gold structures in list form on both sides
    if isinstance(value, dict):
        return {k: _untuple(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_untuple(v) for v in value]
    return value


@dataclass
class ClipData:
    clip: ClipManifest
    tuples: list[EventTuple]
    tracks: list[InstrumentTrack]
    blocks: dict[str, list[SemanticBlock]]


def prepare_clip(clip: ClipManifest, tuples: Sequence[EventTuple], gate: float = DEFAULT_GATE) -> ClipData:
    inside = clip_tuples(tuples, clip)
    tracks = build_tracks(inside, clip, gate)
    return ClipData(clip, inside, tracks, {t.track_id: track_blocks(t) for t in tracks})


def clip_seed(master_seed: int, clip_id: str) -> int:
    digest = hashlib.sha256(f"{master_seed}:{clip_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def round_time(x: float) -> float:
    return round(round(x, 9), 2)


def round_speed(x: float) -> float:
    return round(round(x, 9), 3)


def thirds(cx: float, cy: float, margin: float) -> tuple[str, str] | None:
    """Frame segment of a centroid, or None when it sits within ``margin`` of a boundary."""
    for v in (cx, cy):
        if abs(v - 1 / 3) < margin or abs(v - 2 / 3) < margin:
            return None
    h = "left" if cx < 1 / 3 else "center" if cx < 2 / 3 else "right"
    v = "top" if cy < 1 / 3 else "middle" if cy < 2 / 3 else "bottom"
    return h, v


def _dist(a, b) -> float:
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    return math.sqrt(dx * dx + dy * dy)


def _tkey(t: float) -> int:
    return int(round(t * 1e6))


class ClipContext:
    """Indexes one clip's tuples and tracks for the candidate generators."""

    def __init__(self, data: ClipData, vocab: Vocabulary, cfg: GenConfig):
        self.data = data
        self.clip = data.clip
        self.tracks = data.tracks
        self.track_by_id = {tr.track_id: tr for tr in data.tracks}
        self.vocab = vocab
        self.cfg = cfg
        self._visible: dict[int, list[tuple[InstrumentTrack, object]]] = {}
        for tr in self.tracks:
            for s in tr.samples:
                self._visible.setdefault(_tkey(s.t), []).append((tr, s))
        self.frame_times = sorted({e.fn for e in data.tuples})
        self._state: dict[int, list[str]] = {}
        for e in data.tuples:
            self._state.setdefault(_tkey(e.fn), []).append(e.instrument)

    def norm(self, t: float) -> float:
        return round_time(normalize_time(t, self.clip))

    def visible(self, t: float) -> list[tuple[InstrumentTrack, object]]:
        return self._visible.get(_tkey(t), [])

    def instruments_at(self, t: float) -> list[str]:
        return sorted(self._state.get(_tkey(t), []))

    def mc_frames(self) -> list[float]:
        if self.frame_times:
            return self.frame_times
        n = int(math.floor(self.clip.duration_s * self.clip.fps + 1e-9))
        return [self.clip.start_s + k / self.clip.fps for k in range(n)]

    def unique_at(self, track: InstrumentTrack, t: float) -> bool:
        return sum(1 for tr, _ in self.visible(t) if tr.instrument == track.instrument) == 1

    def unique_in(self, track: InstrumentTrack, window: QueryWindow) -> bool:
        for other in self.tracks:
            if other is track or other.instrument != track.instrument:
                continue
            if other.start <= window.t_end + TIME_TOL and other.end >= window.t_start - TIME_TOL:
                return False
        return True

    def continuous(self, track: InstrumentTrack, window: QueryWindow) -> bool:
        return is_continuous(track, window, self.cfg.delta)

    def has_interactions(self) -> bool:
        return any(e.verb is not None for e in self.data.tuples)

    def has_two_instruments(self) -> bool:
        return any(len(v) >= 2 for v in self._visible.values())

    def random_windows(self, track: InstrumentTrack, rng: random.Random, count: int,
                       min_samples: int) -> list[tuple[int, int]]:
        n = len(track.samples)
        if n < min_samples:
            return []
        out = set()
        for _ in range(count):
            lo = rng.randrange(0, n - min_samples + 1)
            hi = rng.randrange(lo + min_samples - 1, n)
            out.add((lo, hi))
        return sorted(out)


# Candidate enumerators return lists of opaque candidates; makers turn one
# into (query, gold, options) or None when a guard rejects it.

Made = tuple[dict, dict, list | None]


def _frame_track_pairs(ctx: ClipContext, rng) -> list:
    return [(t, tr.track_id) for t in ctx.frame_times for tr, _ in ctx.visible(t)]


def _track(ctx: ClipContext, track_id: str) -> InstrumentTrack:
    return ctx.track_by_id[track_id]


def _window_candidates(ctx: ClipContext, rng, min_samples: int, per_track: int) -> list:
    out = []
    for tr in ctx.tracks:
        for lo, hi in ctx.random_windows(tr, rng, per_track, min_samples):
            out.append((tr.track_id, lo, hi))
    return out


def cand_temporal_window(ctx, rng):
    return list(ctx.frame_times)


def make_temporal_window(ctx: ClipContext, t: float, rng) -> Made | None:
    vis = ctx.visible(t)
    if not vis:
        return None
    names = [tr.instrument for tr, _ in vis]
    if len(set(names)) != len(names):
        return None
    items = []
    for tr, _ in vis:
        if not ctx.continuous(tr, tr.span):
            return None
        first, last = tr.samples[0], tr.samples[-1]
        items.append({
            "name": tr.instrument,
            "start": ctx.norm(first.t),
            "end": ctx.norm(last.t),
            "start_bbox": list(quantize_bbox(first.bbox)),
            "end_bbox": list(quantize_bbox(last.bbox)),
        })
    items.sort(key=lambda it: (it["start"], it["name"]))
    return {"t": ctx.norm(t)}, {"items": items}, None


def make_locate(ctx: ClipContext, cand, rng) -> Made | None:
    t, tid = cand
    tr = _track(ctx, tid)
    if not ctx.unique_at(tr, t):
        return None
    s = tr.sample_at(t)
    return ({"name": tr.instrument, "t": ctx.norm(t)},
            {"name": tr.instrument, "bbox": list(quantize_bbox(s.bbox))}, None)


def cand_closest(ctx, rng):
    return [t for t in ctx.frame_times if len(ctx.visible(t)) >= 2]


def make_closest(ctx: ClipContext, t: float, rng) -> Made | None:
    vis = ctx.visible(t)
    if len(vis) < 2:
        return None
    _, anchor = vis[rng.randrange(len(vis))]
    cx, cy = anchor.centroid
    r = 0.02
    point = quantize_bbox((max(0.0, cx - r), max(0.0, cy - r), min(1.0, cx + r), min(1.0, cy + r)))
    center = ((point[0] + point[2]) / 2000, (point[1] + point[3]) / 2000)
    ranked = sorted((_dist(center, s.centroid), tr.instrument) for tr, s in vis)
    if ranked[1][0] - ranked[0][0] < ctx.cfg.closest_gap:
        return None
    return {"point": list(point), "t": ctx.norm(t)}, {"name": ranked[0][1]}, None


def make_frame_segment(ctx: ClipContext, cand, rng) -> Made | None:
    t, tid = cand
    tr = _track(ctx, tid)
    if not ctx.unique_at(tr, t):
        return None
    seg = thirds(*tr.sample_at(t).centroid, ctx.cfg.segment_margin)
    if seg is None:
        return None
    return ({"name": tr.instrument, "t": ctx.norm(t)},
            {"name": tr.instrument, "horizontal": seg[0], "vertical": seg[1]}, None)


def cand_trajectory_extreme(ctx, rng):
    return _window_candidates(ctx, rng, 3, 6)


def make_trajectory_extreme(ctx: ClipContext, cand, rng) -> Made | None:
    tid, lo, hi = cand
    tr = _track(ctx, tid)
    window = QueryWindow(tr.samples[lo].t, tr.samples[hi].t)
    if not ctx.unique_in(tr, window) or not ctx.continuous(tr, window):
        return None
    direction = DIRECTIONS[rng.randrange(len(DIRECTIONS))]
    t, bbox = trajectory_extreme(tr, window, direction)
    return ({"name": tr.instrument, "t1": ctx.norm(window.t_start), "t2": ctx.norm(window.t_end),
             "direction": direction},
            {"name": tr.instrument, "direction": direction, "t": ctx.norm(t), "bbox": list(quantize_bbox(bbox))},
            None)


def _interaction_blocks(ctx: ClipContext, tr: InstrumentTrack) -> list[SemanticBlock]:
    return [b for b in ctx.data.blocks.get(tr.track_id, []) if not b.is_null]


def cand_sequential_actions(ctx, rng):
    out = []
    for tr in ctx.tracks:
        blocks = _interaction_blocks(ctx, tr)
        for i in range(len(blocks) - 1):
            out.append((tr.track_id, i))
    return out


def make_sequential_actions(ctx: ClipContext, cand, rng) -> Made | None:
    tid, i = cand
    tr = _track(ctx, tid)
    b1, b2 = _interaction_blocks(ctx, tr)[i:i + 2]
    if b2.t_start - b1.t_end > ctx.cfg.seq_max_gap_s + TIME_TOL:
        return None
    if (b1.verb, b1.target) == (b2.verb, b2.target):
        return None
    if not ctx.unique_in(tr, QueryWindow(b1.t_start, b2.t_end)) or not ctx.continuous(tr, b1.window):
        return None
    return ({"name": tr.instrument, "verb0": b1.verb, "target0": b1.target,
             "t1": ctx.norm(b1.t_start), "t2": ctx.norm(b1.t_end)},
            {"name": tr.instrument, "verb": b2.verb, "target": b2.target}, None)


def cand_block_windows(ctx, rng):
    out = []
    for tr in ctx.tracks:
        for bi, b in enumerate(_interaction_blocks(ctx, tr)):
            lo, hi = tr.index_range(b.window)
            for _ in range(3):
                if hi - lo < 2:
                    break
                a = rng.randrange(lo, hi - 1)
                z = rng.randrange(a + 1, hi)
                out.append((tr.track_id, a, z))
    return sorted(set(out))


def _block_window(ctx: ClipContext, cand):
    tid, a, z = cand
    tr = _track(ctx, tid)
    window = QueryWindow(tr.samples[a].t, tr.samples[z].t)
    block = next((b for b in _interaction_blocks(ctx, tr) if b.window.covers(window)), None)
    if block is None or not ctx.unique_in(tr, window) or not ctx.continuous(tr, window):
        return None
    return tr, window, block


def make_action_status(ctx: ClipContext, cand, rng) -> Made | None:
    found = _block_window(ctx, cand)
    if found is None:
        return None
    tr, w, b = found
    return ({"name": tr.instrument, "t1": ctx.norm(w.t_start), "t2": ctx.norm(w.t_end)},
            {"name": tr.instrument, "verb": b.verb}, None)


def make_target_interaction(ctx: ClipContext, cand, rng) -> Made | None:
    found = _block_window(ctx, cand)
    if found is None:
        return None
    tr, w, b = found
    return ({"name": tr.instrument, "t1": ctx.norm(w.t_start), "t2": ctx.norm(w.t_end)},
            {"name": tr.instrument, "target": b.target}, None)


def lookup_instrument(query_box, instances: Iterable[tuple[str, tuple]]) -> list[tuple[float, str]]:
    """Instances ranked by IoU with an integer [0,1000] query box, best first."""
    q = [v / 1000 for v in query_box]
    return sorted(((kernels.iou(q, bbox), name) for name, bbox in instances), key=lambda p: (-p[0], p[1]))


def make_instrument_id(ctx: ClipContext, cand, rng) -> Made | None:
    t, tid = cand
    tr = _track(ctx, tid)
    box = quantize_bbox(tr.sample_at(t).bbox)
    ranked = lookup_instrument(box, [(o.instrument, s.bbox) for o, s in ctx.visible(t)])
    if ranked[0][1] != tr.instrument:
        return None
    if any(name != tr.instrument and score >= 0.5 for score, name in ranked[1:]):
        return None
    return {"bbox": list(box), "t": ctx.norm(t)}, {"name": ranked[0][1]}, None


def cand_relative_position(ctx, rng):
    return [t for t in ctx.frame_times if len({tr.instrument for tr, _ in ctx.visible(t)}) >= 2]


def make_relative_position(ctx: ClipContext, t: float, rng) -> Made | None:
    vis = [(tr, s) for tr, s in ctx.visible(t) if ctx.unique_at(tr, t)]
    pairs = list(permutations(vis, 2))
    if not pairs:
        return None
    (a, sa), (b, sb) = pairs[rng.randrange(len(pairs))]
    (ax, ay), (bx, by) = sa.centroid, sb.centroid
    if abs(ax - bx) < ctx.cfg.axis_gap or abs(ay - by) < ctx.cfg.axis_gap:
        return None
    return ({"name1": a.instrument, "name2": b.instrument, "t": ctx.norm(t)},
            {"name1": a.instrument, "horizontal": "right" if ax > bx else "left",
             "vertical": "below" if ay > by else "above", "name2": b.instrument}, None)


def _track_pairs(ctx: ClipContext) -> list[tuple[InstrumentTrack, InstrumentTrack, QueryWindow]]:
    out = []
    for a, b in combinations(ctx.tracks, 2):
        if a.instrument == b.instrument:
            continue
        lo, hi = max(a.start, b.start), min(a.end, b.end)
        if hi - lo > TIME_TOL:
            out.append((a, b, QueryWindow(lo, hi)))
    return out


def cand_relative_change(ctx, rng):
    out = []
    for a, b, w in _track_pairs(ctx):
        lo, hi = a.index_range(w)
        if hi - lo < 2:
            continue
        for _ in range(4):
            i = rng.randrange(lo, hi - 1)
            j = rng.randrange(i + 1, hi)
            first, second = (a, b) if rng.random() < 0.5 else (b, a)
            out.append((first.track_id, second.track_id, a.samples[i].t, a.samples[j].t))
    return sorted(set(out))


def make_relative_change(ctx: ClipContext, cand, rng) -> Made | None:
    ida, idb, t1, t2 = cand
    a, b = _track(ctx, ida), _track(ctx, idb)
    w = QueryWindow(t1, t2)
    for tr in (a, b):
        if not ctx.unique_in(tr, w) or not ctx.continuous(tr, w):
            return None
    d1 = _dist(a.sample_at(t1).centroid, b.sample_at(t1).centroid)
    d2 = _dist(a.sample_at(t2).centroid, b.sample_at(t2).centroid)
    band = ctx.cfg.change_band
    if abs(abs(d2 - d1) - band) < 1e-6:
        return None
    change = "closer" if d2 < d1 - band else "further" if d2 > d1 + band else "unchanged"
    return ({"name1": a.instrument, "name2": b.instrument, "t1": ctx.norm(t1), "t2": ctx.norm(t2)},
            {"name1": a.instrument, "name2": b.instrument, "change": change}, None)


def cand_interaction_comparison(ctx, rng):
    out = []
    for a, b, w in _track_pairs(ctx):
        for ba in _interaction_blocks(ctx, a):
            for bb in _interaction_blocks(ctx, b):
                lo, hi = max(ba.t_start, bb.t_start), min(ba.t_end, bb.t_end)
                if hi - lo > TIME_TOL:
                    first, second = (a, b) if rng.random() < 0.5 else (b, a)
                    out.append((first.track_id, second.track_id, lo, hi))
    return out


def make_interaction_comparison(ctx: ClipContext, cand, rng) -> Made | None:
    ida, idb, lo, hi = cand
    a, b = _track(ctx, ida), _track(ctx, idb)
    w = QueryWindow(lo, hi)
    pairs = []
    for tr in (a, b):
        if not ctx.unique_in(tr, w) or not ctx.continuous(tr, w):
            return None
        block = next((blk for blk in _interaction_blocks(ctx, tr) if blk.window.covers(w)), None)
        if block is None:
            return None
        pairs.append((block.verb, block.target))
    verdict = "same" if pairs[0] == pairs[1] else "different"
    return ({"name1": a.instrument, "name2": b.instrument, "t1": ctx.norm(lo), "t2": ctx.norm(hi)},
            {"verdict": verdict, "name1": a.instrument, "verb1": pairs[0][0], "target1": pairs[0][1],
             "name2": b.instrument, "verb2": pairs[1][0], "target2": pairs[1][1]}, None)


def cand_velocity(ctx, rng):
    return _window_candidates(ctx, rng, ctx.cfg.min_velocity_samples, 6)


def make_velocity(ctx: ClipContext, cand, rng) -> Made | None:
    tid, lo, hi = cand
    tr = _track(ctx, tid)
    if hi - lo + 1 < ctx.cfg.min_velocity_samples:
        return None
    w = QueryWindow(tr.samples[lo].t, tr.samples[hi].t)
    if not ctx.unique_in(tr, w) or not ctx.continuous(tr, w):
        return None
    k = compute_kinematics(tr, w, ctx.cfg.thresholds)
    return ({"name": tr.instrument, "t1": ctx.norm(w.t_start), "t2": ctx.norm(w.t_end)},
            {"name": tr.instrument, "min": round_speed(k.min_speed), "max": round_speed(k.max_speed),
             "mean": round_speed(k.mean_speed), "descriptor": k.descriptor}, None)


def cand_cot(ctx, rng):
    out = []
    for tr in ctx.tracks:
        for b in _interaction_blocks(ctx, tr):
            lo, hi = tr.index_range(b.window)
            m = ctx.cfg.min_velocity_samples
            for _ in range(3):
                if hi - lo < m:
                    break
                a = rng.randrange(lo, hi - m + 1)
                z = rng.randrange(a + m - 1, hi)
                out.append((tr.track_id, a, z))
    return sorted(set(out))


def make_cot(ctx: ClipContext, cand, rng) -> Made | None:
    found = _block_window(ctx, cand)
    if found is None:
        return None
    tr, w, b = found
    first = tr.window_samples(w)
    if len(first) < ctx.cfg.min_velocity_samples:
        return None
    seg = thirds(*first[0].centroid, ctx.cfg.segment_margin)
    if seg is None:
        return None
    k = compute_kinematics(tr, w, ctx.cfg.thresholds)
    gold = {"name": tr.instrument, "horizontal": seg[0], "vertical": seg[1],
            "bbox": list(quantize_bbox(first[0].bbox)), "descriptor": k.descriptor,
            "mean": round_speed(k.mean_speed), "verb": b.verb, "target": b.target,
            "stages": ["localization", "kinematics", "interaction"]}
    return {"name": tr.instrument, "t1": ctx.norm(w.t_start), "t2": ctx.norm(w.t_end)}, gold, None


def _place(correct: str, distractors: list[str], rng) -> tuple[list[str], str]:
    n = len(distractors) + 1
    pos = rng.randrange(n)
    options = list(distractors)
    options.insert(pos, correct)
    return options, LETTERS[pos]


def cand_mc(ctx, rng):
    return list(ctx.mc_frames())


def make_mc_existence(ctx: ClipContext, t: float, rng) -> Made | None:
    present = sorted(set(ctx.instruments_at(t)))
    absent = [i for i in ctx.vocab.instruments if i not in present]
    if present and (not absent or rng.random() < 0.5):
        name, correct = present[rng.randrange(len(present))], "yes"
    elif absent:
        name, correct = absent[rng.randrange(len(absent))], "no"
    else:
        return None
    options, letter = _place(correct, ["no" if correct == "yes" else "yes"], rng)
    return {"name": name, "t": ctx.norm(t), "options": options}, {"letter": letter}, options


def make_mc_class(ctx: ClipContext, t: float, rng) -> Made | None:
    present = sorted(set(ctx.instruments_at(t)))
    pool = [i for i in ctx.vocab.instruments if i not in present]
    if not present or len(pool) < 3:
        return None
    correct = present[rng.randrange(len(present))]
    distractors = [display(x) for x in rng.sample(pool, 3)]
    options, letter = _place(display(correct), distractors, rng)
    return {"t": ctx.norm(t), "options": options}, {"letter": letter}, options


def counting_distractors(count: int) -> list[int]:
    """Wrong counts near the true one; small counts borrow ``count + 3`` so there are always three."""
    pool = [count + off for off in (-2, -1, 1, 2) if count + off >= 0]
    if len(pool) < 3:
        pool.append(count + 3)
    return pool


def make_mc_counting(ctx: ClipContext, t: float, rng) -> Made | None:
    inst = ctx.instruments_at(t)
    present = sorted(set(inst))
    absent = [i for i in ctx.vocab.instruments if i not in present]
    if present and (not absent or rng.random() < 0.75):
        name = present[rng.randrange(len(present))]
    elif absent:
        name = absent[rng.randrange(len(absent))]
    else:
        return None
    count = inst.count(name)
    chosen = sorted(rng.sample(counting_distractors(count), 3))
    options, letter = _place(str(count), [str(c) for c in chosen], rng)
    return {"name": name, "t": ctx.norm(t), "options": options}, {"letter": letter}, options


CANDIDATES: dict[str, Callable] = {
    "temporal_window": cand_temporal_window,
    "locate": _frame_track_pairs,
    "closest": cand_closest,
    "frame_segment": _frame_track_pairs,
    "trajectory_extreme": cand_trajectory_extreme,
    "sequential_actions": cand_sequential_actions,
    "action_status": cand_block_windows,
    "target_interaction": cand_block_windows,
    "instrument_id": _frame_track_pairs,
    "relative_position": cand_relative_position,
    "relative_change": cand_relative_change,
    "interaction_comparison": cand_interaction_comparison,
    "velocity": cand_velocity,
    "mc_existence": cand_mc,
    "mc_class": cand_mc,
    "mc_counting": cand_mc,
    "cot": cand_cot,
}

MAKERS: dict[str, Callable] = {
    "temporal_window": make_temporal_window,
    "locate": make_locate,
    "closest": make_closest,
    "frame_segment": make_frame_segment,
    "trajectory_extreme": make_trajectory_extreme,
    "sequential_actions": make_sequential_actions,
    "action_status": make_action_status,
    "target_interaction": make_target_interaction,
    "instrument_id": make_instrument_id,
    "relative_position": make_relative_position,
    "relative_change": make_relative_change,
    "interaction_comparison": make_interaction_comparison,
    "velocity": make_velocity,
    "mc_existence": make_mc_existence,
    "mc_class": make_mc_class,
    "mc_counting": make_mc_counting,
    "cot": make_cot,
}


def build_sample(ctx: ClipContext, template: TaskTemplate, made: Made, index: int, seed: int) -> QASample:
    query, gold, options = made
    gold = _untuple(dict(gold))
    gold["query"] = _untuple(dict(query))
    return QASample(
        sample_id=f"{ctx.clip.clip_id}-{template.template_id}-{index:03d}",
        clip_id=ctx.clip.clip_id,
        core_task=template.core_task,
        subtask=template.subtask,
        question=template.render_question(query),
        answer=template.render_answer(gold),
        gold=gold,
        provenance={"template_id": template.template_id, "seed": seed,
                    "source_video_id": ctx.clip.source_video_id, "reconstructed": template.reconstructed},
        options=options,
    )


def _generate(ctx: ClipContext, template: TaskTemplate, cand, rng, index: int, seed: int) -> QASample | None:
    made = MAKERS[template.subtask](ctx, cand, rng)
    return None if made is None else build_sample(ctx, template, made, index, seed)


# Entry points per task family. ``cand`` is a candidate from CANDIDATES.

def gen_grounding(ctx, template, cand, rng, index=0, seed=0) -> QASample | None:
    return _generate(ctx, template, cand, rng, index, seed)


gen_interaction = gen_relation = gen_velocity = gen_cot = gen_multichoice = gen_grounding


def requirements_met(ctx: ClipContext, template: TaskTemplate) -> list[str]:
    unmet = []
    for req in template.requires:
        if req == "bbox" and not ctx.tracks:
            unmet.append(req)
        elif req == "interactions" and not ctx.has_interactions():
            unmet.append(req)
        elif req == "two_instruments" and not ctx.has_two_instruments():
            unmet.append(req)
    return unmet


def generate_clip(data: ClipData, registry: Sequence[TaskTemplate], master_seed: int,
                  vocab: Vocabulary, cfg: GenConfig) -> tuple[list[QASample], list[dict]]:
    ctx = ClipContext(data, vocab, cfg)
    seed = clip_seed(master_seed, data.clip.clip_id)
    samples: list[QASample] = []
    notes: list[dict] = []
    for template in registry:
        quota = cfg.quota(template.subtask)
        unmet = requirements_met(ctx, template)
        produced = 0
        if not unmet and quota > 0:
            rng = random.Random(f"{seed}:{template.template_id}")
            cands = CANDIDATES[template.subtask](ctx, rng)
            rng.shuffle(cands)
            for cand in cands:
                if produced >= quota:
                    break
                sample = _generate(ctx, template, cand, rng, produced, seed)
                if sample is not None:
                    samples.append(sample)
                    produced += 1
        if produced < quota:
            note = {"clip_id": data.clip.clip_id, "template_id": template.template_id,
                    "subtask": template.subtask, "requested": quota, "produced": produced}
            if unmet:
                note["unmet"] = unmet
            notes.append(note)
    return samples, notes


def _generate_clip_star(args):
    return generate_clip(*args)


def generate_dataset(clips: Sequence[ClipData], registry: Sequence[TaskTemplate], master_seed: int,
                     vocab: Vocabulary, cfg: GenConfig = GenConfig(),
                     workers: int = 1) -> tuple[list[QASample], list[dict]]:
    """Generate samples for every clip; output is independent of ``workers``."""
    registry = sorted(registry, key=lambda t: t.template_id)
    jobs = [(c, registry, master_seed, vocab, cfg) for c in clips]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_generate_clip_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_generate_clip_star(j) for j in jobs]
    samples = [s for res, _ in results for s in res]
    notes = [n for _, res in results for n in res]
    samples.sort(key=lambda s: s.sample_id)
    notes.sort(key=lambda n: (n["clip_id"], n["template_id"]))
    return samples, notes


def dumps_record(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, ensure_ascii=False, separators=(", ", ": "))


def emit_dataset(samples: Iterable[QASample], path: str | Path) -> int:
    lines = [dumps_record(s.to_record()) for s in sorted(samples, key=lambda s: s.sample_id)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")
    return len(lines)


def load_dataset(path: str | Path) -> list[QASample]:
    with open(path, encoding="utf-8") as fh:
        return [QASample.from_record(json.loads(line)) for line in fh if line.strip()]


def retrieve_icl_exemplar(test_sample: QASample, training_pool: Sequence[QASample],
                          seed: int) -> tuple[QASample, str]:
    """Seeded choice of one solved training sample matching the test sample's category.

    Prefers the same subtask from a different source video; otherwise falls
    back to the same core task. Returns the exemplar and the level matched.
    """
    if not training_pool:
        raise ValueError("empty training pool")
    rng = random.Random(f"{seed}:{test_sample.sample_id}")
    other_video = [s for s in training_pool if s.source_video_id != test_sample.source_video_id]
    levels = (
        ("subtask", [s for s in other_video if s.subtask == test_sample.subtask]),
        ("core_task", [s for s in other_video if s.core_task == test_sample.core_task]),
        ("core_task", [s for s in training_pool if s.core_task == test_sample.core_task]),
    )
    for level, pool in levels:
        if pool:
            pool = sorted(pool, key=lambda s: s.sample_id)
            return pool[rng.randrange(len(pool))], level
    raise LookupError(f"no training sample for core task {test_sample.core_task!r}")
