"""Instrument tracks, continuity filtering, semantic blocks and kinematics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import kernels
from .events import TIME_TOL, ClipManifest, EventTuple, clip_tuples

DEFAULT_GATE = 0.3
DEFAULT_DELTA = 0.3 * math.sqrt(2.0)
STATIONARY = "stationary"
SLOW = "moving slowly"
ACTIVE = "moving actively"
DESCRIPTORS = (STATIONARY, SLOW, ACTIVE)
DIRECTIONS = ("left", "right", "top", "bottom")


@dataclass(frozen=True)
class MotionThresholds:
    slow: float = 0.02
    active: float = 0.10

    def __post_init__(self):
        if not 0 <= self.slow <= self.active:
            raise ValueError("motion thresholds must satisfy 0 <= slow <= active")


@dataclass(frozen=True)
class TrackSample:
    t: float
    bbox: tuple[float, float, float, float]
    verb: str | None = None
    target: str | None = None

    @property
    def fn(self) -> float:
        return self.t

    @property
    def centroid(self) -> tuple[float, float]:
        x1, y1, x2, y2 = self.bbox
        return ((x1 + x2) / 2, (y1 + y2) / 2)


@dataclass(frozen=True)
class QueryWindow:
    t_start: float
    t_end: float

    def __post_init__(self):
        # point windows are allowed for single-frame blocks
        if self.t_start > self.t_end:
            raise ValueError("window start after end")

    def contains(self, t: float) -> bool:
        return self.t_start - TIME_TOL <= t <= self.t_end + TIME_TOL

    def covers(self, other: "QueryWindow") -> bool:
        return self.contains(other.t_start) and self.contains(other.t_end)


@dataclass
class InstrumentTrack:
    track_id: str
    instrument: str
    samples: list[TrackSample]
    sampling_period_s: float

    @cached_property
    def t(self) -> np.ndarray:
        return np.array([s.t for s in self.samples], dtype=np.float64)

    @cached_property
    def cx(self) -> np.ndarray:
        return np.array([s.centroid[0] for s in self.samples], dtype=np.float64)

    @cached_property
    def cy(self) -> np.ndarray:
        return np.array([s.centroid[1] for s in self.samples], dtype=np.float64)

    @property
    def start(self) -> float:
        return self.samples[0].t

    @property
    def end(self) -> float:
        return self.samples[-1].t

    @property
    def span(self) -> QueryWindow:
        return QueryWindow(self.start, self.end)

    def index_range(self, window: QueryWindow) -> tuple[int, int]:
        lo = int(np.searchsorted(self.t, window.t_start - TIME_TOL, side="left"))
        hi = int(np.searchsorted(self.t, window.t_end + TIME_TOL, side="right"))
        return lo, hi

    def window_samples(self, window: QueryWindow) -> list[TrackSample]:
        lo, hi = self.index_range(window)
        return self.samples[lo:hi]

    def sample_at(self, t: float) -> TrackSample | None:
        i = int(np.searchsorted(self.t, t - TIME_TOL, side="left"))
        if i < len(self.samples) and abs(self.samples[i].t - t) <= TIME_TOL:
            return self.samples[i]
        return None


@dataclass(frozen=True)
class SemanticBlock:
    instrument: str
    verb: str | None
    target: str | None
    t_start: float
    t_end: float
    track_id: str | None = None
    n_samples: int = 0

    @property
    def is_null(self) -> bool:
        return self.verb is None

    @property
    def window(self) -> QueryWindow:
        return QueryWindow(self.t_start, self.t_end)


@dataclass(frozen=True)
class KinematicSummary:
    min_speed: float
    max_speed: float
    mean_speed: float
    descriptor: str


def build_tracks(tuples: Sequence[EventTuple], clip: ClipManifest, gate: float = DEFAULT_GATE) -> list[InstrumentTrack]:
    """Associate per-frame detections into tracks.

    Per frame and instrument class, detections are matched to tracks that
    were seen exactly one period earlier by greedy nearest centroid within
    ``gate``. Unmatched detections start new tracks; a track that misses a
    frame is closed for good.
    """
    period = clip.period_s
    tuples = sorted(clip_tuples(tuples, clip), key=lambda e: (e.fn, e.instrument, e.bbox))
    tracks: list[InstrumentTrack] = []
    open_by_class: dict[str, list[int]] = {}
    i = 0
    n = len(tuples)
    while i < n:
        fn = tuples[i].fn
        j = i
        while j < n and tuples[j].fn == fn:
            j += 1
        frame = tuples[i:j]
        i = j
        by_class: dict[str, list[EventTuple]] = {}
        for e in frame:
            by_class.setdefault(e.instrument, []).append(e)
        for cls in sorted(set(by_class) | set(open_by_class)):
            dets = by_class.get(cls, [])
            live = [k for k in open_by_class.get(cls, [])
                    if abs(tracks[k].samples[-1].t + period - fn) <= TIME_TOL]
            tx = [tracks[k].samples[-1].centroid[0] for k in live]
            ty = [tracks[k].samples[-1].centroid[1] for k in live]
            dx = [e.centroid[0] for e in dets]
            dy = [e.centroid[1] for e in dets]
            matches = kernels.greedy_match(tx, ty, dx, dy, gate) if live and dets else []
            still_open = []
            matched_dets = set()
            for ti, di in matches:
                k = live[ti]
                e = dets[di]
                tracks[k].samples.append(TrackSample(e.fn, e.bbox, e.verb, e.target))
                still_open.append(k)
                matched_dets.add(di)
            for di, e in enumerate(dets):
                if di in matched_dets:
                    continue
                k = len(tracks)
                tracks.append(InstrumentTrack(f"{clip.clip_id}:t{k:03d}", cls,
                                              [TrackSample(e.fn, e.bbox, e.verb, e.target)], period))
                still_open.append(k)
            if still_open:
                open_by_class[cls] = sorted(still_open)
            else:
                open_by_class.pop(cls, None)
    return tracks


def check_temporal_continuity(track: InstrumentTrack, window: QueryWindow) -> bool:
    """Every expected frame time in the window has a sample."""
    lo, hi = track.index_range(window)
    if hi <= lo:
        return False
    return kernels.covers_grid(track.t[lo:hi], window.t_start, window.t_end, track.sampling_period_s, TIME_TOL)


def check_spatial_continuity(track: InstrumentTrack, delta: float = DEFAULT_DELTA,
                             window: QueryWindow | None = None) -> bool:
    """No consecutive centroid displacement exceeds ``delta`` (boundary inclusive)."""
    lo, hi = (0, len(track.samples)) if window is None else track.index_range(window)
    if hi - lo < 2:
        return True
    # 1e-9 slack so a step of exactly delta survives centroid round-off
    return kernels.max_displacement(track.cx[lo:hi], track.cy[lo:hi]) <= delta + 1e-9


def is_continuous(track: InstrumentTrack, window: QueryWindow, delta: float = DEFAULT_DELTA) -> bool:
    return check_temporal_continuity(track, window) and check_spatial_continuity(track, delta, window)


def classify_motion(mean_speed: float, thresholds: MotionThresholds = MotionThresholds()) -> str:
    if mean_speed < 0:
        raise ValueError("speed must be non-negative")
    # 1e-9 slack keeps speeds that equal a threshold analytically on the upper side
    if mean_speed >= thresholds.active - 1e-9:
        return ACTIVE
    if mean_speed >= thresholds.slow - 1e-9:
        return SLOW
    return STATIONARY


def compute_kinematics(track: InstrumentTrack, window: QueryWindow,
                       thresholds: MotionThresholds = MotionThresholds()) -> KinematicSummary:
    lo, hi = track.index_range(window)
    if hi - lo < 2:
        raise ValueError("window too short")
    lo_v, hi_v, mean_v = kernels.speed_stats(track.t[lo:hi], track.cx[lo:hi], track.cy[lo:hi])
    return KinematicSummary(lo_v, hi_v, mean_v, classify_motion(mean_v, thresholds))


def group_semantic_blocks(tuples: Sequence, period_s: float, instrument: str | None = None,
                          track_id: str | None = None) -> list[SemanticBlock]:
    """Split a single instrument's time-sorted tuples into constant-(verb, target) runs.

    A label change or a gap longer than one period ends a run. Null-labelled
    runs are kept as null blocks.
    """
    blocks: list[SemanticBlock] = []
    run: list = []

    def close():
        if run:
            first = run[0]
            name = instrument if instrument is not None else getattr(first, "instrument", None)
            blocks.append(SemanticBlock(name, first.verb, first.target, first.fn, run[-1].fn,
                                        track_id, len(run)))

    for e in tuples:
        if run:
            prev = run[-1]
            gap = e.fn - prev.fn
            if (e.verb, e.target) != (prev.verb, prev.target) or gap > period_s + TIME_TOL:
                close()
                run = []
        run.append(e)
    close()
    return blocks


def track_blocks(track: InstrumentTrack) -> list[SemanticBlock]:
    return group_semantic_blocks(track.samples, track.sampling_period_s, track.instrument, track.track_id)


def trajectory_extreme(track: InstrumentTrack, window: QueryWindow, direction: str) -> tuple[float, tuple]:
    """Sample reaching the extreme centroid position; ties go to the earliest."""
    if direction not in DIRECTIONS:
        raise ValueError(f"unknown direction {direction!r}")
    lo, hi = track.index_range(window)
    if hi <= lo:
        raise ValueError("empty window")
    values = track.cx[lo:hi] if direction in ("left", "right") else track.cy[lo:hi]
    k = kernels.extreme_index(values, direction in ("right", "bottom"))
    s = track.samples[lo + k]
    return s.t, s.bbox


def temporal_window(track: InstrumentTrack, window: QueryWindow | None = None) -> tuple[float, tuple, float, tuple]:
    samples = track.samples if window is None else track.window_samples(window)
    if not samples:
        raise ValueError("empty track")
    return samples[0].t, samples[0].bbox, samples[-1].t, samples[-1].bbox
