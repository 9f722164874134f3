"""Frame-level annotation model: ingestion, label broadcasting, clip segmentation."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from itertools import groupby
from typing import Iterable, Iterator

from . import kernels
from .vocab import UnknownLabel, Vocabulary

# Frame times are compared with this tolerance throughout.
TIME_TOL = 1e-6


class AnnotationError(ValueError):
    """A rejected annotation record."""

    def __init__(self, reason: str, line: int | None = None):
        super().__init__(reason)
        self.reason = reason
        self.line = line

    def __str__(self) -> str:
        return f"line {self.line}: {self.reason}" if self.line is not None else self.reason


def validate_bbox(bbox) -> tuple[float, float, float, float]:
    if not isinstance(bbox, (list, tuple)) or len(bbox) != 4:
        raise AnnotationError("bbox must have 4 coordinates")
    try:
        x1, y1, x2, y2 = (float(v) for v in bbox)
    except (TypeError, ValueError):
        raise AnnotationError("bbox coordinates must be numbers") from None
    if not all(0.0 <= v <= 1.0 for v in (x1, y1, x2, y2)):
        raise AnnotationError("bbox coordinate outside [0, 1]")
    if x1 >= x2:
        raise AnnotationError("x1 ≥ x2")
    if y1 >= y2:
        raise AnnotationError("y1 ≥ y2")
    return (x1, y1, x2, y2)


@dataclass(frozen=True)
class EventTuple:
    fn: float
    instrument: str
    bbox: tuple[float, float, float, float]
    verb: str | None = None
    target: str | None = None
    source_frame_index: int = 0

    def __post_init__(self):
        if self.fn < 0:
            raise AnnotationError("fn must be non-negative")
        validate_bbox(self.bbox)
        if (self.verb is None) != (self.target is None):
            raise AnnotationError("verb and target must both be null or both be set")

    @property
    def centroid(self) -> tuple[float, float]:
        x1, y1, x2, y2 = self.bbox
        return ((x1 + x2) / 2, (y1 + y2) / 2)

    @property
    def interaction(self) -> tuple[str, str] | None:
        return None if self.verb is None else (self.verb, self.target)

    def to_record(self, video_id: str) -> dict:
        return {
            "video_id": video_id,
            "fn": self.fn,
            "instrument": self.instrument,
            "bbox": list(self.bbox),
            "verb": self.verb,
            "target": self.target,
            "source_frame_index": self.source_frame_index,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "EventTuple":
        return cls(
            fn=float(rec["fn"]),
            instrument=rec["instrument"],
            bbox=tuple(float(v) for v in rec["bbox"]),
            verb=rec.get("verb"),
            target=rec.get("target"),
            source_frame_index=int(rec.get("source_frame_index", 0)),
        )


@dataclass(frozen=True)
class ClipManifest:
    clip_id: str
    source_video_id: str
    start_s: float
    end_s: float
    fps: float

    def __post_init__(self):
        if not self.start_s < self.end_s:
            raise ValueError("clip start must precede end")
        if self.fps <= 0:
            raise ValueError("fps must be positive")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    @property
    def period_s(self) -> float:
        return 1.0 / self.fps

    def contains(self, t: float) -> bool:
        return self.start_s - TIME_TOL <= t <= self.end_s + TIME_TOL

    def to_record(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "source_video_id": self.source_video_id,
            "start_s": self.start_s,
            "end_s": self.end_s,
            "fps": self.fps,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ClipManifest":
        return cls(rec["clip_id"], rec["source_video_id"], float(rec["start_s"]),
                   float(rec["end_s"]), float(rec["fps"]))


@dataclass
class IngestResult:
    videos: dict[str, list[EventTuple]] = field(default_factory=dict)
    rejected: list[AnnotationError] = field(default_factory=list)
    n_records: int = 0

    @property
    def n_accepted(self) -> int:
        return sum(len(v) for v in self.videos.values())

    @property
    def reject_rate(self) -> float:
        return len(self.rejected) / self.n_records if self.n_records else 0.0


def _parse_record(rec, vocab: Vocabulary, source_fps: float) -> tuple[str, EventTuple]:
    if not isinstance(rec, dict):
        raise AnnotationError("record is not an object")
    missing = [k for k in ("fn", "instrument", "bbox") if k not in rec]
    if missing:
        raise AnnotationError(f"missing field(s): {', '.join(missing)}")
    try:
        fn = float(rec["fn"])
    except (TypeError, ValueError):
        raise AnnotationError("fn is not a number") from None
    if not math.isfinite(fn) or fn < 0:
        raise AnnotationError("fn must be a finite non-negative number")
    bbox = validate_bbox(rec["bbox"])
    try:
        instrument = vocab.canonical(str(rec["instrument"]), "instrument")
        verb_raw, target_raw = rec.get("verb"), rec.get("target")
        if (verb_raw is None) != (target_raw is None):
            raise AnnotationError("verb and target must both be null or both be set")
        verb = None if verb_raw is None else vocab.canonical(str(verb_raw), "verb")
        target = None if target_raw is None else vocab.canonical(str(target_raw), "target")
    except UnknownLabel as exc:
        raise AnnotationError(str(exc)) from None
    sfi = rec.get("source_frame_index")
    sfi = int(round(fn * source_fps)) if sfi is None else int(sfi)
    video_id = str(rec.get("video_id", "video"))
    return video_id, EventTuple(fn, instrument, bbox, verb, target, sfi)


def ingest_annotations(lines: Iterable[str], vocab: Vocabulary, source_fps: float = 1.0) -> IngestResult:
    """Parse line-delimited annotation records into canonical tuples per video.

    Bad records are collected in ``rejected`` with their 1-based line number;
    they never abort the whole stream.
    """
    result = IngestResult()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        result.n_records += 1
        try:
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise AnnotationError(f"malformed record: {exc.msg}") from None
            video_id, tup = _parse_record(rec, vocab, source_fps)
        except AnnotationError as exc:
            exc.line = lineno
            result.rejected.append(exc)
            continue
        result.videos.setdefault(video_id, []).append(tup)
    for video_id in result.videos:
        result.videos[video_id].sort(key=sort_key)
    return result


def emit_annotations(videos: dict[str, list[EventTuple]]) -> Iterator[str]:
    for video_id in sorted(videos):
        for tup in videos[video_id]:
            yield json.dumps(tup.to_record(video_id), sort_keys=True)


def sort_key(e: EventTuple):
    return (e.fn, e.instrument, e.bbox)


def _frames(tuples: list[EventTuple]) -> list[tuple[float, list[EventTuple]]]:
    return [(fn, list(group)) for fn, group in groupby(tuples, key=lambda e: e.fn)]


def is_dense(tuples: list[EventTuple], target_fps: float) -> bool:
    """True when annotated frames are already spaced at (or below) the target period."""
    times = sorted({e.fn for e in tuples})
    if len(times) < 2:
        return False
    gap = min(b - a for a, b in zip(times, times[1:]))
    return gap <= 1.0 / target_fps + TIME_TOL


def broadcast_sparse_labels(tuples: list[EventTuple], target_fps: float,
                            half_window_s: float = 0.5) -> list[EventTuple]:
    """Densify sparse annotations onto the ``target_fps`` frame grid.

    Every grid frame within ``half_window_s`` of an annotated frame receives a
    copy of the nearest annotated frame's tuples; equidistant frames take the
    earlier annotation. Input that is already at the target rate is returned
    unchanged.
    """
    if not tuples:
        return []
    if is_dense(tuples, target_fps):
        return list(tuples)
    frames = _frames(sorted(tuples, key=sort_key))
    annot_t = [fn for fn, _ in frames]
    k0 = max(0, math.ceil((annot_t[0] - half_window_s) * target_fps - 1e-9))
    k1 = math.floor((annot_t[-1] + half_window_s) * target_fps + 1e-9)
    frame_t = [k / target_fps for k in range(k0, k1 + 1)]
    nearest = kernels.nearest_annotated(annot_t, frame_t, half_window_s)
    out: list[EventTuple] = []
    for t, idx in zip(frame_t, nearest):
        if idx < 0:
            continue
        for src in frames[idx][1]:
            out.append(replace(src, fn=t))
    return out


def segment_clips(video_duration_s: float, max_len_s: float = 30.0, min_len_s: float = 20.0,
                  video_id: str = "video", fps: float = 1.0) -> list[ClipManifest]:
    """Cut a video into consecutive ``max_len_s`` clips; a short remainder is dropped."""
    if video_duration_s < 0:
        raise ValueError("video duration must be non-negative")
    clips = []
    start = 0.0
    index = 0
    while start < video_duration_s - TIME_TOL:
        end = min(start + max_len_s, video_duration_s)
        if end - start < min_len_s - TIME_TOL:
            break
        clips.append(ClipManifest(f"{video_id}_c{index:03d}", video_id, start, end, fps))
        start = end
        index += 1
    return clips


def clip_tuples(tuples: list[EventTuple], clip: ClipManifest) -> list[EventTuple]:
    """Tuples whose frame time lies in the closed clip interval."""
    return [e for e in tuples if clip.contains(e.fn)]


def normalize_time(t: float, clip: ClipManifest) -> float:
    if not clip.contains(t):
        raise ValueError(f"time {t} outside clip [{clip.start_s}, {clip.end_s}]")
    return min(1.0, max(0.0, (t - clip.start_s) / clip.duration_s))


def quantize_bbox(bbox) -> tuple[int, int, int, int]:
    """Unit-fraction box -> integer [0, 1000] box, keeping x1 < x2 and y1 < y2."""
    x1, y1, x2, y2 = (int(math.floor(round(v * 1000, 6) + 0.5)) for v in bbox)
    if x2 <= x1:
        x2 = min(1000, x1 + 1)
        if x2 <= x1:
            x1 = x2 - 1
    if y2 <= y1:
        y2 = min(1000, y1 + 1)
        if y2 <= y1:
            y1 = y2 - 1
    return (x1, y1, x2, y2)
