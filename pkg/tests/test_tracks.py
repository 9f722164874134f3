from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stqa.events import ClipManifest, EventTuple
from stqa.tracks import (
    ACTIVE,
    DEFAULT_DELTA,
    SLOW,
    STATIONARY,
    InstrumentTrack,
    MotionThresholds,
    QueryWindow,
    TrackSample,
    build_tracks,
    check_spatial_continuity,
    check_temporal_continuity,
    classify_motion,
    compute_kinematics,
    group_semantic_blocks,
    track_blocks,
    trajectory_extreme,
)

CLIP = ClipManifest("c", "v", 0.0, 30.0, 1.0)


def box_at(cx, cy, r=0.05):
    return (cx - r, cy - r, cx + r, cy + r)


def track_of(points, labels=None, period=1.0):
    labels = labels or [(None, None)] * len(points)
    samples = [TrackSample(i * period, box_at(x, y), *lab) for i, ((x, y), lab) in enumerate(zip(points, labels))]
    return InstrumentTrack("c:t000", "hook", samples, period)


def test_two_instruments_of_a_class_stay_apart():
    tuples = []
    for t in range(5):
        tuples.append(EventTuple(float(t), "grasper", box_at(0.2 + 0.01 * t, 0.5)))
        tuples.append(EventTuple(float(t), "grasper", box_at(0.8 - 0.01 * t, 0.5)))
    tracks = build_tracks(tuples, CLIP)
    assert len(tracks) == 2
    assert all(len(tr.samples) == 5 for tr in tracks)
    assert tracks[0].samples[-1].centroid[0] == pytest.approx(0.24)


def test_missing_frame_and_far_jump_split_tracks():
    pts = [(0.2, 0.2), (0.2, 0.2), None, (0.2, 0.2), (0.9, 0.9)]
    tuples = [EventTuple(float(t), "hook", box_at(*p)) for t, p in enumerate(pts) if p]
    tracks = build_tracks(tuples, CLIP)
    assert [(tr.start, tr.end) for tr in tracks] == [(0, 1), (3, 3), (4, 4)]


def test_temporal_continuity():
    tr = track_of([(0.5, 0.5)] * 5)
    assert check_temporal_continuity(tr, QueryWindow(0, 4))
    assert not check_temporal_continuity(tr, QueryWindow(0, 5))
    gappy = InstrumentTrack("x", "hook", [s for s in tr.samples if s.t != 2], 1.0)
    assert not check_temporal_continuity(gappy, QueryWindow(0, 4))
    assert check_temporal_continuity(gappy, QueryWindow(3, 4))


def test_spatial_continuity_boundary_is_inclusive():
    step = DEFAULT_DELTA / math.sqrt(2)
    tr = track_of([(0.1, 0.1), (0.1 + step, 0.1 + step)])
    assert check_spatial_continuity(tr)
    tr2 = track_of([(0.1, 0.1), (0.1 + step + 1e-6, 0.1 + step)])
    assert not check_spatial_continuity(tr2)


def test_kinematics_of_uniform_345_motion():
    tr = track_of([(0.1 + 0.03 * i, 0.1 + 0.04 * i) for i in range(10)], period=0.1)
    k = compute_kinematics(tr, tr.span)
    assert (k.min_speed, k.max_speed, k.mean_speed) == pytest.approx((0.5, 0.5, 0.5), abs=1e-12)
    assert k.descriptor == ACTIVE


def test_kinematics_needs_two_samples():
    tr = track_of([(0.5, 0.5)] * 3)
    with pytest.raises(ValueError, match="too short"):
        compute_kinematics(tr, QueryWindow(1, 1))


@pytest.mark.parametrize("speed,label", [(0.0, STATIONARY), (0.0199, STATIONARY), (0.02, SLOW),
                                         (0.0999, SLOW), (0.1, ACTIVE), (3.0, ACTIVE)])
def test_classify_motion(speed, label):
    assert classify_motion(speed) == label


@settings(max_examples=200)
@given(st.floats(0, 5), st.floats(0, 5))
def test_classify_motion_is_monotone(a, b):
    order = {STATIONARY: 0, SLOW: 1, ACTIVE: 2}
    lo, hi = sorted((a, b))
    assert order[classify_motion(lo)] <= order[classify_motion(hi)]


def test_thresholds_validated():
    with pytest.raises(ValueError):
        MotionThresholds(0.2, 0.1)


def test_semantic_blocks_split_on_change_and_gap():
    labels = [("grasp", "gallbladder")] * 3 + [("retract", "gallbladder")] * 2 + [(None, None)] * 2
    blocks = track_blocks(track_of([(0.5, 0.5)] * 7, labels))
    assert [(b.verb, b.t_start, b.t_end, b.n_samples) for b in blocks] == [
        ("grasp", 0, 2, 3), ("retract", 3, 4, 2), (None, 5, 6, 2)]
    assert blocks[2].is_null
    samples = [TrackSample(t, box_at(0.5, 0.5), "grasp", "liver") for t in (0.0, 1.0, 3.0)]
    assert len(group_semantic_blocks(samples, 1.0, "hook")) == 2


def test_trajectory_extreme_ties_take_earliest():
    tr = track_of([(0.5, 0.5), (0.2, 0.6), (0.2, 0.1), (0.7, 0.1)])
    w = tr.span
    assert trajectory_extreme(tr, w, "left")[0] == 1
    assert trajectory_extreme(tr, w, "right")[0] == 3
    assert trajectory_extreme(tr, w, "top")[0] == 2
    assert trajectory_extreme(tr, w, "bottom")[0] == 1
    with pytest.raises(ValueError):
        trajectory_extreme(tr, w, "up")


def test_window_validation():
    with pytest.raises(ValueError):
        QueryWindow(2.0, 1.0)
    assert QueryWindow(1.0, 1.0).contains(1.0)
