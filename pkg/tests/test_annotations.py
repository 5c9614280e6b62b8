"""Annotation log semantics against the naive oracle, plus eraser geometry."""

import random

import pytest

from svrs import annotations as ann
from svrs import events as ev
from svrs.model import StreamKind

from .oracles import (
    assert_states_agree,
    oracle_erase_hits,
    random_valid_events,
    sampled_min_distance,
    shape_outline,
)

SITE = StreamKind.Site
VITALS = StreamKind.Vitals


def fold(events, state=None, collect_effects=False):
    state = state or ann.empty_state()
    effects = []
    for e in events:
        state, eff = ann.apply(state, e)
        effects.extend(eff)
    return (state, effects) if collect_effects else state


def seq_events(*events):
    """Stamp a list of raw events with contiguous seq/ts."""
    out = []
    for i, e in enumerate(events):
        frame_seq = 100 + i if hasattr(e, "frame_seq") else None
        out.append(ev.stamp(e, i, (i + 1) * 1000, frame_seq=frame_seq))
    return out


def zoomed_site():
    return seq_events(ev.ZoomIn(stream=SITE))


def test_begin_shape_pauses_playing_stream():
    events = seq_events(
        ev.ZoomIn(stream=SITE),
        ev.BeginShape(stream=SITE, tool=ev.Tool.Pencil, point=(0.5, 0.5)),
    )
    state, effects = fold(events, collect_effects=True)
    ss = state.stream(SITE)
    assert ss.playback == ann.Paused(at_seq=101)
    assert ss.open_shape is not None
    assert effects == [ann.Pause(stream=SITE, at_seq=101)]


def test_add_add_undo_add_redo_sequence():
    def shape(x):
        return [
            ev.BeginShape(stream=SITE, tool=ev.Tool.Pencil, point=(x, x)),
            ev.ExtendShape(stream=SITE, point=(x, ev.quantize(x + 0.1))),
            ev.EndShape(stream=SITE),
        ]

    events = seq_events(
        ev.ZoomIn(stream=SITE), *shape(0.1), *shape(0.2), ev.Undo(stream=SITE)
    )
    state = fold(events)
    visible = state.stream(SITE).visible
    assert [s.id for s in visible] == [0]  # only A remains
    # add C, then Redo must be invalid and leave state unchanged
    more = seq_events(*shape(0.3))
    for i, e in enumerate(more):
        state, _ = ann.apply(state, ev.stamp(e, state.last_seq + 1, 99_000 + i))
    assert [s.id for s in state.stream(SITE).visible] == [0, 2]
    with pytest.raises(ann.InvalidInContext):
        ann.apply(state, ev.stamp(ev.Redo(stream=SITE), state.last_seq + 1, 100_000))
    assert [s.id for s in state.stream(SITE).visible] == [0, 2]


def test_undo_on_empty_stack_is_invalid_and_harmless():
    state = fold(zoomed_site())
    before = state
    with pytest.raises(ann.InvalidInContext):
        ann.apply(state, ev.stamp(ev.Undo(stream=SITE), 1, 2000))
    assert state == before


def test_seq_gap_is_out_of_order():
    state = fold(zoomed_site())
    with pytest.raises(ann.OutOfOrderEvent):
        ann.apply(state, ev.stamp(ev.Undo(stream=SITE), 5, 2000))


def test_extend_without_open_shape():
    state = fold(zoomed_site())
    with pytest.raises(ann.InvalidInContext):
        ann.apply(state, ev.stamp(ev.ExtendShape(stream=SITE, point=(0.5, 0.5)), 1, 2000))


def test_drawing_requires_zoom():
    with pytest.raises(ann.InvalidInContext):
        fold(seq_events(ev.BeginShape(stream=SITE, tool=ev.Tool.Arrow, point=(0.5, 0.5))))


def test_zoom_exclusivity_and_switch():
    state = fold(seq_events(ev.ZoomIn(stream=SITE), ev.ZoomIn(stream=VITALS)))
    assert state.zoomed == VITALS
    with pytest.raises(ann.InvalidInContext):
        ann.apply(state, ev.stamp(ev.ZoomOut(stream=SITE), 2, 9000))


def test_playpause_takes_screenshot_both_ways():
    events = seq_events(
        ev.ZoomIn(stream=SITE),
        ev.PlayPauseScreenshot(stream=SITE),  # pause at frame 101
        ev.PlayPauseScreenshot(stream=SITE),  # resume, shot of frame 101
    )
    state, effects = fold(events, collect_effects=True)
    shots = [e.shot for e in effects if isinstance(e, ann.CaptureScreenshot)]
    assert [s.id for s in shots] == [0, 1]
    assert shots[0].frame_seq == 101
    assert shots[1].frame_seq == 101  # the frame that was showing while paused
    assert isinstance(state.stream(SITE).playback, ann.Playing)
    pauses = [e for e in effects if isinstance(e, ann.Pause)]
    resumes = [e for e in effects if isinstance(e, ann.Resume)]
    assert len(pauses) == 1 and len(resumes) == 1


def test_no_playback_toggle_while_drawing():
    events = seq_events(
        ev.ZoomIn(stream=SITE),
        ev.BeginShape(stream=SITE, tool=ev.Tool.Pencil, point=(0.4, 0.4)),
    )
    state = fold(events)
    with pytest.raises(ann.InvalidInContext):
        ann.apply(state, ev.stamp(ev.PlayPauseScreenshot(stream=SITE), 2, 9000))


def test_erase_whole_shapes_one_undoable_action():
    events = seq_events(
        ev.ZoomIn(stream=SITE),
        ev.BeginShape(stream=SITE, tool=ev.Tool.Pencil, point=(0.2, 0.2)),
        ev.ExtendShape(stream=SITE, point=(0.3, 0.2)),
        ev.EndShape(stream=SITE),
        ev.BeginShape(stream=SITE, tool=ev.Tool.Pencil, point=(0.8, 0.8)),
        ev.ExtendShape(stream=SITE, point=(0.9, 0.8)),
        ev.EndShape(stream=SITE),
        ev.Erase(stream=SITE, path=((0.25, 0.21),), radius=0.05),
        ev.Undo(stream=SITE),
    )
    state = fold(events[:-1])
    assert [s.id for s in state.stream(SITE).visible] == [1]
    state, _ = ann.apply(state, events[-1])
    assert [s.id for s in state.stream(SITE).visible] == [0, 1]  # original position


def test_erase_miss_does_not_clear_redo():
    events = seq_events(
        ev.ZoomIn(stream=SITE),
        ev.BeginShape(stream=SITE, tool=ev.Tool.Pencil, point=(0.2, 0.2)),
        ev.ExtendShape(stream=SITE, point=(0.3, 0.2)),
        ev.EndShape(stream=SITE),
        ev.Undo(stream=SITE),
        ev.Erase(stream=SITE, path=((0.9, 0.9),), radius=0.01),  # far away
        ev.Redo(stream=SITE),
    )
    state = fold(events)
    assert [s.id for s in state.stream(SITE).visible] == [0]


def test_rebuild_empty():
    assert ann.rebuild([]) == ann.empty_state()


def test_rebuild_equals_live_fold_and_oracle():
    rng = random.Random(7)
    for _ in range(300):
        events, naive = random_valid_events(rng, max_len=40)
        live = fold(events)
        batch = ann.rebuild(events)
        assert live == batch
        assert_states_agree(batch, naive)


def test_undo_soundness_and_redo_clearing_on_every_transition():
    rng = random.Random(99)
    for _ in range(120):
        events, _ = random_valid_events(rng, max_len=40)
        state = ann.empty_state()
        for e in events:
            prev = state
            state, _ = ann.apply(state, e)
            ss = state.stream(e.stream)
            prev_ss = prev.stream(e.stream)
            if len(ss.undo_stack) > len(prev_ss.undo_stack) and not isinstance(e, ev.Redo):
                # a fresh reversible action must leave redo empty and be undoable
                assert ss.redo_stack == ()
                undone, _ = ann.apply(
                    state, ev.stamp(ev.Undo(stream=e.stream), state.last_seq + 1, 10**9)
                )
                assert undone.stream(e.stream).visible == prev_ss.visible
            if ss.open_shape is not None:
                assert isinstance(ss.playback, ann.Paused)
            zoomed = [
                k
                for k in (SITE, VITALS)
                if state.zoomed == k
            ]
            assert len(zoomed) <= 1


def test_screenshot_integrity_frame_seq_bounded():
    rng = random.Random(5)
    for _ in range(100):
        events, naive = random_valid_events(rng, max_len=30)
        _, effects = fold(events, collect_effects=True)
        latest = {}
        for e in events:
            fs = getattr(e, "frame_seq", None)
            if fs is not None:
                latest[e.stream] = max(latest.get(e.stream, -1), fs)
        for eff in effects:
            if isinstance(eff, ann.CaptureScreenshot) and eff.shot.frame_seq is not None:
                assert eff.shot.frame_seq <= latest[eff.shot.stream]


def test_fold_effects_match_oracle_effects():
    rng = random.Random(31)
    for _ in range(100):
        events, naive = random_valid_events(rng, max_len=30)
        _, effects = fold(events, collect_effects=True)
        flat = []
        for eff in effects:
            if isinstance(eff, ann.Pause):
                flat.append(("pause", eff.stream, eff.at_seq))
            elif isinstance(eff, ann.Resume):
                flat.append(("resume", eff.stream))
            else:
                flat.append(("shot", eff.shot.id, eff.shot.stream, eff.shot.frame_seq))
        assert flat == naive.effects


# ---------------------------------------------------------------------------
# Eraser geometry


def _mkshape(sid, tool, pts, width=0.002):
    return ann.Shape(id=sid, tool=tool, points=tuple(pts), color=(0, 0, 0, 255), width=width)


def test_hit_far_path_hits_nothing():
    shapes = [_mkshape(0, ev.Tool.Pencil, [(0.1, 0.1), (0.2, 0.1)])]
    assert ann.hit_test_erase(shapes, [(0.9, 0.9)], 0.05) == []


def test_hit_shared_point_hits_both():
    shapes = [
        _mkshape(0, ev.Tool.Pencil, [(0.1, 0.5), (0.5, 0.5)]),
        _mkshape(1, ev.Tool.Pencil, [(0.5, 0.5), (0.9, 0.5)]),
    ]
    assert ann.hit_test_erase(shapes, [(0.5, 0.5)], 0.01) == [0, 1]


def test_hit_crossing_counts_as_zero_distance():
    shapes = [_mkshape(0, ev.Tool.Pencil, [(0.0, 0.0), (1.0, 1.0)])]
    path = [(1.0, 0.0), (0.0, 1.0)]
    assert ann.hit_test_erase(shapes, path, 0.001) == [0]


def random_case(rng):
    shapes = []
    for sid in range(rng.randrange(1, 4)):
        tool = rng.choice(list(ev.Tool))
        cx, cy = rng.uniform(0.15, 0.85), rng.uniform(0.15, 0.85)
        ext = rng.uniform(0.02, 0.15)
        if tool is ev.Tool.Pencil:
            pts = [
                (
                    round(min(1.0, max(0.0, cx + rng.uniform(-ext, ext))), 6),
                    round(min(1.0, max(0.0, cy + rng.uniform(-ext, ext))), 6),
                )
                for _ in range(rng.randrange(2, 7))
            ]
        else:
            pts = [
                (round(cx - ext / 2, 6), round(cy - ext / 2, 6)),
                (round(cx + ext / 2, 6), round(cy + ext / 2, 6)),
            ]
        shapes.append(_mkshape(sid, tool, pts))
    path = [
        (round(rng.uniform(0.05, 0.95), 6), round(rng.uniform(0.05, 0.95), 6))
        for _ in range(rng.randrange(1, 4))
    ]
    radius = round(rng.uniform(0.01, 0.1), 6)
    return shapes, path, radius


def generate_offband_case(rng, band=3e-4):
    """A random case where no shape's sampled distance sits near the radius."""
    while True:
        shapes, path, radius = random_case(rng)
        if all(
            abs(sampled_min_distance(shape_outline(sh), path) - radius) > band
            for sh in shapes
        ):
            return shapes, path, radius


def test_hit_test_matches_dense_sampling_oracle_100():
    rng = random.Random(424242)
    for _ in range(100):
        shapes, path, radius = generate_offband_case(rng)
        assert ann.hit_test_erase(shapes, path, radius) == oracle_erase_hits(
            shapes, path, radius
        )
