"""Session log round-trip and parse error coverage."""

import numpy as np
import pytest

from biteleop.errors import (SessionParseError, StructuralError,
                             UnsupportedFormatError)
from biteleop.fusion import KEYPOINT_COUNT, CameraView, KeypointSet
from biteleop.geometry import Pose, Rotation
from biteleop.session import (CouplingToggle, KeypointFrame, PedalEdgeEvent,
                              PoseSample, SessionWriter, TemplateSelect,
                              parse_event, read_session, serialize_event,
                              write_session)


def random_events(rng, n=40):
    events = []
    t = 0.0
    for _ in range(n):
        t += float(rng.uniform(0, 0.2))
        kind = rng.integers(0, 5)
        side = ("left", "right")[rng.integers(0, 2)]
        if kind == 0:
            pose = Pose(Rotation.from_rotvec(rng.normal(size=3)),
                        rng.uniform(-1, 1, size=3))
            events.append(PoseSample(t, side, pose))
        elif kind == 1:
            events.append(PedalEdgeEvent(t, side, bool(rng.integers(0, 2))))
        elif kind == 2:
            views = []
            for cam, has in (("c1", True), ("c2", rng.integers(0, 2) == 0)):
                kp = KeypointSet(rng.uniform(-1, 1, size=(KEYPOINT_COUNT, 3))) \
                    if has else None
                axis = rng.normal(size=3)
                views.append(CameraView(cam, axis / np.linalg.norm(axis), kp))
            events.append(KeypointFrame(t, side, views[0], views[1]))
        elif kind == 3:
            events.append(TemplateSelect(t, side, "scalpel"))
        else:
            events.append(CouplingToggle(t))
    return events


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(42)
    events = random_events(rng)
    path = tmp_path / "s.txt"
    write_session(path, events)
    first = path.read_bytes()

    parsed = read_session(path)
    assert len(parsed) == len(events)
    write_session(path, parsed)
    assert path.read_bytes() == first


def test_round_trip_preserves_values(tmp_path):
    pose = Pose(Rotation.from_rotvec([0.1, -0.2, 0.3]),
                np.array([0.25, -0.125, 1.0 / 3.0]))
    path = tmp_path / "s.txt"
    write_session(path, [PoseSample(0.5, "left", pose)])
    (ev,) = read_session(path)
    assert ev.t == 0.5 and ev.side == "left"
    assert np.array_equal(ev.pose.position, pose.position)
    assert np.array_equal(ev.pose.rotation.q, pose.rotation.q)


def test_missing_header_rejected(tmp_path):
    path = tmp_path / "s.txt"
    path.write_text("0.0 coupling\n")
    with pytest.raises(UnsupportedFormatError):
        read_session(path)


def test_wrong_version_rejected(tmp_path):
    path = tmp_path / "s.txt"
    path.write_text("format: 2\n")
    with pytest.raises(UnsupportedFormatError):
        read_session(path)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "s.txt"
    path.write_text("")
    with pytest.raises(UnsupportedFormatError):
        read_session(path)


def test_header_only_is_empty_session(tmp_path):
    path = tmp_path / "s.txt"
    path.write_text("format: 1\n")
    assert read_session(path) == []


def test_comments_and_blanks_skipped(tmp_path):
    path = tmp_path / "s.txt"
    path.write_text("format: 1\n\n# note\n0.5 coupling\n")
    (ev,) = read_session(path)
    assert ev.kind == "coupling" and ev.t == 0.5


def test_parse_error_names_line(tmp_path):
    path = tmp_path / "s.txt"
    path.write_text("format: 1\n0.1 coupling\nnot-a-time pose\n")
    with pytest.raises(SessionParseError) as err:
        read_session(path)
    assert err.value.line_no == 3


def test_unknown_kind_rejected():
    with pytest.raises(SessionParseError):
        parse_event("0.0 warp side=left", 2)


def test_malformed_field_rejected():
    with pytest.raises(SessionParseError):
        parse_event("0.0 pose side=left p=1,2 q=1,0,0,0", 2)
    with pytest.raises(SessionParseError):
        parse_event("0.0 pose side=left novalue", 2)
    with pytest.raises(SessionParseError):
        parse_event("0.0 pedal pedal=left edge=sideways", 2)


def test_timestamp_decrease_rejected(tmp_path):
    path = tmp_path / "s.txt"
    path.write_text("format: 1\n1.0 coupling\n0.5 coupling\n")
    with pytest.raises(SessionParseError) as err:
        read_session(path)
    assert err.value.line_no == 3


def test_writer_rejects_time_reversal(tmp_path):
    with SessionWriter(tmp_path / "s.txt") as writer:
        writer.write(CouplingToggle(1.0))
        with pytest.raises(StructuralError):
            writer.write(CouplingToggle(0.5))


def test_keypoints_none_view_round_trips(tmp_path):
    v1 = CameraView("c1", [0, 0, 1],
                    KeypointSet(np.zeros((KEYPOINT_COUNT, 3))))
    v2 = CameraView("c2", [0, 1, 0], None)
    path = tmp_path / "s.txt"
    write_session(path, [KeypointFrame(0.0, "right", v1, v2)])
    (ev,) = read_session(path)
    assert ev.view2.keypoints is None
    assert serialize_event(ev) == serialize_event(KeypointFrame(0.0, "right", v1, v2))
