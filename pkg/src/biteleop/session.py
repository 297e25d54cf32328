"""Session logs: line-delimited operator event streams.

A session file starts with ``format: 1`` and then carries one event per
line, ``<timestamp> <kind> key=value ...``. Floats are written with
``repr`` so a parsed file serializes back byte for byte, which is what
makes replay bit-exact. Timestamps never decrease.

Event kinds: ``pose`` (tracker sample), ``pedal`` (edge), ``keypoints``
(two-camera frame), ``template`` (grip request), ``coupling`` (mode
toggle request).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SessionParseError, StructuralError, UnsupportedFormatError
from .fusion import KEYPOINT_COUNT, CameraView, KeypointSet
from .geometry import Pose, Rotation

SESSION_FORMAT = 1
HEADER = "format: 1"


@dataclass(frozen=True)
class PoseSample:
    t: float
    side: str
    pose: Pose
    kind = "pose"


@dataclass(frozen=True)
class PedalEdgeEvent:
    t: float
    pedal: str
    down: bool
    kind = "pedal"


@dataclass(frozen=True)
class KeypointFrame:
    t: float
    side: str
    view1: CameraView
    view2: CameraView
    kind = "keypoints"


@dataclass(frozen=True)
class TemplateSelect:
    t: float
    side: str
    name: str
    kind = "template"


@dataclass(frozen=True)
class CouplingToggle:
    t: float
    kind = "coupling"


def _floats(values) -> str:
    return ",".join(repr(float(v)) for v in np.asarray(values).ravel())


def _parse_floats(text: str, count: int, line_no: int) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != count:
        raise SessionParseError(line_no, "expected %d floats, got %d" % (count, len(parts)))
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise SessionParseError(line_no, "malformed float in %r" % text)


def _points_field(view: CameraView) -> str:
    if view.keypoints is None:
        return "none"
    return _floats(view.keypoints.points)


def serialize_event(event) -> str:
    t = repr(float(event.t))
    if event.kind == "pose":
        return "%s pose side=%s p=%s q=%s" % (
            t, event.side, _floats(event.pose.position), _floats(event.pose.rotation.q))
    if event.kind == "pedal":
        return "%s pedal pedal=%s edge=%s" % (
            t, event.pedal, "down" if event.down else "up")
    if event.kind == "keypoints":
        return "%s keypoints side=%s axis1=%s axis2=%s pts1=%s pts2=%s" % (
            t, event.side,
            _floats(event.view1.axis), _floats(event.view2.axis),
            _points_field(event.view1), _points_field(event.view2))
    if event.kind == "template":
        return "%s template side=%s name=%s" % (t, event.side, event.name)
    if event.kind == "coupling":
        return "%s coupling" % t
    raise StructuralError("cannot serialize event kind %r" % event.kind)


def _fields(tokens, line_no) -> dict:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise SessionParseError(line_no, "expected key=value, got %r" % tok)
        key, _, value = tok.partition("=")
        out[key] = value
    return out


def _require(fields, keys, line_no):
    for k in keys:
        if k not in fields:
            raise SessionParseError(line_no, "missing field %r" % k)


def parse_event(line: str, line_no: int):
    tokens = line.split()
    if len(tokens) < 2:
        raise SessionParseError(line_no, "truncated event line")
    try:
        t = float(tokens[0])
    except ValueError:
        raise SessionParseError(line_no, "bad timestamp %r" % tokens[0])
    kind = tokens[1]
    fields = _fields(tokens[2:], line_no)
    if kind == "pose":
        _require(fields, ("side", "p", "q"), line_no)
        pos = _parse_floats(fields["p"], 3, line_no)
        quat = _parse_floats(fields["q"], 4, line_no)
        return PoseSample(t, fields["side"], Pose(Rotation.from_quat(quat), pos))
    if kind == "pedal":
        _require(fields, ("pedal", "edge"), line_no)
        if fields["edge"] not in ("down", "up"):
            raise SessionParseError(line_no, "pedal edge must be down or up")
        return PedalEdgeEvent(t, fields["pedal"], fields["edge"] == "down")
    if kind == "keypoints":
        _require(fields, ("side", "axis1", "axis2", "pts1", "pts2"), line_no)
        views = []
        for cam, axis_key, pts_key in (("c1", "axis1", "pts1"), ("c2", "axis2", "pts2")):
            axis = _parse_floats(fields[axis_key], 3, line_no)
            pts = fields[pts_key]
            if pts == "none":
                kp = None
            else:
                kp = KeypointSet(_parse_floats(pts, KEYPOINT_COUNT * 3,
                                               line_no).reshape(KEYPOINT_COUNT, 3))
            try:
                views.append(CameraView(cam, axis, kp))
            except StructuralError as exc:
                raise SessionParseError(line_no, str(exc))
        return KeypointFrame(t, fields["side"], views[0], views[1])
    if kind == "template":
        _require(fields, ("side", "name"), line_no)
        return TemplateSelect(t, fields["side"], fields["name"])
    if kind == "coupling":
        return CouplingToggle(t)
    raise SessionParseError(line_no, "unknown event kind %r" % kind)


def read_session(path) -> list:
    """Parse a whole session file, enforcing the header and timestamp
    order."""
    events = []
    last_t = None
    with open(path) as fh:
        first = fh.readline()
        if not first:
            raise UnsupportedFormatError("%s: empty file, missing header" % path)
        if first.strip() != HEADER:
            raise UnsupportedFormatError(
                "%s: unsupported session header %r" % (path, first.strip()))
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            event = parse_event(line, line_no)
            if last_t is not None and event.t < last_t:
                raise SessionParseError(
                    line_no, "timestamp %r decreases (previous %r)" % (event.t, last_t))
            last_t = event.t
            events.append(event)
    return events


class SessionWriter:
    """Append-only session log writer."""

    def __init__(self, path):
        self._fh = open(path, "w")
        self._fh.write(HEADER + "\n")
        self._last_t = None

    def write(self, event) -> None:
        if self._last_t is not None and event.t < self._last_t:
            raise StructuralError(
                "event timestamp %r decreases (previous %r)" % (event.t, self._last_t))
        self._last_t = event.t
        self._fh.write(serialize_event(event) + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_session(path, events) -> None:
    with SessionWriter(path) as writer:
        for event in events:
            writer.write(event)
