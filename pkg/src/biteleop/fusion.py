"""Two-camera hand keypoint fusion.

Each virtual camera reports a 21-point hand skeleton (wrist plus four
points per finger). A camera looking square at the palm is trusted more
than one at a grazing angle: per-camera weights are the cosines between
each optical axis and the palm normal, normalized to sum to one, and the
fused skeleton is the weighted average. One missing detection falls back
to the other view unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateGeometryError, NoDetectionError,
                     NoReliableViewError, StructuralError)

KEYPOINT_COUNT = 21

# skeleton layout: wrist, then 4 points per finger, base to tip
WRIST = 0
THUMB = (1, 2, 3, 4)
INDEX = (5, 6, 7, 8)
MIDDLE = (9, 10, 11, 12)
RING = (13, 14, 15, 16)
PINKY = (17, 18, 19, 20)
FINGERS = (THUMB, INDEX, MIDDLE, RING, PINKY)
TIPS = (4, 8, 12, 16, 20)
INDEX_BASE = 5
MIDDLE_BASE = 9
PINKY_BASE = 17

_UNIT_TOL = 1e-9


class KeypointSet:
    """21 labeled hand points, meters, world frame."""

    __slots__ = ("points",)

    def __init__(self, points):
        points = np.asarray(points, dtype=float)
        if points.shape != (KEYPOINT_COUNT, 3):
            raise StructuralError(
                "keypoint set must be %d x 3, got %s" % (KEYPOINT_COUNT, points.shape))
        if not np.all(np.isfinite(points)):
            raise StructuralError("keypoint set has non-finite points")
        self.points = points

    def copy(self) -> "KeypointSet":
        return KeypointSet(self.points.copy())

    def __repr__(self):
        return "KeypointSet(wrist=%s)" % np.array2string(self.points[WRIST], precision=4)


@dataclass
class CameraView:
    """One camera's report: identity, optical axis, and keypoints if the
    detector fired this frame."""

    camera: str
    axis: np.ndarray
    keypoints: KeypointSet | None = None

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        if self.axis.shape != (3,):
            raise StructuralError("optical axis must be a 3-vector")
        if abs(float(np.linalg.norm(self.axis)) - 1.0) > _UNIT_TOL:
            raise StructuralError(
                "optical axis of %r is not unit length" % self.camera)


def palm_normal(k: KeypointSet) -> np.ndarray:
    """Unit normal of the palm plane spanned by wrist, index base, and
    pinky base."""
    w = k.points[WRIST]
    n = np.cross(k.points[INDEX_BASE] - w, k.points[PINKY_BASE] - w)
    norm = float(np.linalg.norm(n))
    if norm < 1e-12:
        raise DegenerateGeometryError(
            "wrist, index base, and pinky base are collinear")
    return n / norm


def reliability_weights(view1: CameraView, view2: CameraView,
                        normal) -> tuple[float, float]:
    """Per-view weights proportional to |optical axis . palm normal|.

    Sign is dropped on purpose: a camera behind the palm still sees the
    hand at the same grazing angle.
    """
    normal = np.asarray(normal, dtype=float)
    c1 = abs(float(view1.axis @ normal))
    c2 = abs(float(view2.axis @ normal))
    if c1 <= 1e-6 and c2 <= 1e-6:
        raise NoReliableViewError(
            "both cameras view the palm edge-on (cosines %.2g, %.2g)" % (c1, c2))
    total = c1 + c2
    return c1 / total, c2 / total


def fuse(view1: CameraView, view2: CameraView) -> KeypointSet:
    """Weighted average of both views' keypoints; single-view passthrough
    when one detector missed.

    The palm normal that sets the weights comes from the midpoint
    skeleton, so swapping the argument order changes nothing.
    """
    if view1.keypoints is None and view2.keypoints is None:
        raise NoDetectionError("no camera detected the hand")
    if view2.keypoints is None:
        return view1.keypoints.copy()
    if view1.keypoints is None:
        return view2.keypoints.copy()
    p1 = view1.keypoints.points
    p2 = view2.keypoints.points
    midpoint = KeypointSet(0.5 * (p1 + p2))
    rho1, rho2 = reliability_weights(view1, view2, palm_normal(midpoint))
    return KeypointSet(rho1 * p1 + rho2 * p2)
