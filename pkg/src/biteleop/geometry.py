"""Rigid-body math: unit quaternion rotations and world-frame poses.

Conventions
-----------
Quaternions are stored (w, x, y, z), Hamilton product, and canonicalized
so w >= 0 (the double cover collapses to one representative). Composing
``a * b`` rotates by ``b`` first, then ``a``, i.e. matrices satisfy
``(a * b).matrix() == a.matrix() @ b.matrix()``.

Poses map local coordinates into the world frame:
``world = rotation.apply(local) + position``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import StructuralError

_NORM_TOL = 1e-9


def _canonical(q: np.ndarray) -> np.ndarray:
    n = math.sqrt(float(q @ q))
    if n == 0.0 or not math.isfinite(n):
        raise StructuralError("cannot normalize zero or non-finite quaternion")
    q = q / n
    if q[0] < 0.0:
        q = -q
    return q


class Rotation:
    """A 3-D rotation held as a canonical unit quaternion."""

    __slots__ = ("q",)

    def __init__(self, w, x, y, z):
        self.q = _canonical(np.array([w, x, y, z], dtype=float))

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_quat(cls, q) -> "Rotation":
        q = np.asarray(q, dtype=float)
        if q.shape != (4,):
            raise StructuralError("quaternion must have 4 components")
        return cls(q[0], q[1], q[2], q[3])

    @classmethod
    def from_axis_angle(cls, axis, angle: float) -> "Rotation":
        axis = np.asarray(axis, dtype=float)
        n = float(np.linalg.norm(axis))
        if n < 1e-12:
            raise StructuralError("rotation axis has zero length")
        half = 0.5 * float(angle)
        s = math.sin(half) / n
        return cls(math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s)

    @classmethod
    def from_rotvec(cls, rv) -> "Rotation":
        """Exponential map: rv = axis * angle, radians."""
        rv = np.asarray(rv, dtype=float)
        angle = float(np.linalg.norm(rv))
        if angle < 1e-12:
            # first-order quaternion, renormalized by the constructor
            return cls(1.0, 0.5 * rv[0], 0.5 * rv[1], 0.5 * rv[2])
        return cls.from_axis_angle(rv, angle)

    @classmethod
    def from_matrix(cls, m) -> "Rotation":
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 3):
            raise StructuralError("rotation matrix must be 3x3")
        t = m[0, 0] + m[1, 1] + m[2, 2]
        if t > 0.0:
            s = math.sqrt(t + 1.0) * 2.0
            w = 0.25 * s
            x = (m[2, 1] - m[1, 2]) / s
            y = (m[0, 2] - m[2, 0]) / s
            z = (m[1, 0] - m[0, 1]) / s
        elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
            s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
            w = (m[2, 1] - m[1, 2]) / s
            x = 0.25 * s
            y = (m[0, 1] + m[1, 0]) / s
            z = (m[0, 2] + m[2, 0]) / s
        elif m[1, 1] > m[2, 2]:
            s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
            w = (m[0, 2] - m[2, 0]) / s
            x = (m[0, 1] + m[1, 0]) / s
            y = 0.25 * s
            z = (m[1, 2] + m[2, 1]) / s
        else:
            s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
            w = (m[1, 0] - m[0, 1]) / s
            x = (m[0, 2] + m[2, 0]) / s
            y = (m[1, 2] + m[2, 1]) / s
            z = 0.25 * s
        return cls(w, x, y, z)

    def __mul__(self, other: "Rotation") -> "Rotation":
        a, b = self.q, other.q
        return Rotation(
            a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
            a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
            a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
            a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
        )

    def inverse(self) -> "Rotation":
        w, x, y, z = self.q
        return Rotation(w, -x, -y, -z)

    def apply(self, v) -> np.ndarray:
        """Rotate a 3-vector (or an (n, 3) stack of them)."""
        v = np.asarray(v, dtype=float)
        w = self.q[0]
        u = self.q[1:]
        uv = np.cross(u, v)
        return v + 2.0 * (w * uv + np.cross(u, uv))

    def matrix(self) -> np.ndarray:
        w, x, y, z = self.q
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def rotvec(self) -> np.ndarray:
        """Logarithm map: axis * angle, with angle in [0, pi]."""
        w = min(1.0, max(-1.0, float(self.q[0])))
        v = self.q[1:]
        s = float(np.linalg.norm(v))
        if s < 1e-12:
            return 2.0 * v  # small-angle limit
        angle = 2.0 * math.atan2(s, w)
        return (angle / s) * v

    def angle_to(self, other: "Rotation") -> float:
        return float(np.linalg.norm((self.inverse() * other).rotvec()))

    def norm_error(self) -> float:
        return abs(float(np.linalg.norm(self.q)) - 1.0)

    def __repr__(self):
        return "Rotation(w=%.9g, x=%.9g, y=%.9g, z=%.9g)" % tuple(self.q)


class Pose:
    """Rigid transform: rotation plus position, meters, world frame."""

    __slots__ = ("rotation", "position")

    def __init__(self, rotation: Rotation, position):
        position = np.asarray(position, dtype=float)
        if position.shape != (3,):
            raise StructuralError("position must be a 3-vector")
        if not np.all(np.isfinite(position)):
            raise StructuralError("position has non-finite components")
        self.rotation = rotation
        self.position = position

    @classmethod
    def identity(cls) -> "Pose":
        return cls(Rotation.identity(), np.zeros(3))

    def compose(self, other: "Pose") -> "Pose":
        return Pose(
            self.rotation * other.rotation,
            self.position + self.rotation.apply(other.position),
        )

    def __mul__(self, other: "Pose") -> "Pose":
        return self.compose(other)

    def inverse(self) -> "Pose":
        rinv = self.rotation.inverse()
        return Pose(rinv, -rinv.apply(self.position))

    def apply(self, point) -> np.ndarray:
        return self.rotation.apply(point) + self.position

    def copy(self) -> "Pose":
        return Pose(Rotation.from_quat(self.rotation.q), self.position.copy())

    def __repr__(self):
        return "Pose(p=%s, q=%s)" % (
            np.array2string(self.position, precision=6),
            np.array2string(self.rotation.q, precision=6),
        )


def pose_error(target: Pose, current: Pose) -> np.ndarray:
    """World-frame twist error (dp; rotation log) bringing current to target."""
    dp = target.position - current.position
    drot = (target.rotation * current.rotation.inverse()).rotvec()
    return np.concatenate([dp, drot])
