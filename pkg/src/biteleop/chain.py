"""Serial-chain description and the versioned chain-definition file.

A chain is a list of revolute joints. Each joint carries a fixed
parent-to-joint transform, a unit rotation axis in its own frame, limits,
and the mass/center of the link that moves with it. A fixed tip transform
maps the last joint frame to the end-effector frame.

Chain files are YAML with a ``format: 1`` header::

    format: 1
    chains:
      left:
        base: {xyz: [0.0, 0.22, 0.0], rpy: [0, 0, 0]}
        tip: {xyz: [0, 0, -0.08], rpy: [0, 0, 0]}
        home: {xyz: [0.0, 0.22, -0.65], wxyz: [1, 0, 0, 0]}
        joints:
          - {name: shoulder_pitch, axis: [0, 1, 0], xyz: [0, 0, 0],
             rpy: [0, 0, 0], limits: [-2.9, 2.9], mass: 0.0, com: [0, 0, 0]}
          ...

The ``home`` entry documents the end-effector pose at all-zero angles and
is validated on load.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ConfigurationError, StructuralError, UnsupportedFormatError
from .geometry import Pose, Rotation

CHAIN_FORMAT = 1


@dataclass(frozen=True)
class Joint:
    name: str
    axis: np.ndarray          # unit, joint frame
    origin_rot: Rotation      # fixed parent-to-joint rotation
    origin_xyz: np.ndarray    # fixed parent-to-joint translation, m
    lower: float              # rad
    upper: float              # rad
    mass: float = 0.0         # kg, link distal to this joint
    com: np.ndarray = field(default_factory=lambda: np.zeros(3))  # m, joint frame


class SerialChain:
    """Revolute chain with precomputed flat arrays for the kernels."""

    def __init__(self, name: str, joints: list[Joint], base: Pose | None = None,
                 tip: Pose | None = None, home: Pose | None = None):
        if not joints:
            raise ConfigurationError("chain %r has no joints" % name)
        for j in joints:
            if not j.lower < j.upper:
                raise ConfigurationError(
                    "joint %r limits must satisfy lower < upper" % j.name)
        self.name = name
        self.joints = list(joints)
        self.base = base if base is not None else Pose.identity()
        self.tip = tip if tip is not None else Pose.identity()

        n = len(joints)
        self.n = n
        axes = np.array([j.axis for j in joints], dtype=float)
        norms = np.linalg.norm(axes, axis=1)
        if np.any(norms < 1e-12):
            raise ConfigurationError("chain %r has a zero-length joint axis" % name)
        self.axes = np.ascontiguousarray(axes / norms[:, None])
        self.org_q = np.ascontiguousarray([j.origin_rot.q for j in joints], dtype=float)
        self.org_t = np.ascontiguousarray([j.origin_xyz for j in joints], dtype=float)
        self.coms = np.ascontiguousarray([j.com for j in joints], dtype=float)
        self.masses = np.ascontiguousarray([j.mass for j in joints], dtype=float)
        self.base_q = np.ascontiguousarray(self.base.rotation.q, dtype=float)
        self.base_t = np.ascontiguousarray(self.base.position, dtype=float)
        self.tip_q = np.ascontiguousarray(self.tip.rotation.q, dtype=float)
        self.tip_t = np.ascontiguousarray(self.tip.position, dtype=float)
        self.lower = np.array([j.lower for j in joints])
        self.upper = np.array([j.upper for j in joints])
        self.home = home

    def zeros(self) -> "JointVector":
        return JointVector(self.name, np.zeros(self.n))

    def clamp(self, angles: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(angles, self.lower), self.upper)

    def joint_vector(self, angles) -> "JointVector":
        return JointVector(self.name, np.asarray(angles, dtype=float))

    def check(self, q: "JointVector") -> np.ndarray:
        if q.chain != self.name:
            raise StructuralError(
                "joint vector tagged %r used with chain %r" % (q.chain, self.name))
        if q.angles.shape != (self.n,):
            raise StructuralError(
                "chain %r expects %d angles, got %d" % (self.name, self.n, len(q.angles)))
        if not np.all(np.isfinite(q.angles)):
            raise StructuralError("joint angles contain non-finite values")
        return q.angles

    def __repr__(self):
        return "SerialChain(%r, %d joints)" % (self.name, self.n)


@dataclass
class JointVector:
    """Ordered joint angles tagged with the chain they belong to."""

    chain: str
    angles: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float)

    def copy(self) -> "JointVector":
        return JointVector(self.chain, self.angles.copy())


def _rpy_rotation(rpy) -> Rotation:
    r, p, y = [float(v) for v in rpy]
    return (
        Rotation.from_axis_angle([0, 0, 1], y)
        * Rotation.from_axis_angle([0, 1, 0], p)
        * Rotation.from_axis_angle([1, 0, 0], r)
    )


def _pose_entry(entry) -> Pose:
    xyz = np.array(entry.get("xyz", [0.0, 0.0, 0.0]), dtype=float)
    if "wxyz" in entry:
        rot = Rotation.from_quat(entry["wxyz"])
    else:
        rot = _rpy_rotation(entry.get("rpy", [0.0, 0.0, 0.0]))
    return Pose(rot, xyz)


def _check_format(doc, path, expected=CHAIN_FORMAT):
    if not isinstance(doc, dict) or "format" not in doc:
        raise UnsupportedFormatError("%s: missing 'format' header" % path)
    if doc["format"] != expected:
        raise UnsupportedFormatError(
            "%s: format %r not supported (expected %d)" % (path, doc["format"], expected))


def chain_from_dict(name: str, spec: dict) -> SerialChain:
    joints = []
    for jd in spec.get("joints", []):
        joints.append(Joint(
            name=jd["name"],
            axis=np.array(jd["axis"], dtype=float),
            origin_rot=_rpy_rotation(jd.get("rpy", [0, 0, 0])),
            origin_xyz=np.array(jd.get("xyz", [0, 0, 0]), dtype=float),
            lower=float(jd["limits"][0]),
            upper=float(jd["limits"][1]),
            mass=float(jd.get("mass", 0.0)),
            com=np.array(jd.get("com", [0, 0, 0]), dtype=float),
        ))
    base = _pose_entry(spec["base"]) if "base" in spec else None
    tip = _pose_entry(spec["tip"]) if "tip" in spec else None
    home = _pose_entry(spec["home"]) if "home" in spec else None
    return SerialChain(name, joints, base=base, tip=tip, home=home)


def load_chains(path) -> dict[str, SerialChain]:
    """Load every chain in a chain-definition file, keyed by name."""
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    _check_format(doc, path)
    if "chains" not in doc:
        raise ConfigurationError("%s: no 'chains' section" % path)
    out = {}
    for name, spec in doc["chains"].items():
        chain = chain_from_dict(name, spec)
        if chain.home is not None:
            _validate_home(chain, path)
        out[name] = chain
    return out


def _validate_home(chain: SerialChain, path) -> None:
    from . import kinematics

    pose = kinematics.forward_kinematics(chain, chain.zeros())
    dp = float(np.linalg.norm(pose.position - chain.home.position))
    dr = pose.rotation.angle_to(chain.home.rotation)
    if dp > 1e-9 or dr > 1e-9:
        raise ConfigurationError(
            "%s: chain %r home pose does not match FK at zero "
            "(dp=%.3g m, dr=%.3g rad)" % (path, chain.name, dp, dr))


def build_arm(side: str) -> SerialChain:
    """Default 7-DOF anthropomorphic arm (shoulder 3R, elbow, wrist 3R).

    Shoulders sit 0.22 m to either side of the torso origin; the arm
    hangs straight down at zero angles with a 0.65 m reach.
    """
    sy = 0.22 if side == "left" else -0.22
    ident = Rotation.identity()
    zero3 = np.zeros(3)

    def j(name, axis, xyz, limits, mass=0.0, com=(0, 0, 0)):
        return Joint(name, np.array(axis, float), ident, np.array(xyz, float),
                     limits[0], limits[1], mass, np.array(com, float))

    joints = [
        j("shoulder_pitch", [0, 1, 0], zero3, (-2.9, 2.9)),
        j("shoulder_roll", [1, 0, 0], zero3, (-2.2, 2.2)),
        j("shoulder_yaw", [0, 0, 1], zero3, (-2.9, 2.9), mass=1.1, com=(0, 0, -0.15)),
        j("elbow_pitch", [0, 1, 0], [0, 0, -0.30], (-0.2, 2.4), mass=0.9, com=(0, 0, -0.13)),
        j("wrist_roll", [0, 0, 1], [0, 0, -0.27], (-2.9, 2.9), mass=0.2, com=(0, 0, -0.02)),
        j("wrist_pitch", [0, 1, 0], zero3, (-1.6, 1.6), mass=0.15, com=(0, 0, -0.02)),
        j("wrist_yaw", [1, 0, 0], zero3, (-1.6, 1.6), mass=0.45, com=(0, 0, -0.06)),
    ]
    base = Pose(ident, np.array([0.0, sy, 0.0]))
    tip = Pose(ident, np.array([0.0, 0.0, -0.08]))
    home = Pose(ident, np.array([0.0, sy, -0.65]))
    return SerialChain("arm_" + side, joints, base=base, tip=tip, home=home)
