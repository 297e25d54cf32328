"""Articulated hand surrogate: one short serial chain per finger, all
rooted in a shared palm frame.

The palm frame is the one keypoint processing recovers from a skeleton:
origin at the wrist, x toward the middle-finger base, z along the palm
normal. In that frame both hands share the same finger layout (index on
the -y side, pinky on +y); chirality survives only as the curl
direction, so a left hand flexes toward +z and a right hand toward -z.
"""

from __future__ import annotations

import numpy as np
import yaml

from . import kinematics
from .chain import (Joint, JointVector, SerialChain, _check_format,
                    chain_from_dict)
from .errors import ConfigurationError, StructuralError
from .fusion import KEYPOINT_COUNT, KeypointSet
from .geometry import Pose, Rotation

FINGER_ORDER = ("thumb", "index", "middle", "ring", "pinky")


class HandModel:
    """Named finger chains sharing the palm frame; joint angles live in
    one flat vector ordered finger by finger."""

    def __init__(self, name: str, fingers: list[tuple[str, SerialChain]]):
        if not fingers:
            raise ConfigurationError("hand model %r has no fingers" % name)
        names = [f for f, _ in fingers]
        if len(set(names)) != len(names):
            raise ConfigurationError("hand model %r repeats a finger name" % name)
        self.name = name
        self.fingers = list(fingers)
        self.slices = []
        start = 0
        for _, chain in fingers:
            self.slices.append(slice(start, start + chain.n))
            start += chain.n
        self.dof = start
        self.lower = np.concatenate([c.lower for _, c in fingers])
        self.upper = np.concatenate([c.upper for _, c in fingers])

    def zeros(self) -> JointVector:
        return JointVector(self.name, np.zeros(self.dof))

    def joint_vector(self, angles) -> JointVector:
        return JointVector(self.name, np.asarray(angles, dtype=float))

    def clamp(self, angles: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(angles, self.lower), self.upper)

    def check(self, q: JointVector) -> np.ndarray:
        if q.chain != self.name:
            raise StructuralError(
                "joint vector tagged %r used with hand %r" % (q.chain, self.name))
        if q.angles.shape != (self.dof,):
            raise StructuralError(
                "hand %r expects %d angles, got %d" % (self.name, self.dof, len(q.angles)))
        if not np.all(np.isfinite(q.angles)):
            raise StructuralError("hand joint angles contain non-finite values")
        return q.angles

    def fingertip_vectors(self, q: JointVector) -> np.ndarray:
        """Palm-frame vector from the palm origin to each fingertip,
        (n_fingers, 3). This is the map the retargeting objective fits."""
        angles = self.check(q)
        out = np.zeros((len(self.fingers), 3))
        for i, (sl, (_, chain)) in enumerate(zip(self.slices, self.fingers)):
            pose = kinematics.forward_kinematics(chain, chain.joint_vector(angles[sl]))
            out[i] = pose.position
        return out

    def fingertip_jacobian(self, q: JointVector) -> np.ndarray:
        """d(fingertip vectors)/dq, (3 * n_fingers, dof), block diagonal
        because fingers share no joints."""
        angles = self.check(q)
        jac = np.zeros((3 * len(self.fingers), self.dof))
        for i, (sl, (_, chain)) in enumerate(zip(self.slices, self.fingers)):
            full = kinematics.geometric_jacobian(chain, chain.joint_vector(angles[sl]))
            jac[3 * i:3 * i + 3, sl] = full[:3]
        return jac

    def __repr__(self):
        return "HandModel(%r, %d fingers, %d dof)" % (
            self.name, len(self.fingers), self.dof)


def build_hand(side: str) -> HandModel:
    """Default 10-DOF hand: five fingers, two flexion joints each."""
    if side not in ("left", "right"):
        raise ConfigurationError("hand side must be 'left' or 'right'")
    curl = -1.0 if side == "left" else 1.0  # left curls toward +z
    ident = Rotation.identity()

    layout = [
        # name, base xyz, proximal len, distal len, limits
        ("thumb", (0.025, -0.030, 0.0), 0.035, 0.035, (-0.3, 1.5)),
        ("index", (0.085, -0.025, 0.0), 0.045, 0.040, (-0.3, 1.8)),
        ("middle", (0.090, 0.000, 0.0), 0.045, 0.045, (-0.3, 1.8)),
        ("ring", (0.085, 0.025, 0.0), 0.045, 0.040, (-0.3, 1.8)),
        ("pinky", (0.075, 0.050, 0.0), 0.035, 0.035, (-0.3, 1.8)),
    ]
    fingers = []
    for name, base, l1, l2, lim in layout:
        axis = np.array([0.0, curl, 0.0])
        joints = [
            Joint(name + "_mcp", axis, ident, np.zeros(3), lim[0], lim[1]),
            Joint(name + "_pip", axis, ident, np.array([l1, 0.0, 0.0]),
                  lim[0], lim[1]),
        ]
        chain = SerialChain(
            "%s_%s" % (side, name), joints,
            base=Pose(ident, np.array(base)),
            tip=Pose(ident, np.array([l2, 0.0, 0.0])))
        fingers.append((name, chain))
    return HandModel("hand_" + side, fingers)


def load_hands(path) -> dict[str, HandModel]:
    """Load hand models from a versioned YAML file, keyed by side."""
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    _check_format(doc, path)
    if "hands" not in doc:
        raise ConfigurationError("%s: no 'hands' section" % path)
    out = {}
    for side, spec in doc["hands"].items():
        fingers = []
        for fd in spec.get("fingers", []):
            chain = chain_from_dict("%s_%s" % (side, fd["name"]), fd)
            fingers.append((fd["name"], chain))
        out[side] = HandModel("hand_" + side, fingers)
    return out


def keypoints_from_angles(model: HandModel, q: JointVector,
                          scale: float = 1.5) -> KeypointSet:
    """Synthetic human skeleton, in canonical palm coordinates, whose
    retargeting solution is exactly ``q``.

    The human hand is the robot hand shrunk by ``scale``: every landmark
    is the corresponding robot point divided by ``scale``, so fingertip
    vectors times ``scale`` land exactly on the model's fingertip map.
    """
    if len(model.fingers) != len(FINGER_ORDER):
        raise ConfigurationError(
            "keypoint synthesis needs a five-finger model, got %d fingers"
            % len(model.fingers))
    angles = model.check(q)
    pts = np.zeros((KEYPOINT_COUNT, 3))
    idx = 1
    for sl, (_, chain) in zip(model.slices, model.fingers):
        qf = chain.joint_vector(angles[sl])
        origins = kinematics.joint_origins(chain, qf)
        tip = kinematics.forward_kinematics(chain, qf).position
        base = origins[0]
        pip = origins[1]
        mid = 0.5 * (pip + tip)
        for p in (base, pip, mid, tip):
            pts[idx] = p / scale
            idx += 1
    return KeypointSet(pts)
