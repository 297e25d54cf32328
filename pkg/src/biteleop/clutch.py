"""Operator-side clutching: pedals engage and release per-arm clutches,
and released arms map incremental hand motion onto the end effector.

Convention: while a clutch pedal is held the commanded pose is frozen at
the pose saved on press, and the operator repositions freely. On release
the hand anchor is reset to wherever the hand is, so only motion after
the release moves the arm. Increments compose on the saved poses:

    R_cmd = R_EE,saved (R_H,saved^-1 R_H)
    p_cmd = p_EE,saved + gain (p_H - p_H,saved)
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, NotInitializedError, StructuralError
from .geometry import Pose

SIDES = ("left", "right")

PEDAL_ACTIONS = ("clutch-left", "clutch-right", "clutch-both", "toggle-coupling")


@dataclass(frozen=True)
class PedalConfig:
    """What each physical pedal does when pressed."""

    left: str = "clutch-left"
    right: str = "clutch-right"

    def __post_init__(self):
        for pedal, action in (("left", self.left), ("right", self.right)):
            if action not in PEDAL_ACTIONS:
                raise ConfigurationError(
                    "pedal %r mapped to unknown action %r" % (pedal, action))

    def action(self, pedal: str) -> str:
        if pedal == "left":
            return self.left
        if pedal == "right":
            return self.right
        raise StructuralError("unknown pedal %r" % pedal)

    def arms_for(self, pedal: str) -> tuple:
        act = self.action(pedal)
        if act == "clutch-left":
            return ("left",)
        if act == "clutch-right":
            return ("right",)
        if act == "clutch-both":
            return SIDES
        return ()


@dataclass(frozen=True)
class PedalEdge:
    pedal: str  # "left" or "right"
    down: bool


@dataclass(frozen=True)
class ArmClutch:
    """One arm's clutch bookkeeping. Saved poses exist exactly when the
    arm has been clutched at least once."""

    engaged: bool = False
    saved_hand: Pose | None = None
    saved_ee: Pose | None = None


@dataclass(frozen=True)
class ClutchState:
    arms: dict = field(default_factory=lambda: {s: ArmClutch() for s in SIDES})
    coupling_on: bool = False

    def arm(self, side: str) -> ArmClutch:
        if side not in self.arms:
            raise StructuralError("unknown arm side %r" % side)
        return self.arms[side]


def on_pedal(state: ClutchState, config: PedalConfig, edge: PedalEdge,
             hands: dict, ees: dict) -> ClutchState:
    """Apply one pedal edge.

    ``hands`` and ``ees`` give each side's current hand and end-effector
    pose; only the sides the pedal controls are read. Engaging twice
    without a release changes nothing; a release re-anchors the hand
    snapshot at the current hand pose so held motion is discarded.
    """
    action = config.action(edge.pedal)
    if action == "toggle-coupling":
        if edge.down:
            return replace(state, coupling_on=not state.coupling_on)
        return state

    arms = dict(state.arms)
    for side in config.arms_for(edge.pedal):
        arm = arms[side]
        if edge.down:
            if arm.engaged:
                continue  # repeated press, keep the original snapshot
            arms[side] = ArmClutch(True, hands[side].copy(), ees[side].copy())
        else:
            if not arm.engaged:
                continue
            arms[side] = ArmClutch(False, hands[side].copy(), arm.saved_ee)
    return replace(state, arms=arms)


def relative_target(state: ClutchState, side: str, current_hand: Pose,
                    gain: float = 1.0) -> Pose:
    """Commanded end-effector pose for one arm.

    Frozen at the saved pose while engaged; afterwards the saved pose
    composed with the hand's motion since release. An arm that has never
    been clutched has no reference to move from.
    """
    arm = state.arm(side)
    if arm.saved_ee is None:
        raise NotInitializedError(
            "arm %r has never been clutched; no reference pose" % side)
    if arm.engaged:
        return arm.saved_ee.copy()
    rot = arm.saved_ee.rotation * (arm.saved_hand.rotation.inverse()
                                   * current_hand.rotation)
    pos = arm.saved_ee.position + gain * (current_hand.position
                                          - arm.saved_hand.position)
    return Pose(rot, np.asarray(pos))
