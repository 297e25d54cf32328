"""Generator for the packaged default data files.

Everything under ``biteleop/data`` is produced by ``write_all`` so the
shipped models, grasp library, scenarios, run configs, and demo sessions
can be regenerated from source at any time:

    python -m biteleop.defaults [dest]

The demo squeeze profiles are tuned so the bag scenarios land on the
reported clinical numbers; the tuned constants live here and in the
scenario files, flagged as fitted.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import yaml

from .chain import SerialChain, build_arm
from .fusion import CameraView, KeypointSet
from .geometry import Pose, Rotation
from .hand import build_hand, keypoints_from_angles
from .session import (KeypointFrame, PedalEdgeEvent, PoseSample,
                      TemplateSelect, write_session)

# Squeeze ramp length giving a measured 10-90 percent rise near 0.99 s.
BVM_RISE_S = 1.174
BVM_FALL_S = 0.9
# Brief hold at full squeeze; lets the tracked hand settle onto the
# commanded closure before release, like a real squeeze-and-hold.
BVM_PLATEAU_S = 0.32
# Commanded closure slightly past the closed template. The tracked hand
# settles a couple of percent short of its commanded target, so a firm
# over-squeeze pins the achieved closure at exactly full.
FULL_SQUEEZE = 1.05
# Measured peak times lag the commanded ones differently for the first
# breath (cold start) and for a partial squeeze (no saturation), so
# those breaths lead the metronome slightly to keep peak spacing even.
FIRST_BREATH_LEAD_S = 0.16
SHALLOW_LEAD_S = 0.24
# Fitted squeeze efficiencies: full squeeze delivers about 471 mL with
# one hand and 533 mL with two on the default 600 mL / 0.1 leak bag.
EFFICIENCY_SINGLE = 0.8722
EFFICIENCY_DOUBLE = 0.9870

KEYFRAME_DT = 0.08  # hand keypoint stream period, s


def _pose_dict(pose: Pose) -> dict:
    return {"xyz": [float(v) for v in pose.position],
            "wxyz": [float(v) for v in pose.rotation.q]}


def _chain_dict(chain: SerialChain) -> dict:
    joints = []
    for j in chain.joints:
        if abs(j.origin_rot.q[0]) < 1.0 - 1e-15:
            raise ValueError(
                "joint %r has a rotated origin; the writer only emits rpy zeros"
                % j.name)
        jd = {
            "name": j.name,
            "axis": [float(v) for v in j.axis],
            "xyz": [float(v) for v in j.origin_xyz],
            "limits": [float(j.lower), float(j.upper)],
        }
        if j.mass != 0.0:
            jd["mass"] = float(j.mass)
            jd["com"] = [float(v) for v in j.com]
        joints.append(jd)
    out = {"joints": joints,
           "base": _pose_dict(chain.base),
           "tip": _pose_dict(chain.tip)}
    if chain.home is not None:
        out["home"] = _pose_dict(chain.home)
    return out


def _dump(doc: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False, default_flow_style=None)


def write_arms(path: Path) -> None:
    _dump({"format": 1,
           "chains": {"arm_left": _chain_dict(build_arm("left")),
                      "arm_right": _chain_dict(build_arm("right"))}}, path)


def write_hands(path: Path) -> None:
    hands = {}
    for side in ("left", "right"):
        model = build_hand(side)
        fingers = []
        for name, chain in model.fingers:
            fd = _chain_dict(chain)
            fd["name"] = name
            fingers.append(fd)
        hands[side] = {"fingers": fingers}
    _dump({"format": 1, "hands": hands}, path)


# One grip per tool. Angle order: thumb, index, middle, ring, pinky,
# two flexion joints each. Both sides share joint-space values.
TEMPLATE_CATALOG = [
    ("stethoscope", "auscultation",
     [0.7, 0.5, 0.8, 0.6, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3]),
    ("laryngoscope", "intubation",
     [0.7, 0.7, 0.9, 1.0, 0.9, 1.0, 0.9, 1.0, 0.9, 1.0]),
    ("scalpel", "incision",
     [0.6, 0.4, 0.7, 0.5, 0.6, 0.5, 0.2, 0.2, 0.2, 0.2]),
    ("tube", "intubation",
     [0.6, 0.5, 0.7, 0.6, 0.7, 0.6, 0.25, 0.25, 0.25, 0.25]),
    ("stylet", "intubation",
     [0.9, 0.7, 1.0, 0.8, 0.4, 0.3, 0.3, 0.3, 0.3, 0.3]),
    ("bag-open", "ventilation",
     [0.2, 0.2, 0.15, 0.15, 0.15, 0.15, 0.15, 0.15, 0.15, 0.15]),
    ("bag-closed", "ventilation",
     [0.9, 1.0, 1.2, 1.3, 1.2, 1.3, 1.2, 1.3, 1.2, 1.3]),
    ("syringe", "needle",
     [0.65, 0.45, 0.1, 0.1, 0.8, 0.7, 0.8, 0.7, 0.4, 0.4]),
    ("probe", "needle",
     [0.5, 0.4, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5]),
    ("clamp-open", "suture",
     [0.45, 0.3, 0.25, 0.2, 0.6, 0.5, 0.7, 0.6, 0.7, 0.6]),
    ("clamp-closed", "suture",
     [0.75, 0.5, 0.45, 0.35, 0.9, 0.8, 1.0, 0.9, 1.0, 0.9]),
]


def write_templates(path: Path) -> None:
    entries = []
    for name, task, angles in TEMPLATE_CATALOG:
        entries.append({"name": name, "task": task,
                        "left": list(angles), "right": list(angles)})
    _dump({"format": 1, "templates": entries}, path)


def write_scenarios(root: Path) -> None:
    def bag_doc(hands, efficiency):
        return {
            "format": 1,
            "name": "bvm-%s" % ("-".join(hands)),
            "bag": {
                "compressible_ml": 600.0,
                "leak": 0.1,
                "rest_ml": 1500.0,
                "open_template": "bag-open",
                "closed_template": "bag-closed",
                "hands": list(hands),
                # fitted so a full squeeze lands on the reported means
                "efficiency": efficiency,
            },
            "active_tasks": ["ventilation"],
            "snap_templates": False,
        }

    _dump(bag_doc(("right",), EFFICIENCY_SINGLE), root / "bvm_single.yaml")
    _dump(bag_doc(("left", "right"), EFFICIENCY_DOUBLE), root / "bvm_double.yaml")
    _dump({
        "format": 1,
        "name": "needle-approach",
        "needle": {
            "arm": "right",
            "surface_point": [0.0, -0.22, -0.40],
            "surface_normal": [0.0, 0.0, 1.0],
            "image_normal": [0.0, 1.0, 0.0],
            "template": "syringe",
        },
        "active_tasks": ["needle"],
        "snap_templates": False,
    }, root / "needle.yaml")
    _dump({
        "format": 1,
        "name": "free-space",
        "surfaces": [{"kind": "plane", "point": [0.0, 0.0, -0.60],
                      "normal": [0.0, 0.0, 1.0],
                      "stiffness": 1000.0, "damping": 50.0}],
        "snap_templates": False,
    }, root / "free_space.yaml")


def _squeeze_level(t: float, segments) -> float:
    """Piecewise-linear squeeze profile: rise, brief hold, release."""
    level = 0.0
    for top_in, top_out, amp in segments:
        if top_in - BVM_RISE_S <= t < top_in:
            level = max(level, amp * (1.0 - (top_in - t) / BVM_RISE_S))
        elif top_in <= t <= top_out:
            level = max(level, amp)
        elif top_out < t <= top_out + BVM_FALL_S:
            level = max(level, amp * (1.0 - (t - top_out) / BVM_FALL_S))
    return level


def _keypoint_event(t, side, model, angles) -> KeypointFrame:
    pts = np.round(keypoints_from_angles(model, model.joint_vector(angles)).points, 6)
    # overhead camera looks along the palm normal, side camera edge-on
    v1 = CameraView("c1", np.array([0.0, 0.0, 1.0]), KeypointSet(pts.copy()))
    v2 = CameraView("c2", np.array([0.0, 1.0, 0.0]), KeypointSet(pts.copy()))
    return KeypointFrame(t, side, v1, v2)


def _clutch_and_lift(side, hand_p0, t_down, t_up, lift, t0, t1, rate_hz=10.0):
    """Common session prologue: show the hand, clutch, release, raise the
    hand so the arm comes off full extension."""
    events = [PoseSample(0.0, side, Pose(Rotation.identity(), hand_p0))]
    events.append(PedalEdgeEvent(t_down, side, True))
    events.append(PedalEdgeEvent(t_up, side, False))
    steps = int(round((t1 - t0) * rate_hz))
    for k in range(1, steps + 1):
        t = t0 + k / rate_hz
        u = k / steps
        p = hand_p0 + np.array([0.0, 0.0, lift * u])
        events.append(PoseSample(t, side, Pose(Rotation.identity(), p)))
    return events


def bvm_session(hands, breaths=8, shallow_breath=None, first_peak=6.0,
                spacing=6.0):
    """Scripted ventilation run: clutch in, then squeeze the bag
    rhythmically. ``shallow_breath`` (1-based) under-delivers on purpose
    so the in-range fraction is exercised."""
    half = 0.5 * BVM_PLATEAU_S
    segments = []
    for k in range(1, breaths + 1):
        p = first_peak + spacing * (k - 1)
        amp, lead = FULL_SQUEEZE, 0.0
        if k == 1:
            lead = FIRST_BREATH_LEAD_S
        if shallow_breath == k:
            amp, lead = 0.55, SHALLOW_LEAD_S
        segments.append((p - half - lead, p + half - lead, amp))
    end_t = segments[-1][1] + BVM_FALL_S + 1.0

    events = []
    models = {side: build_hand(side) for side in hands}
    open_q = np.array(TEMPLATE_CATALOG[5][2])
    closed_q = np.array(TEMPLATE_CATALOG[6][2])
    for i, side in enumerate(hands):
        p0 = np.array([0.3, -0.3 + 0.6 * i, 0.2])
        events.extend(_clutch_and_lift(side, p0, 0.3, 0.5, 0.10, 0.5, 1.5))
    frames = int(round(end_t / KEYFRAME_DT))
    for k in range(frames + 1):
        t = k * KEYFRAME_DT
        level = _squeeze_level(t, segments)
        angles = open_q + level * (closed_q - open_q)
        for side in hands:
            events.append(_keypoint_event(t, side, models[side], angles))
    events.sort(key=lambda e: e.t)
    return events, end_t


def needle_session():
    """Scripted needle approach: lift off full extension, roll the tool
    to a 30 degree incidence while staying in the image plane, then mark
    the approach by selecting the syringe grip."""
    side = "right"
    p0 = np.array([0.3, -0.3, 0.2])
    events = _clutch_and_lift(side, p0, 0.1, 0.2, 0.10, 0.3, 1.5)
    p_lifted = p0 + np.array([0.0, 0.0, 0.10])
    rate = 25.0
    t0, t1 = 1.5, 4.5
    steps = int(round((t1 - t0) * rate))
    for k in range(1, steps + 1):
        t = t0 + k / rate
        theta = np.radians(30.0) * k / steps
        rot = Rotation.from_axis_angle(np.array([0.0, 1.0, 0.0]), theta)
        events.append(PoseSample(t, side, Pose(rot, p_lifted)))
    events.append(TemplateSelect(5.0, side, "syringe"))
    return events, 12.0


def _run_doc(name, scenario, session, seed, duration, smoothness=0.002):
    return {
        "format": 1,
        "name": name,
        "arms": "../arms_7dof.yaml",
        "hands": "../hand_10dof.yaml",
        "templates": "../grasp_templates.yaml",
        "scenario": "../scenarios/%s" % scenario,
        "mode": "replay",
        "session": "../sessions/%s" % session,
        "rate_hz": 100.0,
        "seed": seed,
        "duration_s": duration,
        # keypoint frames arrive far below the control rate, so the
        # retarget smoothing weight drops accordingly
        "gains": {"retarget_smoothness": smoothness},
    }


def write_all(dest: Path) -> None:
    dest = Path(dest)
    write_arms(dest / "arms_7dof.yaml")
    write_hands(dest / "hand_10dof.yaml")
    write_templates(dest / "grasp_templates.yaml")
    write_scenarios(dest / "scenarios")

    sessions = dest / "sessions"
    sessions.mkdir(parents=True, exist_ok=True)
    events, end_single = bvm_session(("right",), breaths=8, shallow_breath=6)
    write_session(sessions / "bvm_paper_matched.txt", events)
    events, end_double = bvm_session(("left", "right"), breaths=4)
    write_session(sessions / "bvm_two_hand.txt", events)
    events, end_needle = needle_session()
    write_session(sessions / "needle_approach.txt", events)

    runs = dest / "runs"
    runs.mkdir(parents=True, exist_ok=True)
    _dump(_run_doc("bvm-paper-matched", "bvm_single.yaml",
                   "bvm_paper_matched.txt", 7, end_single), runs / "bvm_single.yaml")
    _dump(_run_doc("bvm-two-hand", "bvm_double.yaml",
                   "bvm_two_hand.txt", 7, end_double), runs / "bvm_double.yaml")
    _dump(_run_doc("needle-approach", "needle.yaml",
                   "needle_approach.txt", 11, end_needle), runs / "needle.yaml")
    _dump({
        "format": 1,
        "name": "live-demo",
        "arms": "../arms_7dof.yaml",
        "hands": "../hand_10dof.yaml",
        "templates": "../grasp_templates.yaml",
        "scenario": "../scenarios/free_space.yaml",
        "mode": "live",
        "port": 8731,
        "rate_hz": 100.0,
        "seed": 0,
    }, runs / "live_demo.yaml")


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parent / "data")
    write_all(target)
    print("wrote default data to %s" % target)
