"""Session engine: feeds recorded or live operator events through the
whole control stack against the simulated rig.

The engine owns one tick pipeline: apply due events, turn operator hand
poses into end-effector commands through the clutch, optionally slave
the left arm to the right's command through the spring-damper coupling,
then step the world. Every tick folds the full state row and the
commanded poses into running hashes so determinism and record/replay
closure are a string comparison.
"""

from __future__ import annotations

import hashlib
import json
import os
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .chain import _check_format, load_chains
from .clutch import (ClutchState, PedalConfig, PedalEdge, on_pedal,
                     relative_target)
from .compliance import CouplingParams, coupled_follower_target
from .errors import ConfigurationError, InsufficientDataError, NotInitializedError
from .fusion import fuse
from .geometry import Pose
from .hand import load_hands
from .kinematics import forward_kinematics, geometric_jacobian
from .retarget import RetargetParams, retarget_keypoints
from .session import read_session
from .sim import SimWorld, bvm_metrics, load_scenario
from .templates import TemplateTracker, load_templates

CONFIG_DIR_ENV = "BITELEOP_CONFIG_DIR"
SNAPSHOT_TARGET_HZ = 30.0


def data_dir() -> Path:
    """Directory holding the packaged default models and sessions."""
    return Path(__file__).resolve().parent / "data"


@dataclass(frozen=True)
class RunGains:
    coupling_spring: float = 3.0
    coupling_damper: float = 0.5
    retarget_scale: float = 1.5
    retarget_smoothness: float = 0.1
    clutch_gain: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    name: str
    arms: Path
    hands: Path
    templates: Path
    scenario: Path
    mode: str                    # "replay" or "live"
    session: Path | None = None  # replay input
    port: int | None = None      # live bridge port
    rate_hz: float = 100.0
    seed: int = 0
    duration_s: float | None = None
    gains: RunGains = field(default_factory=RunGains)
    pedals: PedalConfig = field(default_factory=PedalConfig)
    out: Path | None = None

    def __post_init__(self):
        if self.rate_hz <= 0:
            raise ConfigurationError("control rate must be positive")
        if self.mode not in ("replay", "live"):
            raise ConfigurationError("mode must be 'replay' or 'live'")
        if self.mode == "replay" and self.session is None:
            raise ConfigurationError("replay mode needs a session path")
        if self.mode == "live" and self.port is None:
            raise ConfigurationError("live mode needs a port")

    @property
    def dt(self) -> float:
        return 1.0 / self.rate_hz

    @property
    def snapshot_stride(self) -> int:
        return max(1, int(self.rate_hz // SNAPSHOT_TARGET_HZ))


def _resolve(base: Path, value) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


def load_run_config(path, overrides: dict | None = None) -> RunConfig:
    """Read a run configuration file.

    Relative paths resolve against the config file's directory, or
    against $BITELEOP_CONFIG_DIR when that is set. ``overrides`` patches
    top-level fields (CLI flags) before validation.
    """
    path = Path(path)
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    _check_format(doc, path)
    doc = dict(doc)
    doc.update(overrides or {})

    env_dir = os.environ.get(CONFIG_DIR_ENV)
    base = Path(env_dir) if env_dir else path.parent

    try:
        gains = RunGains(**doc.get("gains", {}))
    except TypeError as exc:
        raise ConfigurationError("bad gains section: %s" % exc)
    pedals_doc = doc.get("pedals", {})
    pedals = PedalConfig(left=pedals_doc.get("left", "clutch-left"),
                         right=pedals_doc.get("right", "clutch-right"))
    missing = [k for k in ("arms", "hands", "templates", "scenario") if k not in doc]
    if missing:
        raise ConfigurationError(
            "%s: missing required keys: %s" % (path, ", ".join(missing)))

    session = doc.get("session")
    out = doc.get("out")
    return RunConfig(
        name=doc.get("name", path.stem),
        arms=_resolve(base, doc["arms"]),
        hands=_resolve(base, doc["hands"]),
        templates=_resolve(base, doc["templates"]),
        scenario=_resolve(base, doc["scenario"]),
        mode=doc.get("mode", "replay"),
        session=_resolve(base, session) if session is not None else None,
        port=int(doc["port"]) if "port" in doc and doc["port"] is not None else None,
        rate_hz=float(doc.get("rate_hz", 100.0)),
        seed=int(doc.get("seed", 0)),
        duration_s=float(doc["duration_s"]) if doc.get("duration_s") is not None else None,
        gains=gains, pedals=pedals,
        out=Path(out) if out is not None else None)


def _pose_rate(prev: Pose, cur: Pose, dt: float) -> np.ndarray:
    dv = (cur.position - prev.position) / dt
    w = (cur.rotation * prev.rotation.inverse()).rotvec() / dt
    return np.concatenate([dv, w])


class Engine:
    """One simulation run: owns the world, the operator-side state, and
    the determinism hashes."""

    def __init__(self, config: RunConfig):
        self.config = config
        chains = load_chains(config.arms)
        try:
            self.arms = {"left": chains["arm_left"], "right": chains["arm_right"]}
        except KeyError as exc:
            raise ConfigurationError(
                "%s: missing chain %s" % (config.arms, exc))
        self.hands = load_hands(config.hands)
        self.library = load_templates(config.templates)
        self.library.validate_limits(self.hands)
        self.scenario = load_scenario(config.scenario)
        self.world = SimWorld(self.arms, self.scenario, dt=config.dt,
                              seed=config.seed)

        g = config.gains
        self.retarget_params = RetargetParams(scale=g.retarget_scale,
                                              smoothness=g.retarget_smoothness)
        self.coupling_params = CouplingParams(spring=g.coupling_spring,
                                              damper=g.coupling_damper,
                                              dt=config.dt)
        self.clutch = ClutchState()
        self.hand_pose = {}
        self.hand_q = {s: m.zeros() for s, m in self.hands.items()}
        self.trackers = {}
        if self.scenario.snap_templates:
            self.trackers = {
                s: TemplateTracker(self.library, active=self.scenario.active_tasks)
                for s in self.hands}

        self._bag_angles = None
        if self.scenario.bag is not None:
            cfg = self.scenario.bag
            entries = {}
            for side in cfg.hands:
                q_open = self.library.get(cfg.open_template).for_side(side)
                q_closed = self.library.get(cfg.closed_template).for_side(side)
                if q_open is None or q_closed is None:
                    raise ConfigurationError(
                        "bag templates missing angles for side %r" % side)
                entries[side] = (q_open, q_closed)
            self._bag_angles = entries

        self._queue = deque()
        self._prev_right_cmd = None
        self._state_hash = hashlib.sha256()
        self._command_hash = hashlib.sha256()
        self._force_errors = []
        self.snapshot_count = 0
        self.on_snapshot = []  # callables taking (SimSnapshot,)
        self.event_count = 0

    def feed(self, events) -> None:
        """Queue events for application; must already be time-ordered."""
        self._queue.extend(events)
        self.event_count += len(events)

    # event application

    def _apply(self, ev) -> None:
        kind = ev.kind
        if kind == "pose":
            self.hand_pose[ev.side] = ev.pose
        elif kind == "pedal":
            hands = {s: p for s, p in self.hand_pose.items() if p is not None}
            ees = {s: forward_kinematics(c, self.world.q[s])
                   for s, c in self.arms.items()}
            try:
                self.clutch = on_pedal(self.clutch, self.config.pedals,
                                       PedalEdge(ev.pedal, ev.down), hands, ees)
            except KeyError as exc:
                raise NotInitializedError(
                    "pedal engaged arm %s before any hand pose" % exc)
        elif kind == "keypoints":
            model = self.hands[ev.side]
            fused = fuse(ev.view1, ev.view2)
            q = retarget_keypoints(fused, self.hand_q[ev.side], model,
                                   self.retarget_params)
            self.hand_q[ev.side] = q
            tracker = self.trackers.get(ev.side)
            if tracker is not None:
                name, snapped = tracker.update(q)
                self.world.set_hand(ev.side, snapped.angles, template=name)
            else:
                self.world.set_hand(ev.side, q.angles)
        elif kind == "template":
            tmpl = self.library.get(ev.name)
            angles = tmpl.for_side(ev.side)
            if angles is None:
                raise ConfigurationError(
                    "template %r has no angles for side %r" % (ev.name, ev.side))
            self.hand_q[ev.side] = self.hands[ev.side].joint_vector(angles)
            self.world.set_hand(ev.side, angles, template=ev.name)
            tracker = self.trackers.get(ev.side)
            if tracker is not None:
                tracker.current = ev.name
        elif kind == "coupling":
            self.clutch = replace(self.clutch,
                                  coupling_on=not self.clutch.coupling_on)
        else:
            raise ConfigurationError("unplayable event kind %r" % kind)

    def _command_for(self, side: str) -> Pose | None:
        arm = self.clutch.arm(side)
        if arm.saved_ee is None:
            return None  # never clutched, arm holds
        hand = self.hand_pose.get(side)
        if hand is None:
            hand = arm.saved_hand
        return relative_target(self.clutch, side, hand,
                               self.config.gains.clutch_gain)

    def _coupled_left(self, right_cmd: Pose) -> Pose:
        chain = self.arms["left"]
        x_l = forward_kinematics(chain, self.world.q["left"])
        xd_l = geometric_jacobian(chain, self.world.q["left"]) @ self.world.qd["left"]
        if self._prev_right_cmd is None:
            xd_r = np.zeros(6)
        else:
            xd_r = _pose_rate(self._prev_right_cmd, right_cmd, self.config.dt)
        return coupled_follower_target(x_l, xd_l, right_cmd, xd_r,
                                       self.coupling_params)

    def tick(self):
        """Advance one control period; returns (snapshot, commands)."""
        t_start = self.world.clock
        while self._queue and self._queue[0].t <= t_start:
            self._apply(self._queue.popleft())

        commands = {s: self._command_for(s) for s in ("left", "right")}
        if self.clutch.coupling_on and commands["right"] is not None:
            commands["left"] = self._coupled_left(commands["right"])

        snap = self.world.step(commands, self._bag_angles)

        self._state_hash.update(self.world.state_row(snap).tobytes())
        for side in ("left", "right"):
            cmd = commands[side]
            if cmd is None:
                self._command_hash.update(b"-")
            else:
                self._command_hash.update(
                    np.concatenate([cmd.position, cmd.rotation.q]).tobytes())
        self._prev_right_cmd = commands["right"]

        for side, arm in snap.arms.items():
            self._force_errors.append(
                float(np.linalg.norm(arm.wrench.force - arm.contact_force)))

        if self.world.tick % self.config.snapshot_stride == 0:
            self.snapshot_count += 1
            for cb in self.on_snapshot:
                cb(snap)
        return snap, commands

    def run(self, ticks: int) -> None:
        for _ in range(ticks):
            self.tick()

    # results

    @property
    def state_hash(self) -> str:
        return self._state_hash.hexdigest()

    @property
    def command_hash(self) -> str:
        return self._command_hash.hexdigest()

    def metrics(self) -> dict:
        elapsed = self.world.clock
        out = {
            "name": self.config.name,
            "mode": self.config.mode,
            "seed": self.config.seed,
            "rate_hz": self.config.rate_hz,
            "ticks": self.world.tick,
            "duration_s": elapsed,
            "event_count": self.event_count,
            "state_hash": self.state_hash,
            "command_hash": self.command_hash,
            "snapshots": self.snapshot_count,
            "snapshot_hz": (self.snapshot_count / elapsed) if elapsed > 0 else 0.0,
        }
        if self._force_errors:
            out["force_error"] = {
                "mean_n": float(np.mean(self._force_errors)),
                "max_n": float(np.max(self._force_errors)),
            }
        if self.scenario.bag is not None:
            try:
                m = bvm_metrics(self.world.compression_log, self.scenario.bag.bag)
                out["bvm"] = {
                    "breaths": len(m.volumes_ml),
                    "mean_interval_s": m.mean_interval,
                    "mean_vent_time_s": m.mean_vent_time,
                    "mean_volume_ml": m.mean_volume_ml,
                    "fraction_in_range": m.fraction_in_range,
                    "intervals_s": list(m.intervals),
                    "vent_times_s": list(m.vent_times),
                    "volumes_ml": list(m.volumes_ml),
                }
            except InsufficientDataError as exc:
                out["bvm"] = None
                out["bvm_note"] = str(exc)
        if self.scenario.needle is not None:
            active = [(d, i) for _, on, d, i in self.world.needle_log if on]
            entry = {
                "samples": len(self.world.needle_log),
                "active_samples": len(active),
            }
            if active:
                devs = np.degrees([d for d, _ in active])
                incs = np.degrees([i for _, i in active])
                entry.update({
                    "mean_deviation_deg": float(np.mean(devs)),
                    "max_deviation_deg": float(np.max(devs)),
                    "mean_incidence_deg": float(np.mean(incs)),
                    "min_incidence_deg": float(np.min(incs)),
                    "max_incidence_deg": float(np.max(incs)),
                })
            out["needle"] = entry
        return out


def run_replay(config: RunConfig, events=None,
               engine: Engine | None = None) -> tuple[dict, Engine]:
    """Replay a recorded session to completion; returns (metrics, engine)."""
    if events is None:
        events = read_session(config.session)
    if engine is None:
        engine = Engine(config)
    engine.feed(events)
    if config.duration_s is not None:
        duration = config.duration_s
    elif events:
        duration = events[-1].t + 2.0
    else:
        duration = 2.0
    engine.run(max(1, int(round(duration * config.rate_hz))))
    return engine.metrics(), engine


def write_metrics(metrics: dict, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "metrics.json"
    with open(path, "w") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_metrics(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
