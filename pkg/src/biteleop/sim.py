"""Deterministic simulated world for the two-arm rig.

Arms are kinematic: each tick they take one damped-least-squares step
toward their commanded pose under per-joint velocity limits. Joint
torques are synthesized (gravity plus contact plus seeded noise) so the
wrench estimator has something realistic to chew on; they are never
integrated. Scenario objects are simple scripted devices: a squeeze bag
driven by hand joint angles, penalty contact surfaces, and a needle
alignment check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .chain import JointVector, SerialChain, _check_format
from .compliance import WrenchEstimate, estimate_ee_wrench
from .errors import (ConfigurationError, InsufficientDataError,
                     StructuralError)
from .geometry import Pose
from .kinematics import (TrackParams, forward_kinematics, geometric_jacobian,
                         gravity_torques, track_pose)

PENETRATION_CAP = 0.005  # m, spring term saturates past this depth
BREATH_ENTER = 0.15      # compression level that opens a breath segment
BREATH_EXIT = 0.10       # level that closes it


@dataclass(frozen=True)
class PlaneSurface:
    """Half-space contact: pushes back along the outward normal."""

    point: np.ndarray
    normal: np.ndarray
    stiffness: float
    damping: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        n = np.asarray(self.normal, dtype=float)
        norm = float(np.linalg.norm(n))
        if norm < 1e-12:
            raise ConfigurationError("plane normal must be nonzero")
        object.__setattr__(self, "normal", n / norm)
        if not self.stiffness > 0:
            raise ConfigurationError("surface stiffness must be positive")

    def contact(self, position, velocity):
        pen = float((self.point - position) @ self.normal)
        if pen <= 0.0:
            return np.zeros(3), 0.0
        spring = self.stiffness * min(pen, PENETRATION_CAP)
        damp = -self.damping * float(velocity @ self.normal)
        return max(spring + damp, 0.0) * self.normal, pen


@dataclass(frozen=True)
class SphereSurface:
    """Solid ball: pushes radially outward."""

    center: np.ndarray
    radius: float
    stiffness: float
    damping: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not self.radius > 0:
            raise ConfigurationError("sphere radius must be positive")
        if not self.stiffness > 0:
            raise ConfigurationError("surface stiffness must be positive")

    def contact(self, position, velocity):
        offset = np.asarray(position, dtype=float) - self.center
        dist = float(np.linalg.norm(offset))
        if dist >= self.radius or dist < 1e-12:
            return np.zeros(3), 0.0
        normal = offset / dist
        pen = self.radius - dist
        spring = self.stiffness * min(pen, PENETRATION_CAP)
        damp = -self.damping * float(velocity @ normal)
        return max(spring + damp, 0.0) * normal, pen


@dataclass(frozen=True)
class BagModel:
    """Self-inflating ventilation bag reduced to one number: how much of
    the compressible volume a squeeze actually delivers."""

    compressible_ml: float = 600.0
    leak: float = 0.1
    rest_ml: float = 1500.0

    def __post_init__(self):
        if self.compressible_ml <= 0:
            raise ConfigurationError("compressible volume must be positive")
        if not 0.0 <= self.leak < 1.0:
            raise ConfigurationError("leak fraction must be in [0, 1)")

    def delivered_ml(self, compression: float) -> float:
        c = min(max(float(compression), 0.0), 1.0)
        return self.compressible_ml * c * (1.0 - self.leak)


@dataclass(frozen=True)
class BagConfig:
    bag: BagModel
    open_template: str
    closed_template: str
    hands: tuple
    efficiency: float  # fitted squeeze efficiency, marked calibrated

    def __post_init__(self):
        if not 0.0 < self.efficiency <= 1.0:
            raise ConfigurationError("squeeze efficiency must be in (0, 1]")
        if not self.hands:
            raise ConfigurationError("bag must name at least one squeezing hand")


@dataclass(frozen=True)
class NeedleConfig:
    arm: str
    surface: PlaneSurface
    image_normal: np.ndarray
    template: str = "syringe"

    def __post_init__(self):
        n = np.asarray(self.image_normal, dtype=float)
        norm = float(np.linalg.norm(n))
        if norm < 1e-12:
            raise ConfigurationError("image plane normal must be nonzero")
        object.__setattr__(self, "image_normal", n / norm)


@dataclass(frozen=True)
class Scenario:
    name: str
    bag: BagConfig | None = None
    needle: NeedleConfig | None = None
    surfaces: tuple = ()
    active_tasks: frozenset | None = None  # template task filter, None = all
    snap_templates: bool = False


def squeeze_fraction(q_hand: np.ndarray, q_open: np.ndarray,
                     q_closed: np.ndarray) -> float:
    """Progress of a hand configuration along the open-to-closed line,
    clamped to [0, 1]."""
    span = q_closed - q_open
    denom = float(span @ span)
    if denom < 1e-12:
        raise ConfigurationError("open and closed templates coincide")
    return min(max(float((q_hand - q_open) @ span) / denom, 0.0), 1.0)


def needle_angle_check(pose: Pose, surface: PlaneSurface,
                       image_normal) -> tuple[float, float]:
    """Needle alignment angles, radians.

    The needle axis is the tool-frame x axis. Returns (in-plane
    deviation from the image plane, incidence against the surface's
    tangent plane).
    """
    image_normal = np.asarray(image_normal, dtype=float)
    axis = pose.rotation.apply(np.array([1.0, 0.0, 0.0]))
    deviation = math.asin(min(abs(float(axis @ image_normal)), 1.0))
    incidence = math.asin(min(abs(float(axis @ surface.normal)), 1.0))
    return deviation, incidence


@dataclass
class ArmSnapshot:
    q: np.ndarray
    qd: np.ndarray
    ee: Pose
    wrench: WrenchEstimate
    contact_force: np.ndarray


@dataclass
class SimSnapshot:
    """Immutable view of the world after one tick; everything a client
    needs to render without history."""

    tick: int
    clock: float
    arms: dict
    hand_angles: dict
    hand_templates: dict
    bag_compression: float
    needle_deviation: float
    needle_incidence: float
    needle_active: bool


class SimWorld:
    """Owns all mutable simulation state; step() is the only mutator."""

    def __init__(self, arms: dict, scenario: Scenario, dt: float = 0.01,
                 seed: int = 0, noise_sigma: float = 0.05,
                 velocity_limit: float = 2.5,
                 track_params: TrackParams = TrackParams(),
                 gravity=(0.0, 0.0, -9.81)):
        if dt <= 0:
            raise ConfigurationError("time step must be positive")
        self.arms = dict(arms)
        self.sides = tuple(sorted(self.arms))
        self.scenario = scenario
        self.dt = dt
        self.noise_sigma = noise_sigma
        self.velocity_limit = velocity_limit
        self.track_params = track_params
        self.gravity = np.asarray(gravity, dtype=float)
        self.rng = np.random.default_rng(seed)

        self.q = {s: self.arms[s].zeros() for s in self.sides}
        self.qd = {s: np.zeros(self.arms[s].n) for s in self.sides}
        self.hand_angles = {}
        self.hand_templates = {}
        self.tick = 0
        self.clock = 0.0
        self.compression_log: list[tuple[float, float]] = []
        self.needle_log: list[tuple[float, bool, float, float]] = []

    def set_hand(self, side: str, angles: np.ndarray,
                 template: str | None = None) -> None:
        self.hand_angles[side] = np.asarray(angles, dtype=float).copy()
        if template is not None:
            self.hand_templates[side] = template

    def _bag_compression(self, bag_angles: dict) -> float:
        cfg = self.scenario.bag
        fractions = []
        for side in cfg.hands:
            angles = self.hand_angles.get(side)
            if angles is None:
                fractions.append(0.0)
                continue
            q_open, q_closed = bag_angles[side]
            fractions.append(squeeze_fraction(angles, q_open, q_closed))
        return cfg.efficiency * float(np.mean(fractions))

    def step(self, commands: dict, bag_angles: dict | None = None) -> SimSnapshot:
        """Advance one tick.

        ``commands`` maps side to a target EE pose or None (hold).
        ``bag_angles`` maps each squeezing side to its (open, closed)
        template angle pair when the scenario has a bag.
        """
        self.tick += 1
        self.clock = self.tick * self.dt
        arm_snaps = {}
        for side in self.sides:
            chain = self.arms[side]
            q = self.q[side]
            target = commands.get(side)
            if target is not None:
                q_next = track_pose(chain, q, target, self.track_params)
                dq = q_next.angles - q.angles
                cap = self.velocity_limit * self.dt
                dq = np.minimum(np.maximum(dq, -cap), cap)
                q = chain.joint_vector(q.angles + dq)
                self.qd[side] = dq / self.dt
            else:
                self.qd[side] = np.zeros(chain.n)
            self.q[side] = q

            ee = forward_kinematics(chain, q)
            jac = geometric_jacobian(chain, q)
            ee_vel = jac[:3] @ self.qd[side]
            force = np.zeros(3)
            for surface in self.scenario.surfaces:
                f, _ = surface.contact(ee.position, ee_vel)
                force += f
            tau_g = gravity_torques(chain, q, self.gravity)
            noise = self.rng.normal(0.0, self.noise_sigma, chain.n)
            tau_measured = tau_g + jac[:3].T @ force + noise
            wrench = estimate_ee_wrench(chain, q, tau_measured, tau_g)
            arm_snaps[side] = ArmSnapshot(q.angles.copy(), self.qd[side].copy(),
                                          ee, wrench, force)

        compression = 0.0
        if self.scenario.bag is not None:
            if bag_angles is None:
                raise StructuralError("bag scenario needs open/closed angles")
            compression = self._bag_compression(bag_angles)
            self.compression_log.append((self.clock, compression))

        deviation = 0.0
        incidence = 0.0
        needle_active = False
        if self.scenario.needle is not None:
            cfg = self.scenario.needle
            ee = arm_snaps[cfg.arm].ee
            deviation, incidence = needle_angle_check(ee, cfg.surface,
                                                      cfg.image_normal)
            needle_active = self.hand_templates.get(
                _needle_hand(cfg.arm)) == cfg.template
            self.needle_log.append((self.clock, needle_active, deviation, incidence))

        return SimSnapshot(
            tick=self.tick, clock=self.clock, arms=arm_snaps,
            hand_angles={s: a.copy() for s, a in self.hand_angles.items()},
            hand_templates=dict(self.hand_templates),
            bag_compression=compression,
            needle_deviation=deviation, needle_incidence=incidence,
            needle_active=needle_active)

    def state_row(self, snap: SimSnapshot) -> np.ndarray:
        """Fixed-layout float row for state-log hashing."""
        parts = [np.array([snap.clock])]
        for side in self.sides:
            arm = snap.arms[side]
            parts.extend([arm.q, arm.qd, arm.ee.position, arm.ee.rotation.q,
                          arm.wrench.vector()])
        parts.append(np.array([snap.bag_compression, snap.needle_deviation,
                               snap.needle_incidence]))
        return np.concatenate(parts)


def _needle_hand(arm_side: str) -> str:
    return arm_side


@dataclass(frozen=True)
class BvmMetrics:
    peak_times: tuple
    intervals: tuple        # s, between successive peaks
    vent_times: tuple       # s, 10 to 90 percent rise per breath
    volumes_ml: tuple
    fraction_in_range: float  # share of breaths delivering 400 to 600 mL

    @property
    def mean_interval(self) -> float:
        return float(np.mean(self.intervals))

    @property
    def mean_vent_time(self) -> float:
        return float(np.mean(self.vent_times))

    @property
    def mean_volume_ml(self) -> float:
        return float(np.mean(self.volumes_ml))


def _cross_time(times, values, level, lo, hi):
    """Linear-interpolated time where values crosses level between
    samples lo and hi (rising)."""
    for i in range(lo, hi):
        a, b = values[i], values[i + 1]
        if a < level <= b:
            frac = (level - a) / (b - a)
            return times[i] + frac * (times[i + 1] - times[i])
    return times[lo]


def bvm_metrics(log, bag: BagModel) -> BvmMetrics:
    """Breath statistics from a compression-versus-time log.

    A breath opens when compression exceeds 0.15 and closes when it
    drops back under 0.10 (hysteresis kills chatter near the threshold).
    Ventilation time is the 10 to 90 percent rise of each breath's own
    peak; volumes come from the bag map at the peak.
    """
    times = np.array([t for t, _ in log])
    values = np.array([c for _, c in log])
    if len(times) < 2:
        raise InsufficientDataError("compression log too short")

    breaths = []  # (start index, peak index, end index)
    in_breath = False
    seg_start = 0
    peak_idx = 0
    for i, c in enumerate(values):
        if not in_breath:
            if c >= BREATH_ENTER:
                in_breath = True
                peak_idx = i
                # rewind the whole monotone rise to its baseline, so the
                # 10 percent crossing falls inside the segment
                j = i
                while j > 0 and values[j - 1] <= values[j]:
                    j -= 1
                seg_start = j
        else:
            if c > values[peak_idx]:
                peak_idx = i
            if c <= BREATH_EXIT:
                breaths.append((seg_start, peak_idx, i))
                in_breath = False
    if len(breaths) < 2:
        raise InsufficientDataError(
            "need at least 2 breaths, found %d" % len(breaths))

    peak_times = []
    vent_times = []
    volumes = []
    for start, peak, _ in breaths:
        peak_times.append(float(times[peak]))
        cp = values[peak]
        t10 = _cross_time(times, values, 0.1 * cp, start, peak)
        t90 = _cross_time(times, values, 0.9 * cp, start, peak)
        vent_times.append(float(t90 - t10))
        volumes.append(bag.delivered_ml(cp))
    intervals = np.diff(peak_times)
    in_range = [1.0 if 400.0 <= v <= 600.0 else 0.0 for v in volumes]
    return BvmMetrics(
        peak_times=tuple(peak_times), intervals=tuple(float(x) for x in intervals),
        vent_times=tuple(vent_times), volumes_ml=tuple(volumes),
        fraction_in_range=float(np.mean(in_range)))


def _surface_from_dict(sd) -> PlaneSurface | SphereSurface:
    kind = sd.get("kind", "plane")
    if kind == "plane":
        return PlaneSurface(
            point=np.array(sd["point"], dtype=float),
            normal=np.array(sd["normal"], dtype=float),
            stiffness=float(sd["stiffness"]),
            damping=float(sd.get("damping", 0.0)))
    if kind == "sphere":
        return SphereSurface(
            center=np.array(sd["center"], dtype=float),
            radius=float(sd["radius"]),
            stiffness=float(sd["stiffness"]),
            damping=float(sd.get("damping", 0.0)))
    raise ConfigurationError("unknown surface kind %r" % kind)


def load_scenario(path) -> Scenario:
    """Read a scenario file (versioned YAML)."""
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    _check_format(doc, path)
    name = doc.get("name", "unnamed")
    surfaces = tuple(_surface_from_dict(sd) for sd in doc.get("surfaces", []))

    bag = None
    if "bag" in doc:
        bd = doc["bag"]
        bag = BagConfig(
            bag=BagModel(
                compressible_ml=float(bd.get("compressible_ml", 600.0)),
                leak=float(bd.get("leak", 0.1)),
                rest_ml=float(bd.get("rest_ml", 1500.0))),
            open_template=bd["open_template"],
            closed_template=bd["closed_template"],
            hands=tuple(bd["hands"]),
            efficiency=float(bd["efficiency"]))

    needle = None
    if "needle" in doc:
        nd = doc["needle"]
        needle = NeedleConfig(
            arm=nd["arm"],
            surface=PlaneSurface(
                point=np.array(nd["surface_point"], dtype=float),
                normal=np.array(nd["surface_normal"], dtype=float),
                stiffness=float(nd.get("stiffness", 1000.0))),
            image_normal=np.array(nd["image_normal"], dtype=float),
            template=nd.get("template", "syringe"))

    active = doc.get("active_tasks")
    return Scenario(
        name=name, bag=bag, needle=needle, surfaces=surfaces,
        active_tasks=frozenset(active) if active is not None else None,
        snap_templates=bool(doc.get("snap_templates", False)))
