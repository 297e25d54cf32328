"""Torque-level compliance: end-effector wrench estimation, the
impedance command law, and the bimanual spring-damper coupling.

Coupling law
------------
The follower arm is bound to the leader's desired pose through a virtual
spring and damper acting on the pose error e:

    e'' = -k_p e - k_d e'     k_p = spring / dt^2, k_d = damper / dt

Each control tick advances this linear system by exactly one period
using the closed-form solution (the matrix exponential of the 2x2
companion matrix, split by damping regime). The exact step is what makes
the shipped gains usable: a naive Euler pass at spring = 3 sits on the
stability boundary and never settles, and the raw one-line update the
gains were printed with is outright divergent. That raw form is kept
behind ``mode="literal"`` as an executable comparison, not a usable
controller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import JointVector, SerialChain
from .errors import ConfigurationError, StructuralError
from .geometry import Pose, Rotation
from .kinematics import geometric_jacobian, gravity_torques

SINGULAR_TOL = 1e-6


@dataclass(frozen=True)
class WrenchEstimate:
    """World-frame force (N) and torque (N m) at the end effector."""

    force: np.ndarray
    torque: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "force", np.asarray(self.force, dtype=float))
        object.__setattr__(self, "torque", np.asarray(self.torque, dtype=float))
        if self.force.shape != (3,) or self.torque.shape != (3,):
            raise StructuralError("wrench components must be 3-vectors")
        if not (np.all(np.isfinite(self.force)) and np.all(np.isfinite(self.torque))):
            raise StructuralError("wrench has non-finite components")

    @classmethod
    def zero(cls) -> "WrenchEstimate":
        return cls(np.zeros(3), np.zeros(3))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.force, self.torque])


def estimate_ee_wrench(chain: SerialChain, q: JointVector, tau_measured,
                       tau_g, components: str = "full") -> WrenchEstimate:
    """Recover the external end-effector wrench from joint torques.

    Solves J^T w = tau_measured - tau_g by truncated-SVD pseudoinverse;
    singular directions (sigma < 1e-6) contribute nothing, which keeps
    the estimate bounded near singularities.

    ``components="force"`` restricts the solve to the translational
    Jacobian block and reports zero torque. Use it when the joint set
    cannot disambiguate tip torques from forces (short planar chains);
    for pure tip forces the restricted solve is exact where the full
    minimal-norm solution smears the load across both channels.
    """
    tau_measured = np.asarray(tau_measured, dtype=float)
    tau_g = np.asarray(tau_g, dtype=float)
    if tau_measured.shape != (chain.n,) or tau_g.shape != (chain.n,):
        raise StructuralError(
            "torque vectors must have length %d" % chain.n)
    if components not in ("full", "force"):
        raise ConfigurationError("components must be 'full' or 'force'")
    jac = geometric_jacobian(chain, q)
    if components == "force":
        jac = jac[:3]
    residual = tau_measured - tau_g
    u, s, vt = np.linalg.svd(jac.T, full_matrices=False)
    inv = np.where(s > SINGULAR_TOL, 1.0 / np.where(s > SINGULAR_TOL, s, 1.0), 0.0)
    w = vt.T @ (inv * (u.T @ residual))
    if components == "force":
        return WrenchEstimate(w, np.zeros(3))
    return WrenchEstimate(w[:3], w[3:])


def impedance_torque(chain: SerialChain, q: JointVector,
                     f_desired: WrenchEstimate, gravity) -> np.ndarray:
    """Joint torque command: gravity balance plus the Jacobian-transpose
    image of the desired end-effector wrench."""
    tau_g = gravity_torques(chain, q, gravity)
    jac = geometric_jacobian(chain, q)
    return tau_g + jac.T @ f_desired.vector()


@dataclass(frozen=True)
class CouplingParams:
    spring: float = 3.0    # dimensionless spring gain
    damper: float = 0.5    # dimensionless damper gain
    dt: float = 0.01       # control period, s
    mode: str = "exact"    # "exact" or "literal"

    def __post_init__(self):
        if not self.spring > 0:
            raise ConfigurationError("spring gain must be positive")
        if self.damper < 0:
            raise ConfigurationError("damper gain must be non-negative")
        if not self.dt > 0:
            raise ConfigurationError("update period must be positive")
        if self.mode not in ("exact", "literal"):
            raise ConfigurationError("mode must be 'exact' or 'literal'")

    @property
    def k_p(self) -> float:
        return self.spring / (self.dt * self.dt)

    @property
    def k_d(self) -> float:
        return self.damper / self.dt


def coupling_matrix(params: CouplingParams) -> np.ndarray:
    """One-period transition matrix of the error dynamics, mapping
    (e, e') at a tick to (e, e') one period later, exactly."""
    kp = params.k_p
    kd = params.k_d
    h = params.dt
    sigma = 0.5 * kd
    disc = sigma * sigma - kp
    if disc < -1e-12:
        # underdamped: decaying oscillation
        omega = math.sqrt(-disc)
        decay = math.exp(-sigma * h)
        c = math.cos(omega * h)
        s = math.sin(omega * h) / omega
        m11 = decay * (c + sigma * s)
        m12 = decay * s
        m22 = decay * (c - sigma * s)
    elif disc > 1e-12:
        # overdamped: two real decay rates
        root = math.sqrt(disc)
        r1 = -sigma + root
        r2 = -sigma - root
        e1 = math.exp(r1 * h)
        e2 = math.exp(r2 * h)
        m11 = (r1 * e2 - r2 * e1) / (r1 - r2)
        m12 = (e1 - e2) / (r1 - r2)
        m22 = (r1 * e1 - r2 * e2) / (r1 - r2)
    else:
        # critically damped
        decay = math.exp(-sigma * h)
        m11 = decay * (1.0 + sigma * h)
        m12 = decay * h
        m22 = decay * (1.0 - sigma * h)
    return np.array([[m11, m12], [-kp * m12, m22]])


def coupling_step(e, e_dot, params: CouplingParams):
    """Advance the coupling error state one control period.

    ``e`` and ``e_dot`` may be scalars or vectors of any matching shape.
    In the default mode the error energy 0.5 k_p |e|^2 + 0.5 |e'|^2 never
    increases; the literal mode is the divergent printed update, kept for
    side-by-side demonstration.
    """
    e = np.asarray(e, dtype=float)
    e_dot = np.asarray(e_dot, dtype=float)
    if params.mode == "literal":
        e_next = params.spring * e + params.damper * e_dot
        e_dot_next = (e_next - e) / params.dt
        return e_next, e_dot_next
    m = coupling_matrix(params)
    return m[0, 0] * e + m[0, 1] * e_dot, m[1, 0] * e + m[1, 1] * e_dot


def coupling_energy(e, e_dot, params: CouplingParams) -> float:
    """Virtual spring-damper energy of an error state."""
    e = np.asarray(e, dtype=float)
    e_dot = np.asarray(e_dot, dtype=float)
    return 0.5 * params.k_p * float(np.sum(e * e)) + 0.5 * float(np.sum(e_dot * e_dot))


def _pose_gap(x_l: Pose, x_des: Pose) -> np.ndarray:
    """6-vector error: position difference, then the rotation log of the
    follower pose seen from the desired frame."""
    dp = x_l.position - x_des.position
    drot = (x_des.rotation.inverse() * x_l.rotation).rotvec()
    return np.concatenate([dp, drot])


def _apply_gap(x_des: Pose, gap: np.ndarray) -> Pose:
    return Pose(x_des.rotation * Rotation.from_rotvec(gap[3:]),
                x_des.position + gap[:3])


def coupled_follower_target(x_l: Pose, xd_l, x_r_des: Pose, xd_r_des,
                            params: CouplingParams = CouplingParams()) -> Pose:
    """Next commanded follower pose under the spring-damper coupling.

    Twists are 6-vectors (linear; angular). The relative twist seeds the
    error rate; the error state is advanced one period and re-anchored on
    the desired pose.
    """
    pose, _ = coupled_follower_step(x_l, xd_l, x_r_des, xd_r_des, params)
    return pose


def coupled_follower_step(x_l: Pose, xd_l, x_r_des: Pose, xd_r_des,
                          params: CouplingParams = CouplingParams()):
    """Like coupled_follower_target but also returns the follower twist
    after the step, for callers threading velocity state."""
    xd_l = np.asarray(xd_l, dtype=float)
    xd_r_des = np.asarray(xd_r_des, dtype=float)
    if xd_l.shape != (6,) or xd_r_des.shape != (6,):
        raise StructuralError("twists must be 6-vectors")
    gap = _pose_gap(x_l, x_r_des)
    gap_rate = xd_l - xd_r_des
    gap_next, rate_next = coupling_step(gap, gap_rate, params)
    return _apply_gap(x_r_des, gap_next), rate_next + xd_r_des
