"""Forward kinematics, geometric Jacobian, gravity load, and the
damped-least-squares pose tracker the simulator uses to realize
commanded end-effector poses.

All functions are pure; heavy loops run in the selected kernel backend
(see ``_kernels``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .chain import JointVector, SerialChain
from .geometry import Pose, Rotation, pose_error


def forward_kinematics(chain: SerialChain, q: JointVector) -> Pose:
    """World-frame end-effector pose."""
    angles = np.ascontiguousarray(chain.check(q))
    ee_q, ee_p = _kernels.fk_pose(
        chain.base_q, chain.base_t, chain.org_q, chain.org_t,
        chain.axes, chain.tip_q, chain.tip_t, angles)
    return Pose(Rotation.from_quat(ee_q), ee_p)


def joint_origins(chain: SerialChain, q: JointVector) -> np.ndarray:
    """World positions of every joint frame origin, (N, 3)."""
    angles = np.ascontiguousarray(chain.check(q))
    _, _, origins, _, _ = _kernels.fk_frames(
        chain.base_q, chain.base_t, chain.org_q, chain.org_t,
        chain.axes, chain.coms, chain.tip_q, chain.tip_t, angles)
    return np.asarray(origins)


def geometric_jacobian(chain: SerialChain, q: JointVector) -> np.ndarray:
    """6 x N Jacobian, linear rows 0..2, angular rows 3..5.

    Column i is the world-frame end-effector twist produced by unit
    velocity of joint i.
    """
    angles = np.ascontiguousarray(chain.check(q))
    return _kernels.jacobian(
        chain.base_q, chain.base_t, chain.org_q, chain.org_t,
        chain.axes, chain.tip_q, chain.tip_t, angles)


def gravity_torques(chain: SerialChain, q: JointVector, gravity) -> np.ndarray:
    """Joint torques that statically balance link weights under ``gravity``
    (m/s^2, world frame). Equals d(potential energy)/dq."""
    angles = np.ascontiguousarray(chain.check(q))
    g = np.ascontiguousarray(gravity, dtype=float)
    return _kernels.gravity_torques(
        chain.base_q, chain.base_t, chain.org_q, chain.org_t,
        chain.axes, chain.coms, chain.masses, chain.tip_q, chain.tip_t,
        angles, g)


@dataclass(frozen=True)
class TrackParams:
    """Damped-least-squares step parameters."""

    damping: float = 0.05   # lambda, added to J J^T before the solve
    step_cap: float = 0.1   # max ||dq|| per call, rad
    max_backtracks: int = 8


def track_pose(chain: SerialChain, q_current: JointVector, target: Pose,
               params: TrackParams = TrackParams()) -> JointVector:
    """One damped-least-squares step toward ``target``.

    The step is clamped to the joint limits and capped at
    ``params.step_cap``; if the full step does not reduce the pose error
    it is halved up to ``max_backtracks`` times, so the error never
    increases across calls. Unreachable targets settle at the
    minimal-error configuration.
    """
    angles = chain.check(q_current)
    err = pose_error(target, forward_kinematics(chain, q_current))
    err_norm = float(np.linalg.norm(err))
    if err_norm < 1e-12:
        return q_current.copy()

    jac = geometric_jacobian(chain, q_current)
    lam2 = params.damping * params.damping
    a = jac @ jac.T + lam2 * np.eye(6)
    dq = jac.T @ np.linalg.solve(a, err)
    dq_norm = float(np.linalg.norm(dq))
    if dq_norm > params.step_cap:
        dq *= params.step_cap / dq_norm

    scale = 1.0
    for _ in range(params.max_backtracks + 1):
        cand = chain.clamp(angles + scale * dq)
        cand_q = JointVector(chain.name, cand)
        cand_err = float(np.linalg.norm(pose_error(target, forward_kinematics(chain, cand_q))))
        if cand_err <= err_norm:
            return cand_q
        scale *= 0.5
    return q_current.copy()


def solve_pose(chain: SerialChain, q_start: JointVector, target: Pose,
               iterations: int = 500, params: TrackParams = TrackParams(),
               tol_pos: float = 1e-5, tol_rot: float = 1e-4) -> JointVector:
    """Iterate track_pose until converged or out of iterations."""
    q = q_start
    for _ in range(iterations):
        q_next = track_pose(chain, q, target, params)
        pose = forward_kinematics(chain, q_next)
        dp = float(np.linalg.norm(target.position - pose.position))
        dr = pose.rotation.angle_to(target.rotation)
        if dp < tol_pos and dr < tol_rot:
            return q_next
        if np.allclose(q_next.angles, q.angles, atol=1e-15):
            return q_next  # stalled (limits or unreachable)
        q = q_next
    return q
