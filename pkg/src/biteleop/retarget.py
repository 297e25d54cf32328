"""Map fused hand keypoints to robot hand joint angles.

The solver fits fingertip vectors: minimize over q

    sum_i || alpha * v_i - f_i(q) ||^2  +  beta * || q - q_prev ||^2

where v_i are palm-frame human fingertip vectors, f_i the model's
fingertip map, alpha the human-to-robot scale, and the second term keeps
successive frames smooth. Gauss-Newton with Levenberg damping; steps are
clamped to joint limits before acceptance, so the objective never
increases from the warm start.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, StructuralError
from .fusion import MIDDLE_BASE, TIPS, WRIST, KeypointSet, palm_normal
from .hand import HandModel
from .chain import JointVector


@dataclass(frozen=True)
class RetargetParams:
    scale: float = 1.5          # alpha: robot hand size / human hand size
    smoothness: float = 0.1     # beta on || q - q_prev ||^2
    max_iterations: int = 25
    tolerance: float = 1e-8     # stop when objective improves less than this

    def __post_init__(self):
        if not self.scale > 0:
            raise StructuralError("scale must be positive")
        if self.smoothness < 0:
            raise StructuralError("smoothness must be non-negative")


def palm_frame(k: KeypointSet):
    """Palm frame axes from a skeleton: origin at the wrist, x toward the
    middle-finger base, z along the palm normal (orthogonalized).
    Returns (3x3 rotation matrix with axis columns, wrist position)."""
    w = k.points[WRIST]
    x = k.points[MIDDLE_BASE] - w
    nx = float(np.linalg.norm(x))
    if nx < 1e-12:
        raise DegenerateGeometryError("middle finger base coincides with wrist")
    x = x / nx
    n = palm_normal(k)
    z = n - float(n @ x) * x
    nz = float(np.linalg.norm(z))
    if nz < 1e-9:
        raise DegenerateGeometryError("palm normal is parallel to the palm x axis")
    z = z / nz
    y = np.cross(z, x)
    return np.column_stack([x, y, z]), w


def keypoint_vectors(k: KeypointSet) -> np.ndarray:
    """Fingertip-minus-wrist vectors in the palm frame, (5, 3), ordered
    thumb to pinky. Invariant under rigid motion of the whole skeleton."""
    frame, wrist = palm_frame(k)
    return (k.points[list(TIPS)] - wrist) @ frame


def objective(v, q_angles, q_prev_angles, model: HandModel,
              params: RetargetParams) -> float:
    """The fitting cost at a given configuration."""
    fv = model.fingertip_vectors(model.joint_vector(q_angles))
    data = params.scale * np.asarray(v, dtype=float) - fv
    smooth = q_angles - q_prev_angles
    return float(np.sum(data * data) + params.smoothness * float(smooth @ smooth))


def retarget(v, q_prev: JointVector, model: HandModel,
             params: RetargetParams = RetargetParams()) -> JointVector:
    """Solve for joint angles tracking the given fingertip vectors,
    warm-started at ``q_prev``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (len(model.fingers), 3):
        raise StructuralError(
            "expected %d fingertip vectors, got shape %s" % (len(model.fingers), v.shape))
    if not np.all(np.isfinite(v)):
        raise StructuralError("fingertip vectors contain non-finite values")
    q_prev_angles = model.clamp(model.check(q_prev))
    target = params.scale * v

    q = q_prev_angles.copy()
    cost = objective(v, q, q_prev_angles, model, params)
    mu = 1e-3
    sqrt_beta = np.sqrt(params.smoothness)
    eye = np.eye(model.dof)

    for _ in range(params.max_iterations):
        fv = model.fingertip_vectors(model.joint_vector(q))
        jac_f = model.fingertip_jacobian(model.joint_vector(q))
        # stacked residual: data rows then smoothness rows
        r = np.concatenate([(target - fv).ravel(), sqrt_beta * (q - q_prev_angles)])
        jr = np.vstack([-jac_f, sqrt_beta * eye])
        g = jr.T @ r
        h = jr.T @ jr

        stepped = False
        for _ in range(8):
            try:
                dq = np.linalg.solve(h + mu * eye, -g)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            q_new = model.clamp(q + dq)
            cost_new = objective(v, q_new, q_prev_angles, model, params)
            if cost_new < cost:
                improved = cost - cost_new
                q = q_new
                cost = cost_new
                mu = max(mu / 10.0, 1e-12)
                stepped = True
                break
            mu *= 10.0
        if not stepped:
            break
        if improved < params.tolerance:
            break
    return model.joint_vector(q)


def retarget_keypoints(k: KeypointSet, q_prev: JointVector, model: HandModel,
                       params: RetargetParams = RetargetParams()) -> JointVector:
    """Full pipeline step: palm-frame extraction plus the solve."""
    return retarget(keypoint_vectors(k), q_prev, model, params)
