"""Pure-Python kinematics kernels.

Fallback backend for the compiled module in ``_native.pyx``; both expose
the same flat-array functions and must produce identical results. The
scalar quaternion arithmetic is written out longhand so the operation
order matches the compiled code.

Array layout per chain (all float64, C-contiguous):
    base_q (4,), base_t (3,)   world-to-first-joint transform
    org_q (n, 4), org_t (n, 3) fixed parent-to-joint transforms
    axes (n, 3)                unit rotation axes, joint frame
    coms (n, 3)                link mass centers, post-rotation joint frame
    masses (n,)                link masses, kg
    tip_q (4,), tip_t (3,)     last-joint-to-end-effector transform
"""

import math

import numpy as np


def _qmul(aw, ax, ay, az, bw, bx, by, bz):
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def _qrot(w, x, y, z, vx, vy, vz):
    # v + 2w(u x v) + 2(u x (u x v)) with u = (x, y, z)
    cx = y * vz - z * vy
    cy = z * vx - x * vz
    cz = x * vy - y * vx
    dx = y * cz - z * cy
    dy = z * cx - x * cz
    dz = x * cy - y * cx
    return (vx + 2.0 * (w * cx + dx), vy + 2.0 * (w * cy + dy), vz + 2.0 * (w * cz + dz))


def fk_frames(base_q, base_t, org_q, org_t, axes, coms, tip_q, tip_t, q):
    """Walk the chain once.

    Returns (ee_q (4,), ee_p (3,), origins (n,3), world_axes (n,3),
    world_coms (n,3)). Origins and axes are taken before the joint's own
    rotation, mass centers after it.
    """
    n = q.shape[0]
    origins = np.empty((n, 3))
    waxes = np.empty((n, 3))
    wcoms = np.empty((n, 3))

    rw, rx, ry, rz = base_q[0], base_q[1], base_q[2], base_q[3]
    px, py, pz = base_t[0], base_t[1], base_t[2]

    for i in range(n):
        tx, ty, tz = _qrot(rw, rx, ry, rz, org_t[i, 0], org_t[i, 1], org_t[i, 2])
        px += tx
        py += ty
        pz += tz
        rw, rx, ry, rz = _qmul(rw, rx, ry, rz, org_q[i, 0], org_q[i, 1], org_q[i, 2], org_q[i, 3])

        origins[i, 0] = px
        origins[i, 1] = py
        origins[i, 2] = pz
        ax, ay, az = _qrot(rw, rx, ry, rz, axes[i, 0], axes[i, 1], axes[i, 2])
        waxes[i, 0] = ax
        waxes[i, 1] = ay
        waxes[i, 2] = az

        half = 0.5 * q[i]
        s = math.sin(half)
        rw, rx, ry, rz = _qmul(
            rw, rx, ry, rz, math.cos(half), axes[i, 0] * s, axes[i, 1] * s, axes[i, 2] * s
        )

        cx, cy, cz = _qrot(rw, rx, ry, rz, coms[i, 0], coms[i, 1], coms[i, 2])
        wcoms[i, 0] = px + cx
        wcoms[i, 1] = py + cy
        wcoms[i, 2] = pz + cz

    tx, ty, tz = _qrot(rw, rx, ry, rz, tip_t[0], tip_t[1], tip_t[2])
    px += tx
    py += ty
    pz += tz
    rw, rx, ry, rz = _qmul(rw, rx, ry, rz, tip_q[0], tip_q[1], tip_q[2], tip_q[3])

    # canonical sign keeps downstream quaternion comparisons stable
    if rw < 0.0:
        rw, rx, ry, rz = -rw, -rx, -ry, -rz
    ee_q = np.array([rw, rx, ry, rz])
    ee_p = np.array([px, py, pz])
    return ee_q, ee_p, origins, waxes, wcoms


def fk_pose(base_q, base_t, org_q, org_t, axes, tip_q, tip_t, q):
    """End-effector pose only: (quat (4,), position (3,))."""
    n = q.shape[0]
    rw, rx, ry, rz = base_q[0], base_q[1], base_q[2], base_q[3]
    px, py, pz = base_t[0], base_t[1], base_t[2]
    for i in range(n):
        tx, ty, tz = _qrot(rw, rx, ry, rz, org_t[i, 0], org_t[i, 1], org_t[i, 2])
        px += tx
        py += ty
        pz += tz
        rw, rx, ry, rz = _qmul(rw, rx, ry, rz, org_q[i, 0], org_q[i, 1], org_q[i, 2], org_q[i, 3])
        half = 0.5 * q[i]
        s = math.sin(half)
        rw, rx, ry, rz = _qmul(
            rw, rx, ry, rz, math.cos(half), axes[i, 0] * s, axes[i, 1] * s, axes[i, 2] * s
        )
    tx, ty, tz = _qrot(rw, rx, ry, rz, tip_t[0], tip_t[1], tip_t[2])
    px += tx
    py += ty
    pz += tz
    rw, rx, ry, rz = _qmul(rw, rx, ry, rz, tip_q[0], tip_q[1], tip_q[2], tip_q[3])
    if rw < 0.0:
        rw, rx, ry, rz = -rw, -rx, -ry, -rz
    return np.array([rw, rx, ry, rz]), np.array([px, py, pz])


def jacobian(base_q, base_t, org_q, org_t, axes, tip_q, tip_t, q):
    """Geometric Jacobian, 6 x n, linear rows on top, angular below."""
    n = q.shape[0]
    zero_coms = np.zeros((n, 3))
    _, ee_p, origins, waxes, _ = fk_frames(
        base_q, base_t, org_q, org_t, axes, zero_coms, tip_q, tip_t, q
    )
    jac = np.empty((6, n))
    for i in range(n):
        zx, zy, zz = waxes[i, 0], waxes[i, 1], waxes[i, 2]
        rx_ = ee_p[0] - origins[i, 0]
        ry_ = ee_p[1] - origins[i, 1]
        rz_ = ee_p[2] - origins[i, 2]
        jac[0, i] = zy * rz_ - zz * ry_
        jac[1, i] = zz * rx_ - zx * rz_
        jac[2, i] = zx * ry_ - zy * rx_
        jac[3, i] = zx
        jac[4, i] = zy
        jac[5, i] = zz
    return jac


def gravity_torques(base_q, base_t, org_q, org_t, axes, coms, masses, tip_q, tip_t, q, gravity):
    """Joint torques that statically balance the link weights.

    Equals the gradient of potential energy U(q) = -sum_k m_k g . c_k(q).
    """
    n = q.shape[0]
    _, _, origins, waxes, wcoms = fk_frames(
        base_q, base_t, org_q, org_t, axes, coms, tip_q, tip_t, q
    )
    gx, gy, gz = gravity[0], gravity[1], gravity[2]
    tau = np.zeros(n)
    for j in range(n):
        zx, zy, zz = waxes[j, 0], waxes[j, 1], waxes[j, 2]
        acc = 0.0
        for k in range(j, n):
            if masses[k] == 0.0:
                continue
            rx_ = wcoms[k, 0] - origins[j, 0]
            ry_ = wcoms[k, 1] - origins[j, 1]
            rz_ = wcoms[k, 2] - origins[j, 2]
            # g . (z x r)
            acc += masses[k] * (
                gx * (zy * rz_ - zz * ry_)
                + gy * (zz * rx_ - zx * rz_)
                + gz * (zx * ry_ - zy * rx_)
            )
        tau[j] = -acc
    return tau
