# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kinematics kernels.

Mirrors ``_reference.py`` operation for operation; keep the two in sync.
The build flags disable float contraction so results stay bit-identical
with the pure backend.
"""

from libc.math cimport sin, cos

import numpy as np


cdef inline void qmul(double* r, double aw, double ax, double ay, double az,
                      double bw, double bx, double by, double bz) nogil:
    r[0] = aw * bw - ax * bx - ay * by - az * bz
    r[1] = aw * bx + ax * bw + ay * bz - az * by
    r[2] = aw * by - ax * bz + ay * bw + az * bx
    r[3] = aw * bz + ax * by - ay * bx + az * bw


cdef inline void qrot(double* r, double w, double x, double y, double z,
                      double vx, double vy, double vz) nogil:
    cdef double cx = y * vz - z * vy
    cdef double cy = z * vx - x * vz
    cdef double cz = x * vy - y * vx
    cdef double dx = y * cz - z * cy
    cdef double dy = z * cx - x * cz
    cdef double dz = x * cy - y * cx
    r[0] = vx + 2.0 * (w * cx + dx)
    r[1] = vy + 2.0 * (w * cy + dy)
    r[2] = vz + 2.0 * (w * cz + dz)


cdef void _walk(double[::1] base_q, double[::1] base_t,
                double[:, ::1] org_q, double[:, ::1] org_t,
                double[:, ::1] axes, double[:, ::1] coms,
                double[::1] tip_q, double[::1] tip_t, double[::1] q,
                double[::1] ee_q, double[::1] ee_p,
                double[:, ::1] origins, double[:, ::1] waxes,
                double[:, ::1] wcoms) nogil:
    cdef int n = q.shape[0]
    cdef int i
    cdef double rw = base_q[0], rx = base_q[1], ry = base_q[2], rz = base_q[3]
    cdef double px = base_t[0], py = base_t[1], pz = base_t[2]
    cdef double tmp4[4]
    cdef double tmp3[3]
    cdef double half, s

    for i in range(n):
        qrot(tmp3, rw, rx, ry, rz, org_t[i, 0], org_t[i, 1], org_t[i, 2])
        px += tmp3[0]
        py += tmp3[1]
        pz += tmp3[2]
        qmul(tmp4, rw, rx, ry, rz, org_q[i, 0], org_q[i, 1], org_q[i, 2], org_q[i, 3])
        rw = tmp4[0]; rx = tmp4[1]; ry = tmp4[2]; rz = tmp4[3]

        origins[i, 0] = px
        origins[i, 1] = py
        origins[i, 2] = pz
        qrot(tmp3, rw, rx, ry, rz, axes[i, 0], axes[i, 1], axes[i, 2])
        waxes[i, 0] = tmp3[0]
        waxes[i, 1] = tmp3[1]
        waxes[i, 2] = tmp3[2]

        half = 0.5 * q[i]
        s = sin(half)
        qmul(tmp4, rw, rx, ry, rz, cos(half), axes[i, 0] * s, axes[i, 1] * s, axes[i, 2] * s)
        rw = tmp4[0]; rx = tmp4[1]; ry = tmp4[2]; rz = tmp4[3]

        qrot(tmp3, rw, rx, ry, rz, coms[i, 0], coms[i, 1], coms[i, 2])
        wcoms[i, 0] = px + tmp3[0]
        wcoms[i, 1] = py + tmp3[1]
        wcoms[i, 2] = pz + tmp3[2]

    qrot(tmp3, rw, rx, ry, rz, tip_t[0], tip_t[1], tip_t[2])
    px += tmp3[0]
    py += tmp3[1]
    pz += tmp3[2]
    qmul(tmp4, rw, rx, ry, rz, tip_q[0], tip_q[1], tip_q[2], tip_q[3])
    rw = tmp4[0]; rx = tmp4[1]; ry = tmp4[2]; rz = tmp4[3]

    if rw < 0.0:
        rw = -rw; rx = -rx; ry = -ry; rz = -rz
    ee_q[0] = rw; ee_q[1] = rx; ee_q[2] = ry; ee_q[3] = rz
    ee_p[0] = px; ee_p[1] = py; ee_p[2] = pz


def fk_frames(double[::1] base_q, double[::1] base_t,
              double[:, ::1] org_q, double[:, ::1] org_t,
              double[:, ::1] axes, double[:, ::1] coms,
              double[::1] tip_q, double[::1] tip_t, double[::1] q):
    cdef int n = q.shape[0]
    ee_q = np.empty(4)
    ee_p = np.empty(3)
    origins = np.empty((n, 3))
    waxes = np.empty((n, 3))
    wcoms = np.empty((n, 3))
    _walk(base_q, base_t, org_q, org_t, axes, coms, tip_q, tip_t, q,
          ee_q, ee_p, origins, waxes, wcoms)
    return ee_q, ee_p, origins, waxes, wcoms


def fk_pose(double[::1] base_q, double[::1] base_t,
            double[:, ::1] org_q, double[:, ::1] org_t,
            double[:, ::1] axes, double[::1] tip_q, double[::1] tip_t,
            double[::1] q):
    cdef int n = q.shape[0]
    cdef int i
    cdef double rw = base_q[0], rx = base_q[1], ry = base_q[2], rz = base_q[3]
    cdef double px = base_t[0], py = base_t[1], pz = base_t[2]
    cdef double tmp4[4]
    cdef double tmp3[3]
    cdef double half, s

    for i in range(n):
        qrot(tmp3, rw, rx, ry, rz, org_t[i, 0], org_t[i, 1], org_t[i, 2])
        px += tmp3[0]
        py += tmp3[1]
        pz += tmp3[2]
        qmul(tmp4, rw, rx, ry, rz, org_q[i, 0], org_q[i, 1], org_q[i, 2], org_q[i, 3])
        rw = tmp4[0]; rx = tmp4[1]; ry = tmp4[2]; rz = tmp4[3]
        half = 0.5 * q[i]
        s = sin(half)
        qmul(tmp4, rw, rx, ry, rz, cos(half), axes[i, 0] * s, axes[i, 1] * s, axes[i, 2] * s)
        rw = tmp4[0]; rx = tmp4[1]; ry = tmp4[2]; rz = tmp4[3]

    qrot(tmp3, rw, rx, ry, rz, tip_t[0], tip_t[1], tip_t[2])
    px += tmp3[0]
    py += tmp3[1]
    pz += tmp3[2]
    qmul(tmp4, rw, rx, ry, rz, tip_q[0], tip_q[1], tip_q[2], tip_q[3])
    rw = tmp4[0]; rx = tmp4[1]; ry = tmp4[2]; rz = tmp4[3]
    if rw < 0.0:
        rw = -rw; rx = -rx; ry = -ry; rz = -rz
    return np.array([rw, rx, ry, rz]), np.array([px, py, pz])


def jacobian(double[::1] base_q, double[::1] base_t,
             double[:, ::1] org_q, double[:, ::1] org_t,
             double[:, ::1] axes, double[::1] tip_q, double[::1] tip_t,
             double[::1] q):
    cdef int n = q.shape[0]
    cdef int i
    zero_coms = np.zeros((n, 3))
    ee_q = np.empty(4)
    ee_p = np.empty(3)
    origins = np.empty((n, 3))
    waxes = np.empty((n, 3))
    wcoms = np.empty((n, 3))
    _walk(base_q, base_t, org_q, org_t, axes, zero_coms, tip_q, tip_t, q,
          ee_q, ee_p, origins, waxes, wcoms)
    jac = np.empty((6, n))
    cdef double[:, ::1] jv = jac
    cdef double[:, ::1] ov = origins
    cdef double[:, ::1] av = waxes
    cdef double[::1] pv = ee_p
    cdef double zx, zy, zz, rx_, ry_, rz_
    for i in range(n):
        zx = av[i, 0]; zy = av[i, 1]; zz = av[i, 2]
        rx_ = pv[0] - ov[i, 0]
        ry_ = pv[1] - ov[i, 1]
        rz_ = pv[2] - ov[i, 2]
        jv[0, i] = zy * rz_ - zz * ry_
        jv[1, i] = zz * rx_ - zx * rz_
        jv[2, i] = zx * ry_ - zy * rx_
        jv[3, i] = zx
        jv[4, i] = zy
        jv[5, i] = zz
    return jac


def gravity_torques(double[::1] base_q, double[::1] base_t,
                    double[:, ::1] org_q, double[:, ::1] org_t,
                    double[:, ::1] axes, double[:, ::1] coms,
                    double[::1] masses, double[::1] tip_q, double[::1] tip_t,
                    double[::1] q, double[::1] gravity):
    cdef int n = q.shape[0]
    cdef int j, k
    ee_q = np.empty(4)
    ee_p = np.empty(3)
    origins = np.empty((n, 3))
    waxes = np.empty((n, 3))
    wcoms = np.empty((n, 3))
    _walk(base_q, base_t, org_q, org_t, axes, coms, tip_q, tip_t, q,
          ee_q, ee_p, origins, waxes, wcoms)
    tau = np.zeros(n)
    cdef double[::1] tv = tau
    cdef double[:, ::1] ov = origins
    cdef double[:, ::1] av = waxes
    cdef double[:, ::1] cv = wcoms
    cdef double gx = gravity[0], gy = gravity[1], gz = gravity[2]
    cdef double zx, zy, zz, rx_, ry_, rz_, acc
    for j in range(n):
        zx = av[j, 0]; zy = av[j, 1]; zz = av[j, 2]
        acc = 0.0
        for k in range(j, n):
            if masses[k] == 0.0:
                continue
            rx_ = cv[k, 0] - ov[j, 0]
            ry_ = cv[k, 1] - ov[j, 1]
            rz_ = cv[k, 2] - ov[j, 2]
            acc += masses[k] * (
                gx * (zy * rz_ - zz * ry_)
                + gy * (zz * rx_ - zx * rz_)
                + gz * (zx * ry_ - zy * rx_)
            )
        tv[j] = -acc
    return tau
