# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.  Signatures mirror ``_pykernels`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sin, cos, atan2, fabs

cnp.import_array()


def dcd_epoch(double[:, ::1] X, double[::1] y, double[::1] alpha,
              double[::1] w, double[::1] qii, long long[::1] order, double C):
    """One sweep of exact coordinate maximisation of the linear-SVM dual.

    Updates ``alpha`` and ``w`` in place; returns the number of coordinates
    that moved.
    """
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t k, i, j
    cdef double g, pg, a_old, a_new, delta
    cdef int changed = 0
    for k in range(n):
        i = order[k]
        g = 0.0
        for j in range(d):
            g += w[j] * X[i, j]
        g = y[i] * g - 1.0
        a_old = alpha[i]
        if a_old <= 0.0:
            pg = g if g < 0.0 else 0.0
        elif a_old >= C:
            pg = g if g > 0.0 else 0.0
        else:
            pg = g
        if fabs(pg) <= 1e-12:
            continue
        a_new = a_old - g / qii[i]
        if a_new < 0.0:
            a_new = 0.0
        elif a_new > C:
            a_new = C
        delta = (a_new - a_old) * y[i]
        if delta != 0.0:
            alpha[i] = a_new
            for j in range(d):
                w[j] += delta * X[i, j]
            changed += 1
    return changed


cdef inline void _normalize(double* q) noexcept nogil:
    cdef double nrm = sqrt(q[0]*q[0] + q[1]*q[1] + q[2]*q[2] + q[3]*q[3])
    q[0] /= nrm
    q[1] /= nrm
    q[2] /= nrm
    q[3] /= nrm


cdef inline void _mul(const double* a, const double* b, double* out) noexcept nogil:
    cdef double w = a[0]*b[0] - a[1]*b[1] - a[2]*b[2] - a[3]*b[3]
    cdef double x = a[0]*b[1] + a[1]*b[0] + a[2]*b[3] - a[3]*b[2]
    cdef double y = a[0]*b[2] - a[1]*b[3] + a[2]*b[0] + a[3]*b[1]
    cdef double z = a[0]*b[3] + a[1]*b[2] - a[2]*b[1] + a[3]*b[0]
    out[0] = w
    out[1] = x
    out[2] = y
    out[3] = z


def fuse_quaternions(double[:, ::1] gyro, double[:, ::1] acc, double[:, ::1] mag,
                     double dt, double gain, bint use_mag, double[::1] q0):
    """Propagate and correct the body-to-world attitude quaternion per sample."""
    cdef Py_ssize_t n = gyro.shape[0], k
    out = np.empty((n, 4), dtype=np.float64)
    cdef double[:, ::1] Q = out
    cdef double q[4]
    cdef double dq[4]
    cdef double tmp[4]
    cdef double wx, wy, wz, wn, half, s, an, ax, ay, az, ux, uy, uz
    cdef double cx, cy, cz, cn, theta, mx, my, mz, hx, hy, psi
    cdef double r20, r21, r22, r00, r01, r02, r10, r11, r12
    q[0] = q0[0]; q[1] = q0[1]; q[2] = q0[2]; q[3] = q0[3]
    _normalize(q)
    for k in range(n):
        # gyro propagation: q <- q * exp(omega dt / 2)
        wx = gyro[k, 0]; wy = gyro[k, 1]; wz = gyro[k, 2]
        wn = sqrt(wx*wx + wy*wy + wz*wz)
        if wn > 0.0:
            half = 0.5 * wn * dt
            s = sin(half) / wn
            dq[0] = cos(half); dq[1] = wx * s; dq[2] = wy * s; dq[3] = wz * s
            _mul(q, dq, tmp)
            q[0] = tmp[0]; q[1] = tmp[1]; q[2] = tmp[2]; q[3] = tmp[3]
        # gravity correction in the body frame
        ax = acc[k, 0]; ay = acc[k, 1]; az = acc[k, 2]
        an = sqrt(ax*ax + ay*ay + az*az)
        if gain > 0.0 and an > 0.0:
            ax /= an; ay /= an; az /= an
            ux = 2.0 * (q[1]*q[3] - q[0]*q[2])
            uy = 2.0 * (q[2]*q[3] + q[0]*q[1])
            uz = q[0]*q[0] - q[1]*q[1] - q[2]*q[2] + q[3]*q[3]
            cx = ay*uz - az*uy
            cy = az*ux - ax*uz
            cz = ax*uy - ay*ux
            cn = sqrt(cx*cx + cy*cy + cz*cz)
            if cn > 1e-15:
                theta = gain * atan2(cn, ax*ux + ay*uy + az*uz)
                s = sin(0.5 * theta) / cn
                dq[0] = cos(0.5 * theta); dq[1] = cx * s; dq[2] = cy * s; dq[3] = cz * s
                _mul(q, dq, tmp)
                q[0] = tmp[0]; q[1] = tmp[1]; q[2] = tmp[2]; q[3] = tmp[3]
        # heading correction about the world vertical
        if use_mag and gain > 0.0:
            mx = mag[k, 0]; my = mag[k, 1]; mz = mag[k, 2]
            r00 = 1.0 - 2.0 * (q[2]*q[2] + q[3]*q[3])
            r01 = 2.0 * (q[1]*q[2] - q[0]*q[3])
            r02 = 2.0 * (q[1]*q[3] + q[0]*q[2])
            r10 = 2.0 * (q[1]*q[2] + q[0]*q[3])
            r11 = 1.0 - 2.0 * (q[1]*q[1] + q[3]*q[3])
            r12 = 2.0 * (q[2]*q[3] - q[0]*q[1])
            hx = r00*mx + r01*my + r02*mz
            hy = r10*mx + r11*my + r12*mz
            if hx*hx + hy*hy > 1e-24:
                psi = -gain * atan2(hy, hx)
                dq[0] = cos(0.5 * psi); dq[1] = 0.0; dq[2] = 0.0; dq[3] = sin(0.5 * psi)
                _mul(dq, q, tmp)
                q[0] = tmp[0]; q[1] = tmp[1]; q[2] = tmp[2]; q[3] = tmp[3]
        _normalize(q)
        Q[k, 0] = q[0]; Q[k, 1] = q[1]; Q[k, 2] = q[2]; Q[k, 3] = q[3]
    return out
