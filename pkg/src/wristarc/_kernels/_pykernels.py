"""Pure-Python versions of the compiled kernels (same signatures)."""

from __future__ import annotations

import math

import numpy as np


def dcd_epoch(X, y, alpha, w, qii, order, C):
    changed = 0
    for i in order:
        g = y[i] * float(w @ X[i]) - 1.0
        a_old = alpha[i]
        if a_old <= 0.0:
            pg = min(g, 0.0)
        elif a_old >= C:
            pg = max(g, 0.0)
        else:
            pg = g
        if abs(pg) <= 1e-12:
            continue
        a_new = min(max(a_old - g / qii[i], 0.0), C)
        delta = (a_new - a_old) * y[i]
        if delta != 0.0:
            alpha[i] = a_new
            w += delta * X[i]
            changed += 1
    return changed


def _mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def _normalize(q):
    n = math.sqrt(sum(c * c for c in q))
    return tuple(c / n for c in q)


def fuse_quaternions(gyro, acc, mag, dt, gain, use_mag, q0):
    n = gyro.shape[0]
    out = np.empty((n, 4))
    q = _normalize(tuple(float(c) for c in q0))
    gyro, acc, mag = gyro.tolist(), acc.tolist(), mag.tolist()
    for k in range(n):
        wx, wy, wz = gyro[k]
        wn = math.sqrt(wx * wx + wy * wy + wz * wz)
        if wn > 0.0:
            half = 0.5 * wn * dt
            s = math.sin(half) / wn
            q = _mul(q, (math.cos(half), wx * s, wy * s, wz * s))
        ax, ay, az = acc[k]
        an = math.sqrt(ax * ax + ay * ay + az * az)
        if gain > 0.0 and an > 0.0:
            ax, ay, az = ax / an, ay / an, az / an
            qw, qx, qy, qz = q
            ux = 2.0 * (qx * qz - qw * qy)
            uy = 2.0 * (qy * qz + qw * qx)
            uz = qw * qw - qx * qx - qy * qy + qz * qz
            cx, cy, cz = ay * uz - az * uy, az * ux - ax * uz, ax * uy - ay * ux
            cn = math.sqrt(cx * cx + cy * cy + cz * cz)
            if cn > 1e-15:
                theta = gain * math.atan2(cn, ax * ux + ay * uy + az * uz)
                s = math.sin(0.5 * theta) / cn
                q = _mul(q, (math.cos(0.5 * theta), cx * s, cy * s, cz * s))
        if use_mag and gain > 0.0:
            mx, my, mz = mag[k]
            qw, qx, qy, qz = q
            hx = ((1.0 - 2.0 * (qy * qy + qz * qz)) * mx
                  + 2.0 * (qx * qy - qw * qz) * my
                  + 2.0 * (qx * qz + qw * qy) * mz)
            hy = (2.0 * (qx * qy + qw * qz) * mx
                  + (1.0 - 2.0 * (qx * qx + qz * qz)) * my
                  + 2.0 * (qy * qz - qw * qx) * mz)
            if hx * hx + hy * hy > 1e-24:
                psi = -gain * math.atan2(hy, hx)
                q = _mul((math.cos(0.5 * psi), 0.0, 0.0, math.sin(0.5 * psi)), q)
        q = _normalize(q)
        out[k] = q
    return out
