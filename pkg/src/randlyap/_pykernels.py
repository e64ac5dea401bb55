"""Pure-Python twins of the compiled kernels in ``_ckernels.pyx``.

Operation order matches the Cython code so both backends agree to the last
bit on platforms where ``math`` and ``libm`` share implementations.
"""

import math

import numpy as np

from .rkf45 import A, B5

PI = math.pi
HALF_PI = 0.5 * math.pi
LOG2 = math.log(2.0)
NUDGE = 1e-15

A21 = A[1][0]
A31, A32 = A[2][0], A[2][1]
A41, A42, A43 = A[3][0], A[3][1], A[3][2]
A51, A52, A53, A54 = A[4][0], A[4][1], A[4][2], A[4][3]
A61, A62, A63, A64, A65 = A[5][0], A[5][1], A[5][2], A[5][3], A[5][4]
B1, B3, B4, B5_, B6 = B5[0], B5[2], B5[3], B5[4], B5[5]


def _stretched_rhs(p, q, a):
    tp = math.tanh(p)
    tq = math.tanh(q)
    return a * tp - tq, tp + a * tq


def _stretched_step(p0, q0, a, h):
    f = _stretched_rhs
    k1p, k1q = f(p0, q0, a)
    k2p, k2q = f(p0 + h * (A21 * k1p), q0 + h * (A21 * k1q), a)
    k3p, k3q = f(p0 + h * (A31 * k1p + A32 * k2p), q0 + h * (A31 * k1q + A32 * k2q), a)
    k4p, k4q = f(p0 + h * (A41 * k1p + A42 * k2p + A43 * k3p),
                 q0 + h * (A41 * k1q + A42 * k2q + A43 * k3q), a)
    k5p, k5q = f(p0 + h * (A51 * k1p + A52 * k2p + A53 * k3p + A54 * k4p),
                 q0 + h * (A51 * k1q + A52 * k2q + A53 * k3q + A54 * k4q), a)
    k6p, k6q = f(p0 + h * (A61 * k1p + A62 * k2p + A63 * k3p + A64 * k4p + A65 * k5p),
                 q0 + h * (A61 * k1q + A62 * k2q + A63 * k3q + A64 * k4q + A65 * k5q), a)
    p = p0 + h * (B1 * k1p + B3 * k3p + B4 * k4p + B5_ * k5p + B6 * k6p)
    q = q0 + h * (B1 * k1q + B3 * k3q + B4 * k4q + B5_ * k5q + B6 * k6q)
    return p, q


def _logcosh(x):
    x = abs(x)
    return x + math.log1p(math.exp(-2.0 * x)) - LOG2


def log_speed(p, q, a):
    """log of the square-coordinate speed |f(x, y)| at stretched coordinates (p, q)."""
    dp, dq = _stretched_rhs(p, q, a)
    l1 = math.log(abs(dp)) - _logcosh(p) if dp != 0.0 else -math.inf
    l2 = math.log(abs(dq)) - _logcosh(q) if dq != 0.0 else -math.inf
    hi, lo = (l1, l2) if l1 >= l2 else (l2, l1)
    if hi == -math.inf:
        return -math.inf
    if lo == -math.inf:
        return hi
    return hi + 0.5 * math.log1p(math.exp(2.0 * (lo - hi)))


def _fold_coord(u, kick):
    x = u + kick
    k = math.floor((x + HALF_PI) / PI)
    x = x - k * PI
    nudged = 0
    if x <= -HALF_PI:
        x = -HALF_PI + NUDGE
        nudged = 1
    elif x >= HALF_PI:
        x = HALF_PI - NUDGE
        nudged = 1
    return x, k, nudged


def fold_stretched(p, q, kx, ky):
    """Kick and fold in stretched coordinates; returns (p, q, nudges)."""
    if kx == 0.0 and ky == 0.0:
        return p, q, 0
    u, k, n1 = _fold_coord(2.0 * math.atan(math.tanh(0.5 * p)), kx)
    v, l, n2 = _fold_coord(2.0 * math.atan(math.tanh(0.5 * q)), ky)
    if k == 0 and l == 0:
        s = 1.0
    elif (k + l) % 2 == 0:
        s = -1.0
    else:
        s = 1.0
    return s * math.asinh(math.tan(u)), s * math.asinh(math.tan(v)), n1 + n2


def oy_run(p, q, a, h, nsub, noise, eps):
    n = noise.shape[0]
    out = np.empty(n, dtype=np.float64)
    nudged = 0
    bad = -1
    for t in range(n):
        for _ in range(nsub):
            p, q = _stretched_step(p, q, a, h)
        if not (math.isfinite(p) and math.isfinite(q)):
            bad = t
            break
        kx = eps * float(noise[t, 0])
        ky = eps * float(noise[t, 1])
        p, q, nd = fold_stretched(p, q, kx, ky)
        nudged += nd
        out[t] = log_speed(p, q, a)
    return p, q, out, nudged, bad


def _tan_var_rhs(y, a):
    z, w = y[0], y[1]
    rz = math.sqrt(1.0 + z * z)
    rw = math.sqrt(1.0 + w * w)
    fzz = -w * z / (rz * rw) + a
    fzw = -rz / (rw * rw * rw)
    fwz = rw / (rz * rz * rz)
    fww = z * w / (rz * rw) + a
    return (
        -w * (rz / rw) + a * z,
        z * (rw / rz) + a * w,
        fzz * y[2] + fzw * y[4],
        fzz * y[3] + fzw * y[5],
        fwz * y[2] + fww * y[4],
        fwz * y[3] + fww * y[5],
    )


def oy_unit_flow(z, w, a, h, nsub):
    y = [z, w, 1.0, 0.0, 0.0, 1.0]
    bad = -1
    rng6 = range(6)
    for j in range(nsub):
        k1 = _tan_var_rhs(y, a)
        k2 = _tan_var_rhs([y[i] + h * (A21 * k1[i]) for i in rng6], a)
        k3 = _tan_var_rhs([y[i] + h * (A31 * k1[i] + A32 * k2[i]) for i in rng6], a)
        k4 = _tan_var_rhs([y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
                           for i in rng6], a)
        k5 = _tan_var_rhs([y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
                           for i in rng6], a)
        k6 = _tan_var_rhs([y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                       + A64 * k4[i] + A65 * k5[i]) for i in rng6], a)
        y = [y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5_ * k5[i] + B6 * k6[i])
             for i in rng6]
        if not (math.isfinite(y[0]) and math.isfinite(y[1])):
            bad = j
            break
    return tuple(y), bad


def fig8_run(n1, k0, total, targets, doubling, logk, v1, v2):
    out = np.empty(total, dtype=np.float64)
    rt = []
    used = []
    e1, e2, c1, c2 = 0, 0, 0, 1
    s1, s2 = 1, 1
    n, phase = n1, 0
    lv = (math.log(abs(v1)) if v1 != 0.0 else -math.inf,
          math.log(abs(v2)) if v2 != 0.0 else -math.inf)
    for step in range(total):
        if phase < n:
            e1 -= 2
            e2 += 1
        elif phase == n + k0 - 1:
            s1, e1, c1, s2, e2, c2 = -s2, e2, c2, s1, e1, c1
            target = 2 * n if doubling else int(targets[len(rt)])
            e2 += 2 * n - target
            rt.append(step + 1)
            used.append(target)
            n = target
            phase = -1
        phase += 1
        la = lv[c1] + e1 * logk
        lb = lv[c2] + e2 * logk
        hi, lo = (la, lb) if la >= lb else (lb, la)
        if hi == -math.inf:
            out[step] = -math.inf
        elif lo == -math.inf:
            out[step] = hi
        else:
            out[step] = hi + 0.5 * math.log1p(math.exp(2.0 * (lo - hi)))
    return out, np.array(rt, dtype=np.int64), np.array(used, dtype=np.int64)
