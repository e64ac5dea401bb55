# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Every function here has a line-for-line twin in ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport tanh, atan, tan, asinh, log, log1p, exp, sqrt, fabs, floor, isfinite, INFINITY

cnp.import_array()

cdef double PI = 3.14159265358979323846
cdef double HALF_PI = 1.57079632679489661923
cdef double LOG2 = 0.69314718055994530942
cdef double NUDGE = 1e-15

# Fehlberg 4(5) tableau
cdef double A21 = 1.0 / 4.0
cdef double A31 = 3.0 / 32.0
cdef double A32 = 9.0 / 32.0
cdef double A41 = 1932.0 / 2197.0
cdef double A42 = -7200.0 / 2197.0
cdef double A43 = 7296.0 / 2197.0
cdef double A51 = 439.0 / 216.0
cdef double A52 = -8.0
cdef double A53 = 3680.0 / 513.0
cdef double A54 = -845.0 / 4104.0
cdef double A61 = -8.0 / 27.0
cdef double A62 = 2.0
cdef double A63 = -3544.0 / 2565.0
cdef double A64 = 1859.0 / 4104.0
cdef double A65 = -11.0 / 40.0
cdef double B1 = 16.0 / 135.0
cdef double B3 = 6656.0 / 12825.0
cdef double B4 = 28561.0 / 56430.0
cdef double B5 = -9.0 / 50.0
cdef double B6 = 2.0 / 55.0


cdef inline void _stretched_rhs(double p, double q, double a, double* dp, double* dq) noexcept nogil:
    cdef double tp = tanh(p)
    cdef double tq = tanh(q)
    dp[0] = a * tp - tq
    dq[0] = tp + a * tq


cdef inline void _stretched_step(double* p, double* q, double a, double h) noexcept nogil:
    cdef double k1p, k1q, k2p, k2q, k3p, k3q, k4p, k4q, k5p, k5q, k6p, k6q
    cdef double p0 = p[0]
    cdef double q0 = q[0]
    _stretched_rhs(p0, q0, a, &k1p, &k1q)
    _stretched_rhs(p0 + h * (A21 * k1p), q0 + h * (A21 * k1q), a, &k2p, &k2q)
    _stretched_rhs(p0 + h * (A31 * k1p + A32 * k2p),
                   q0 + h * (A31 * k1q + A32 * k2q), a, &k3p, &k3q)
    _stretched_rhs(p0 + h * (A41 * k1p + A42 * k2p + A43 * k3p),
                   q0 + h * (A41 * k1q + A42 * k2q + A43 * k3q), a, &k4p, &k4q)
    _stretched_rhs(p0 + h * (A51 * k1p + A52 * k2p + A53 * k3p + A54 * k4p),
                   q0 + h * (A51 * k1q + A52 * k2q + A53 * k3q + A54 * k4q), a, &k5p, &k5q)
    _stretched_rhs(p0 + h * (A61 * k1p + A62 * k2p + A63 * k3p + A64 * k4p + A65 * k5p),
                   q0 + h * (A61 * k1q + A62 * k2q + A63 * k3q + A64 * k4q + A65 * k5q),
                   a, &k6p, &k6q)
    p[0] = p0 + h * (B1 * k1p + B3 * k3p + B4 * k4p + B5 * k5p + B6 * k6p)
    q[0] = q0 + h * (B1 * k1q + B3 * k3q + B4 * k4q + B5 * k5q + B6 * k6q)


cdef inline double _logcosh(double x) noexcept nogil:
    x = fabs(x)
    return x + log1p(exp(-2.0 * x)) - LOG2


cdef inline double _log_speed(double p, double q, double a) noexcept nogil:
    cdef double dp, dq, l1, l2, hi, lo
    _stretched_rhs(p, q, a, &dp, &dq)
    l1 = log(fabs(dp)) - _logcosh(p) if dp != 0.0 else -INFINITY
    l2 = log(fabs(dq)) - _logcosh(q) if dq != 0.0 else -INFINITY
    if l1 >= l2:
        hi = l1
        lo = l2
    else:
        hi = l2
        lo = l1
    if hi == -INFINITY:
        return -INFINITY
    if lo == -INFINITY:
        return hi
    return hi + 0.5 * log1p(exp(2.0 * (lo - hi)))


cdef inline double _fold_coord(double u, double kick, long* cell, long* nudged) noexcept nogil:
    cdef double x = u + kick
    cdef long k = <long>floor((x + HALF_PI) / PI)
    x = x - k * PI
    if x <= -HALF_PI:
        x = -HALF_PI + NUDGE
        nudged[0] += 1
    elif x >= HALF_PI:
        x = HALF_PI - NUDGE
        nudged[0] += 1
    cell[0] = k
    return x


def oy_run(double p, double q, double a, double h, long nsub,
           double[:, ::1] noise, double eps):
    """Unit-time loop in stretched coordinates. Returns (p, q, log_speed, nudges, bad_index)."""
    cdef Py_ssize_t n = noise.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] logf = out
    cdef Py_ssize_t t
    cdef long j, k, l
    cdef long nudged = 0
    cdef long bad = -1
    cdef double kx, ky, u, v, s
    with nogil:
        for t in range(n):
            for j in range(nsub):
                _stretched_step(&p, &q, a, h)
            if not (isfinite(p) and isfinite(q)):
                bad = t
                break
            kx = eps * noise[t, 0]
            ky = eps * noise[t, 1]
            if kx != 0.0 or ky != 0.0:
                u = _fold_coord(2.0 * atan(tanh(0.5 * p)), kx, &k, &nudged)
                v = _fold_coord(2.0 * atan(tanh(0.5 * q)), ky, &l, &nudged)
                if k == 0 and l == 0:
                    s = 1.0
                elif (k + l) % 2 == 0:
                    s = -1.0
                else:
                    s = 1.0
                p = s * asinh(tan(u))
                q = s * asinh(tan(v))
            logf[t] = _log_speed(p, q, a)
    return p, q, out, nudged, bad


cdef inline void _tan_rhs(double z, double w, double a, double* dz, double* dw) noexcept nogil:
    cdef double rz = sqrt(1.0 + z * z)
    cdef double rw = sqrt(1.0 + w * w)
    dz[0] = -w * (rz / rw) + a * z
    dw[0] = z * (rw / rz) + a * w


cdef inline void _tan_var_rhs(double* y, double a, double* dy) noexcept nogil:
    # y = (z, w, j11, j12, j21, j22); tangent columns evolve by the field Jacobian
    cdef double z = y[0]
    cdef double w = y[1]
    cdef double rz = sqrt(1.0 + z * z)
    cdef double rw = sqrt(1.0 + w * w)
    cdef double fzz = -w * z / (rz * rw) + a
    cdef double fzw = -rz / (rw * rw * rw)
    cdef double fwz = rw / (rz * rz * rz)
    cdef double fww = z * w / (rz * rw) + a
    dy[0] = -w * (rz / rw) + a * z
    dy[1] = z * (rw / rz) + a * w
    dy[2] = fzz * y[2] + fzw * y[4]
    dy[3] = fzz * y[3] + fzw * y[5]
    dy[4] = fwz * y[2] + fww * y[4]
    dy[5] = fwz * y[3] + fww * y[5]


def oy_unit_flow(double z, double w, double a, double h, long nsub):
    """RKF45 (5th-order branch) of the tan-coordinate field plus its variational equation."""
    cdef double y[6]
    cdef double tmp[6]
    cdef double k1[6]
    cdef double k2[6]
    cdef double k3[6]
    cdef double k4[6]
    cdef double k5[6]
    cdef double k6[6]
    cdef long j
    cdef int i
    cdef long bad = -1
    y[0] = z; y[1] = w; y[2] = 1.0; y[3] = 0.0; y[4] = 0.0; y[5] = 1.0
    with nogil:
        for j in range(nsub):
            _tan_var_rhs(y, a, k1)
            for i in range(6):
                tmp[i] = y[i] + h * (A21 * k1[i])
            _tan_var_rhs(tmp, a, k2)
            for i in range(6):
                tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
            _tan_var_rhs(tmp, a, k3)
            for i in range(6):
                tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            _tan_var_rhs(tmp, a, k4)
            for i in range(6):
                tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            _tan_var_rhs(tmp, a, k5)
            for i in range(6):
                tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                     + A64 * k4[i] + A65 * k5[i])
            _tan_var_rhs(tmp, a, k6)
            for i in range(6):
                y[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                   + B5 * k5[i] + B6 * k6[i])
            if not (isfinite(y[0]) and isfinite(y[1])):
                bad = j
                break
    return (y[0], y[1], y[2], y[3], y[4], y[5]), bad


def fig8_run(long n1, long k0, long total, long[::1] targets, bint doubling,
             double logk, double v1, double v2):
    """Monomial cocycle accumulation for the figure-8 box dynamics.

    Returns (log_norm, return_times, used_indices); ``log_norm[i]`` is
    log||A^(i+1) v|| in natural log units.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(total, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] rt = np.empty(total // (k0 + 1) + 2, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] used = np.empty(total // (k0 + 1) + 2, dtype=np.int64)
    cdef double[::1] lognorm = out
    cdef long[::1] rtv = rt
    cdef long[::1] usedv = used
    # row r holds sign s_r * kappa**e_r in column c_r
    cdef long e1 = 0, e2 = 0, c1 = 0, c2 = 1, tmp_e, tmp_c
    cdef long s1 = 1, s2 = 1, tmp_s
    cdef long n = n1, phase = 0, nret = 0, target
    cdef long step
    cdef double la, lb, hi, lo
    cdef double lv1 = log(fabs(v1)) if v1 != 0.0 else -INFINITY
    cdef double lv2 = log(fabs(v2)) if v2 != 0.0 else -INFINITY
    for step in range(total):
        if phase < n:
            e1 -= 2
            e2 += 1
        elif phase == n + k0 - 1:
            # quarter turn: new row1 = -row2, new row2 = row1
            tmp_s = s1; tmp_e = e1; tmp_c = c1
            s1 = -s2; e1 = e2; c1 = c2
            s2 = tmp_s; e2 = tmp_e; c2 = tmp_c
            if doubling:
                target = 2 * n
            else:
                target = targets[nret]
            e2 += 2 * n - target
            rtv[nret] = step + 1
            usedv[nret] = target
            nret += 1
            n = target
            phase = -1
        phase += 1
        la = (lv1 if c1 == 0 else lv2) + e1 * logk
        lb = (lv1 if c2 == 0 else lv2) + e2 * logk
        if la >= lb:
            hi = la
            lo = lb
        else:
            hi = lb
            lo = la
        if hi == -INFINITY:
            lognorm[step] = -INFINITY
        elif lo == -INFINITY:
            lognorm[step] = hi
        else:
            lognorm[step] = hi + 0.5 * log1p(exp(2.0 * (lo - hi)))
    return out, rt[:nret].copy(), used[:nret].copy()
