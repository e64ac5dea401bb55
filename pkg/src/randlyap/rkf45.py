"""Fixed-step Runge-Kutta-Fehlberg 4(5).

The 5th-order combination is propagated; the embedded 4th-order result is
kept only as a local error diagnostic. No step-size control: fixed stepping
keeps runs bit-reproducible.
"""

import numpy as np

C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)

A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)

B5 = (16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55)
B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)


class IntegrationError(ArithmeticError):
    """Raised when the state stops being finite; carries the failing step index."""

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


def rkf45_step(rhs, y, h):
    """One RKF45 step of ``y' = rhs(y)``.

    Returns ``(y5, err)`` where ``err`` is the 5th minus 4th order difference.
    """
    y = np.asarray(y, dtype=float)
    k = []
    for i in range(6):
        yi = y
        for j, aij in enumerate(A[i]):
            yi = yi + h * aij * k[j]
        k.append(np.asarray(rhs(yi), dtype=float))
    y5 = y + h * sum(b * ki for b, ki in zip(B5, k) if b != 0.0)
    y4 = y + h * sum(b * ki for b, ki in zip(B4, k) if b != 0.0)
    return y5, y5 - y4


def steps_per_unit(h):
    n = round(1.0 / h)
    if n < 1 or abs(n * h - 1.0) > 1e-9:
        raise ValueError(f"step size h={h!r} does not divide unit time")
    return n


def rkf45_integrate(rhs, y0, h, nsteps):
    """Advance ``nsteps`` fixed steps of size ``h``.

    Returns ``(y, max_err)`` with ``max_err`` the largest embedded error norm seen.
    """
    y = np.asarray(y0, dtype=float)
    max_err = 0.0
    for j in range(nsteps):
        y, err = rkf45_step(rhs, y, h)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite state at RKF45 step {j}", j)
        max_err = max(max_err, float(np.max(np.abs(err))))
    return y, max_err
