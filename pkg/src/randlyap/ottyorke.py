"""Ott-Yorke heteroclinic flow on the square [0, pi]^2 under unit-time additive kicks.

Field::

    f1 = cos(y) sin(x) - a cos(x) sin(x)
    f2 = -cos(x) sin(y) - a cos(y) sin(y)

Integration runs in tan coordinates ``z = tan(x - pi/2)``, ``w = tan(y - pi/2)``.
Long deterministic runs push the orbit within ``exp(-1000s)`` of the square's
sides, beyond double range even in tan coordinates, so the experiment kernel
carries the stretched pair ``(asinh z, asinh w)``. There the field is::

    p' = a tanh(p) - tanh(q)
    q' = tanh(p) + a tanh(q)

which is bounded, so nothing overflows. The speed ``|f|`` is recovered in log
form from ``f1 = p' / cosh(p)``, ``f2 = q' / cosh(q)``.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import _backend
from ._pykernels import log_speed
from .core import RandomMapSystem
from .noise import RngStream, draw_uniform_pairs
from .rkf45 import IntegrationError, rkf45_integrate, rkf45_step, steps_per_unit

HALF_PI = 0.5 * math.pi
NUDGE = 1e-15
DEFAULT_X0 = 0.5 * (3.0 + math.pi)


class SquarePoint(NamedTuple):
    x: float
    y: float


class TanPoint(NamedTuple):
    z: float
    w: float


@dataclass(frozen=True)
class FlowParams:
    a: float = 0.03
    epsilon: float = 1e-4
    h: float = 0.001
    T: int = 10_000
    x0: SquarePoint = SquarePoint(DEFAULT_X0, DEFAULT_X0)
    decimation: str = "auto"

    def __post_init__(self):
        if not 0.0 < self.a < 1.0:
            raise ValueError(f"a must lie in (0, 1), got {self.a!r}")
        if not self.epsilon >= 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if not self.h > 0.0:
            raise ValueError("h must be positive")
        steps_per_unit(self.h)
        if self.T < 0:
            raise ValueError("T must be >= 0")
        x, y = self.x0
        if not (0.0 < x < math.pi and 0.0 < y < math.pi):
            raise ValueError("x0 must lie in the open square (0, pi)^2")
        if self.decimation not in ("auto", "none", "geometric"):
            raise ValueError(f"unknown decimation {self.decimation!r}")

    @property
    def nsub(self) -> int:
        return steps_per_unit(self.h)


@dataclass
class FtleSeries:
    """Time-indexed exponent series; ``-inf`` marks a vanishing tangent image."""

    t: np.ndarray
    lam: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.int64)
        self.lam = np.asarray(self.lam, dtype=float)
        if self.t.shape != self.lam.shape:
            raise ValueError("t and lam must have equal length")
        if self.t.size > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("t must be strictly increasing")

    def __len__(self):
        return int(self.t.size)

    def __eq__(self, other):
        return (
            isinstance(other, FtleSeries)
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.lam, other.lam)
        )

    def value_at(self, t: int) -> float:
        i = np.searchsorted(self.t, t)
        if i >= self.t.size or self.t[i] != t:
            raise KeyError(t)
        return float(self.lam[i])


# trig that is exact at float multiples of pi/2 (the square's corners and midpoints)
_QUARTER = ((0.0, 1.0), (1.0, 0.0), (0.0, -1.0), (-1.0, 0.0))


def _sincos(x: float):
    m = round(x / HALF_PI)
    if abs(x - m * HALF_PI) <= 4.0 * math.ulp(max(abs(x), 1.0)):
        return _QUARTER[m % 4]
    return math.sin(x), math.cos(x)


def vector_field(p, a: float):
    sx, cx = _sincos(p[0])
    sy, cy = _sincos(p[1])
    return cy * sx - a * cx * sx, -cx * sy - a * cy * sy


def field_jacobian(p, a: float) -> np.ndarray:
    sx, cx = _sincos(p[0])
    sy, cy = _sincos(p[1])
    return np.array([
        [cy * cx - a * (cx * cx - sx * sx), -sy * sx],
        [sx * sy, -cx * cy - a * (cy * cy - sy * sy)],
    ])


def tan_transform(p) -> TanPoint:
    x, y = p
    if not (0.0 < x < math.pi and 0.0 < y < math.pi):
        raise ValueError(f"tan transform needs a point inside (0, pi)^2, got {tuple(p)}")
    return TanPoint(math.tan(x - HALF_PI), math.tan(y - HALF_PI))


def inverse_tan_transform(q) -> SquarePoint:
    return SquarePoint(math.atan(q[0]) + HALF_PI, math.atan(q[1]) + HALF_PI)


def transformed_field(q, a: float):
    """Push-forward of :func:`vector_field` to tan coordinates: ``z' = (1 + z^2) f1``."""
    z, w = float(q[0]), float(q[1])
    rz = math.sqrt(1.0 + z * z)
    rw = math.sqrt(1.0 + w * w)
    return -w * (rz / rw) + a * z, z * (rw / rz) + a * w


def to_stretched(q):
    return math.asinh(q[0]), math.asinh(q[1])


def from_stretched(p, q) -> TanPoint:
    return TanPoint(math.sinh(p), math.sinh(q))


def rkf45_unit_step(q, a: float, h: float, field=None) -> TanPoint:
    """Advance the tan-coordinate ODE by unit time with ``round(1/h)`` RKF45 steps.

    ``field(q, a) -> (dz, dw)`` overrides the transformed Ott-Yorke field.
    """
    n = steps_per_unit(h)
    if field is None:
        y, bad = _backend.kernels().oy_unit_flow(float(q[0]), float(q[1]), a, h, n)
        if bad >= 0:
            raise IntegrationError(f"non-finite state at RKF45 step {bad}", bad)
        return TanPoint(y[0], y[1])
    y, _ = rkf45_integrate(lambda s: field(TanPoint(s[0], s[1]), a), q, h, n)
    return TanPoint(float(y[0]), float(y[1]))


def unit_flow_with_jacobian(q, a: float, h: float):
    """Unit-time tan-coordinate flow and its derivative (variational RKF45)."""
    n = steps_per_unit(h)
    y, bad = _backend.kernels().oy_unit_flow(float(q[0]), float(q[1]), a, h, n)
    if bad >= 0:
        raise IntegrationError(f"non-finite state at RKF45 step {bad}", bad)
    return TanPoint(y[0], y[1]), np.array([[y[2], y[3]], [y[4], y[5]]])


def _fold_offset(u: float, kick: float, diag: Optional[dict]):
    x = u + kick
    k = math.floor((x + HALF_PI) / math.pi)
    x = x - k * math.pi
    if x <= -HALF_PI or x >= HALF_PI:
        x = -HALF_PI + NUDGE if x <= -HALF_PI else HALF_PI - NUDGE
        if diag is not None:
            diag["nudges"] = diag.get("nudges", 0) + 1
    return x, k


def fold_sign(k: int, l: int) -> float:
    """Sign applied to both tan coordinates after landing in cell (k, l)."""
    if k == 0 and l == 0:
        return 1.0
    return -1.0 if (k + l) % 2 == 0 else 1.0


def apply_noise_and_fold(q, draws, epsilon: float, diag: Optional[dict] = None) -> TanPoint:
    """Kick the square-coordinate point by ``epsilon * draws`` and fold back into the square.

    The kicked point is located in its cell ``[k pi, (k+1) pi] x [l pi, (l+1) pi]``
    and re-tangented with the cell's sign. A kick of exactly zero returns ``q``.
    """
    kx = epsilon * draws[0]
    ky = epsilon * draws[1]
    if kx == 0.0 and ky == 0.0:
        return TanPoint(float(q[0]), float(q[1]))
    u, k = _fold_offset(math.atan(q[0]), kx, diag)
    v, l = _fold_offset(math.atan(q[1]), ky, diag)
    s = fold_sign(k, l)
    if diag is not None:
        diag["last_cell"] = (k, l)
    return TanPoint(s * math.tan(u), s * math.tan(v))


def fold_jacobian(q, q_folded, draws, epsilon: float) -> np.ndarray:
    """Derivative of :func:`apply_noise_and_fold` (diagonal, cell held fixed)."""
    if epsilon * draws[0] == 0.0 and epsilon * draws[1] == 0.0:
        return np.eye(2)
    u, k = _fold_offset(math.atan(q[0]), epsilon * draws[0], None)
    v, l = _fold_offset(math.atan(q[1]), epsilon * draws[1], None)
    s = fold_sign(k, l)
    z, w = q
    z2, w2 = q_folded
    return np.diag([s * (1.0 + z2 * z2) / (1.0 + z * z), s * (1.0 + w2 * w2) / (1.0 + w * w)])


def ftle_flow(t: int, p, a: float) -> float:
    """``(1/t) log |f(p)|`` where ``p`` is the orbit point at unit time ``t``."""
    if t <= 0:
        raise ValueError("t must be >= 1")
    f1, f2 = vector_field(p, a)
    s = f1 * f1 + f2 * f2
    if s == 0.0:
        return -math.inf
    return 0.5 * math.log(s) / t


def ftle_tan(t: int, q, a: float) -> float:
    """Same exponent evaluated from tan coordinates, accurate near the sides."""
    if t <= 0:
        raise ValueError("t must be >= 1")
    p, r = to_stretched(q)
    return log_speed(p, r, a) / t


def record_mask(t_start: int, n: int, T: int, policy: str) -> np.ndarray:
    """Which of the unit times ``t_start+1 .. t_start+n`` are recorded."""
    if policy == "auto":
        policy = "none" if T <= 100_000 else "geometric"
    t = np.arange(t_start + 1, t_start + n + 1)
    if policy == "none":
        return np.ones(n, dtype=bool)
    # every t <= 1000, then the first integer past each point of a 1% geometric grid
    mask = t <= 1000
    hi = t_start + n
    if hi > 1000:
        j_max = math.ceil(math.log(hi / 1000.0) / math.log(1.01)) + 1
        grid = np.unique(np.ceil(1000.0 * 1.01 ** np.arange(j_max + 1)).astype(np.int64))
        grid = grid[(grid > max(t_start, 1000)) & (grid <= hi)]
        mask[grid - t_start - 1] = True
    return mask


def run_oy_experiment(params: FlowParams, stream: RngStream, chunk: int = 50_000) -> FtleSeries:
    """Unit-time loop: integrate, kick and fold, record ``lambda(t)``.

    One (omega, xi) pair is drawn per unit time whatever ``epsilon`` is, so
    runs at different noise levels consume the stream identically.
    """
    kern = _backend.kernels()
    q0 = tan_transform(params.x0)
    p, r = to_stretched(q0)
    nsub = params.nsub
    ts, lams = [], []
    nudges = 0
    done = 0
    while done < params.T:
        n = min(chunk, params.T - done)
        noise = np.ascontiguousarray(draw_uniform_pairs(stream, n))
        p, r, logf, nd, bad = kern.oy_run(p, r, params.a, params.h, nsub, noise, params.epsilon)
        if bad >= 0:
            raise IntegrationError(f"non-finite state at unit time {done + bad + 1}", done + bad + 1)
        nudges += nd
        mask = record_mask(done, n, params.T, params.decimation)
        t = np.arange(done + 1, done + n + 1)
        ts.append(t[mask])
        lams.append(logf[mask] / t[mask])
        done += n
    if ts:
        t_all, lam_all = np.concatenate(ts), np.concatenate(lams)
    else:
        t_all, lam_all = np.zeros(0, dtype=np.int64), np.zeros(0)
    diag = {
        "nudges": nudges,
        "neg_inf": int(np.sum(np.isneginf(lam_all))),
        "final_stretched": (p, r),
        "backend": _backend.current(),
    }
    return FtleSeries(t_all, lam_all, diag)


def tangent_flow_check(params: FlowParams, t: int, h: Optional[float] = None) -> float:
    """Relative residual of ``D phi(x0, t) f(x0) = f(x(t))`` for the deterministic flow.

    Integrates the square-coordinate orbit together with the tangent vector
    started at ``f(x0)``.
    """
    if t == 0:
        return 0.0
    a = params.a
    h = params.h if h is None else h
    n = steps_per_unit(h) * t
    f0 = vector_field(params.x0, a)

    def rhs(s):
        f1, f2 = vector_field((s[0], s[1]), a)
        J = field_jacobian((s[0], s[1]), a)
        return (f1, f2, J[0, 0] * s[2] + J[0, 1] * s[3], J[1, 0] * s[2] + J[1, 1] * s[3])

    y = np.array([params.x0[0], params.x0[1], f0[0], f0[1]], dtype=float)
    for j in range(n):
        y, _ = rkf45_step(rhs, y, h)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite state at RKF45 step {j}", j)
    ft = np.array(vector_field((y[0], y[1]), a))
    return float(np.linalg.norm(y[2:] - ft) / max(np.linalg.norm(ft), 1e-30))


class OttYorkeRandomMap(RandomMapSystem):
    """Unit-time flow followed by the kick-and-fold, as a random map on tan coordinates.

    The noise parameter is the pair ``(omega, xi)`` in [-1, 1]^2.
    """

    noise_dim = 2

    def __init__(self, a=0.03, epsilon=1e-4, h=0.001):
        self.a, self.epsilon, self.h = a, epsilon, h

    def step(self, t, x):
        return self.step_with_jacobian(t, x)[0]

    def jacobian(self, t, x):
        return self.step_with_jacobian(t, x)[1]

    def step_with_jacobian(self, t, x):
        t = np.asarray(t, dtype=float).reshape(-1)
        q1, J = unit_flow_with_jacobian(x, self.a, self.h)
        q2 = apply_noise_and_fold(q1, t, self.epsilon)
        F = fold_jacobian(q1, q2, t, self.epsilon)
        return np.array(q2), F @ J

