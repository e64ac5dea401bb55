"""Figure-8 (homoclinic) box dynamics under impulsive noise.

Only the box dynamics near the saddle are modelled. A block starting in
``S_n = [a, b] x kappa^-n [a, b]`` takes ``n`` linear steps
``H(x, y) = (kappa^-2 x, kappa y)`` into ``U_2n``, then ``k0`` transit steps
that together equal the quarter turn ``R(x, y) = (a + b - y, x)`` (modelled
as ``k0 - 1`` identity steps followed by ``R``), landing in ``S_2n``. The
impulse then moves the point to ``S_target`` by scaling ``y`` with
``kappa^(2n - target)``.

All Jacobians in this model are signed powers of ``kappa``, so cocycles are
kept as :class:`LogMat2` with base ``kappa`` and integral exponents.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import _backend
from .core import RandomMapSystem
from .logmat import LogMat2
from .noise import BoxIndexDist, DoublingLaw, RngStream
from .ottyorke import FtleSeries


@dataclass(frozen=True)
class GgsParams:
    kappa: float = 2.0
    a: float = 1.2
    b: float = 1.4
    n0: int = 2
    k0: int = 2

    def __post_init__(self):
        if not 1.0 < self.a < self.b < self.kappa:
            raise ValueError(f"need 1 < a < b < kappa, got a={self.a}, b={self.b}, kappa={self.kappa}")
        if self.n0 < 1 or self.k0 < 1:
            raise ValueError("n0 and k0 must be positive integers")

    @property
    def logk(self) -> float:
        return math.log(self.kappa)

    @property
    def center(self) -> float:
        return 0.5 * (self.a + self.b)


class Rect(NamedTuple):
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float


class Fig8InvariantError(RuntimeError):
    pass


def box_S(n: int, params: GgsParams) -> Rect:
    if n < params.n0:
        raise ValueError(f"box index {n} below n0={params.n0}")
    s = params.kappa ** (-n)
    return Rect(params.a, params.b, s * params.a, s * params.b)


def box_U(n: int, params: GgsParams) -> Rect:
    s = params.kappa ** (-n)
    return Rect(s * params.a, s * params.b, params.a, params.b)


def contains(rect: Rect, p, rtol: float = 0.0) -> bool:
    """Closed-box membership; ``rtol`` widens each side relative to its coordinate scale."""
    x, y = float(p[0]), float(p[1])
    dx = rtol * max(abs(rect.x_lo), abs(rect.x_hi))
    dy = rtol * max(abs(rect.y_lo), abs(rect.y_hi))
    return rect.x_lo - dx <= x <= rect.x_hi + dx and rect.y_lo - dy <= y <= rect.y_hi + dy


def find_box(p, params: GgsParams, rtol: float = 0.0) -> Optional[int]:
    """Index ``m >= n0`` with ``p`` in ``S_m``, or None."""
    x, y = float(p[0]), float(p[1])
    if y <= 0.0 or not params.a * (1 - rtol) <= x <= params.b * (1 + rtol):
        return None
    # y in kappa^-m [a, b]  <=>  m in [log_k(a / y), log_k(b / y)], an interval shorter than 1
    m = math.ceil(math.log(params.a / y) / params.logk - 1e-9)
    for cand in (m, m + 1, m - 1):
        if cand >= params.n0 and contains(box_S(cand, params), p, rtol):
            return cand
    return None


def h_step(p, params: GgsParams):
    k = params.kappa
    return np.array([p[0] / (k * k), k * p[1]]), np.diag([1.0 / (k * k), k])


def rotation_R(p, params: GgsParams):
    return (
        np.array([params.a + params.b - p[1], float(p[0])]),
        np.array([[0.0, -1.0], [1.0, 0.0]]),
    )


def _lm_H(logk):
    return LogMat2.diag((1, -2.0), (1, 1.0), logk)


def _lm_R(logk):
    return LogMat2.antidiag((-1, 0.0), (1, 0.0), logk)


def _lm_impulse(shift, logk):
    return LogMat2.diag((1, 0.0), (1, float(shift)), logk)


def block_map(n: int, p, params: GgsParams):
    """Closed form of the ``n + k0`` steps from ``S_n``: lands in ``S_2n``."""
    if not contains(box_S(n, params), p):
        raise ValueError(f"point {tuple(p)} is not in S_{n}")
    k = params.kappa
    q = np.array([params.a + params.b - k**n * p[1], k ** (-2 * n) * p[0]])
    J = LogMat2.antidiag((-1, float(n)), (1, float(-2 * n)), params.logk)
    return q, J


def impulse(p, target: int, params: GgsParams, source: Optional[int] = None):
    """``(x, y) -> (x, kappa^(m - target) y)`` on ``S_m``; identity off the boxes."""
    m = find_box(p, params) if source is None else source
    if m is None:
        return np.array(p, dtype=float), LogMat2.identity(params.logk)
    if target < params.n0:
        raise ValueError(f"target {target} below n0={params.n0}")
    d = m - target
    return np.array([float(p[0]), params.kappa**d * p[1]]), _lm_impulse(d, params.logk)


@dataclass(frozen=True)
class BlockState:
    """Orbit position: box index ``n`` of the current block, phase in [0, n + k0), point."""

    n: int
    phase: int
    point: tuple

    @classmethod
    def start(cls, n: int, point) -> "BlockState":
        return cls(int(n), 0, (float(point[0]), float(point[1])))


# relative slack for membership checks of points that went through inexact scalings
_SLACK = 1e-9


def _expected_region(s: BlockState, params: GgsParams) -> Rect:
    if s.phase <= s.n:
        k2 = params.kappa ** (-2 * s.phase)
        ky = params.kappa ** (s.phase - s.n)
        return Rect(k2 * params.a, k2 * params.b, ky * params.a, ky * params.b)
    return box_U(2 * s.n, params)


def check_block_state(s: BlockState, params: GgsParams):
    if not 0 <= s.phase < s.n + params.k0:
        raise Fig8InvariantError(f"phase out of range: {s}")
    if not contains(_expected_region(s, params), s.point, _SLACK):
        raise Fig8InvariantError(f"point escaped its block region: {s}, params={params}")


def step_fig8(s: BlockState, stream: Optional[RngStream], dist, params: GgsParams, target: Optional[int] = None):
    """One step of ``I_omega o f``; returns ``(new_state, step_jacobian)``.

    A box index is drawn only when the step completes a block. ``target``
    bypasses the draw (used by the random-map adapter).
    """
    check_block_state(s, params)
    lk = params.logk
    if s.phase < s.n:
        p, _ = h_step(s.point, params)
        new = BlockState(s.n, s.phase + 1, (float(p[0]), float(p[1])))
        J = _lm_H(lk)
    elif s.phase < s.n + params.k0 - 1:
        new = BlockState(s.n, s.phase + 1, s.point)
        J = LogMat2.identity(lk)
    else:
        p, _ = rotation_R(s.point, params)
        if not contains(box_S(2 * s.n, params), p, _SLACK):
            raise Fig8InvariantError(f"block end {tuple(p)} not in S_{2 * s.n}: {s}")
        if target is None:
            target = dist.sample(stream, s.n)
        if target < params.n0:
            raise Fig8InvariantError(f"drawn index {target} below n0={params.n0}")
        p, Jimp = impulse(p, target, params, source=2 * s.n)
        new = BlockState(int(target), 0, (float(p[0]), float(p[1])))
        J = Jimp @ _lm_R(lk)
    check_block_state(new, params)
    return new, J


class ReturnSchedule:
    """Box indices ``(n_1, n_2, ...)`` and return times ``N(k) = sum_{i<=k} (n_i + k0)``."""

    def __init__(self, n_sequence: Sequence[int], k0: int):
        self.n_sequence = [int(n) for n in n_sequence]
        self.k0 = int(k0)
        self.N = np.cumsum([n + self.k0 for n in self.n_sequence]).astype(np.int64)

    def time(self, k: int) -> int:
        return 0 if k == 0 else int(self.N[k - 1])


def closed_form_cocycle(n1: int, later: Sequence[int], returns: int, ell: int, params: GgsParams, v):
    """``D f_omega^(N(j) + ell)`` in closed form, with ``j = returns``.

    For ``j = 2k - 1``::

        [[0, (-1)^k kappa^(n1 - 2 ell)], [(-1)^(k-1) kappa^(-n_2k + ell), 0]]

    and for ``j = 2k``::

        diag((-1)^k kappa^(-2 ell), (-1)^k kappa^(n1 - n_(2k+1) + ell))

    valid for ``0 <= ell <= n_(j+1)``; during the transit steps
    ``n_(j+1) < ell < n_(j+1) + k0`` the matrix is frozen at ``ell = n_(j+1)``.
    ``later`` is ``(n_2, n_3, ...)`` and must reach ``n_(j+1)``.
    Returns ``(log ||A v||, A)``.
    """
    seq = [int(n1)] + [int(n) for n in later]
    j = int(returns)
    if j < 0 or j >= len(seq):
        raise ValueError(f"need n_{j + 1}; only {len(seq)} indices given")
    nxt = seq[j]
    if not 0 <= ell < nxt + params.k0:
        raise ValueError(f"ell={ell} outside [0, {nxt + params.k0})")
    ell = min(ell, nxt)
    lk = params.logk
    if j % 2 == 1:
        k = (j + 1) // 2
        sgn = -1 if k % 2 else 1
        A = LogMat2.antidiag((sgn, float(n1 - 2 * ell)), (-sgn, float(-nxt + ell)), lk)
    else:
        k = j // 2
        sgn = -1 if k % 2 else 1
        A = LogMat2.diag((sgn, float(-2 * ell)), (sgn, float(n1 - nxt + ell)), lk)
    return A.log_norm_apply(v), A


def return_time(seq: Sequence[int], k: int, k0: int) -> int:
    return int(sum(n + k0 for n in seq[:k]))


class Fig8RandomMap(RandomMapSystem):
    """Random-map view of the impulsive system on :class:`BlockState` states.

    The noise parameter ``t`` in [-1, 1] is pushed through the index law's
    quantile function; it only matters on block-completing steps.
    """

    noise_dim = 1

    def __init__(self, params: GgsParams, dist):
        self.params = params
        self.dist = dist

    def _target(self, t, s: BlockState):
        if isinstance(self.dist, DoublingLaw):
            return 2 * s.n
        u = 0.5 * (float(np.asarray(t).reshape(-1)[0]) + 1.0)
        return int(self.dist.quantile(np.array([min(u, np.nextafter(1.0, 0.0))]))[0])

    def step_with_jacobian(self, t, x):
        return step_fig8(x, None, self.dist, self.params, target=self._target(t, x))

    def step(self, t, x):
        return self.step_with_jacobian(t, x)[0]

    def jacobian(self, t, x):
        return self.step_with_jacobian(t, x)[1]

    def identity(self):
        return LogMat2.identity(self.params.logk)


def fig8_lyapunov_run(params: GgsParams, dist, v, total_steps: int, stream: RngStream, n1: int = 3) -> FtleSeries:
    """Per-step ``(1/n) log ||D f_omega^n(z) v||`` for ``n = 1..total_steps``, ``z`` in ``S_n1``.

    The Jacobian depends only on the symbolic block sequence, so the point
    itself is not tracked here; :func:`step_fig8` covers the geometry.
    Return times and indices used land in ``diagnostics``.
    """
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        raise ValueError("tangent vector must be nonzero")
    if n1 < params.n0:
        raise ValueError(f"n1={n1} below n0={params.n0}")
    if total_steps <= 0:
        empty = FtleSeries(np.zeros(0, dtype=np.int64), np.zeros(0))
        empty.diagnostics.update(return_times=np.zeros(0, dtype=np.int64), indices=np.zeros(0, dtype=np.int64))
        return empty
    doubling = isinstance(dist, DoublingLaw)
    if doubling:
        targets = np.zeros(1, dtype=np.int64)
    else:
        if dist.n0 < params.n0:
            raise ValueError(f"index law starts at {dist.n0}, below n0={params.n0}")
        max_returns = total_steps // (dist.n0 + params.k0) + 1
        targets = np.ascontiguousarray(dist.sample_many(stream, max_returns), dtype=np.int64)
    lognorm, rt, used = _backend.kernels().fig8_run(
        int(n1), int(params.k0), int(total_steps), targets, doubling, params.logk, float(v[0]), float(v[1])
    )
    t = np.arange(1, total_steps + 1, dtype=np.int64)
    series = FtleSeries(t, lognorm / t)
    series.diagnostics.update(
        return_times=np.asarray(rt), indices=np.asarray(used), n1=int(n1), backend=_backend.current()
    )
    return series


def slln_diagnostic(dist: BoxIndexDist, stream: RngStream, N: int):
    """``(n, omega_n / (n + 1))`` for ``n = 0..N-1`` with i.i.d. indices ``omega_n``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    idx = dist.sample_many(stream, N)
    n = np.arange(N, dtype=np.int64)
    return n, idx / (n + 1.0)
