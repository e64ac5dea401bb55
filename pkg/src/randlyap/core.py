"""Random compositions, skew-product stepping, Jacobian cocycles and ergodic averages.

Composition order: the first noise entry is applied first, so the n-step
map is ``f_{t_n} o ... o f_{t_1}`` and its derivative is the left-accumulated
product ``Df_{t_n}(x_{n-1}) ... Df_{t_1}(x_0)``.

States and matrices are duck-typed: most systems use length-2 float arrays
and dense 2x2 arrays, while the figure-8 system uses block states and
:class:`~randlyap.logmat.LogMat2`. Anything supporting ``@`` works.
"""

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

NEG_INF = -math.inf


def vec2(x, y) -> np.ndarray:
    return np.array([float(x), float(y)])


def mat2(a11, a12, a21, a22) -> np.ndarray:
    return np.array([[float(a11), float(a12)], [float(a21), float(a22)]])


class NoiseWord:
    """Finite prefix ``(t_1, ..., t_L)`` of a noise sequence, entries in [-1, 1]^m."""

    def __init__(self, params):
        arr = np.asarray(params, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2:
            raise ValueError("noise word must be a sequence of vectors")
        if arr.size and not np.all(np.abs(arr) <= 1.0):
            raise ValueError("noise parameters must lie in [-1, 1]")
        self.params = arr

    @property
    def dim(self):
        return self.params.shape[1]

    def __len__(self):
        return self.params.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return NoiseWord(self.params[i])
        return self.params[i]

    def shift(self, k: int) -> "NoiseWord":
        """Word with the first ``k`` entries dropped."""
        return NoiseWord(self.params[k:])

    def __eq__(self, other):
        return isinstance(other, NoiseWord) and np.array_equal(self.params, other.params)

    def __repr__(self):
        return f"NoiseWord(len={len(self)}, dim={self.dim})"


class RandomMapSystem:
    """Parametrized family ``x -> f_t(x)``.

    Subclasses implement ``step(t, x)`` and ``jacobian(t, x)``; the Jacobian
    is the derivative of ``step`` in ``x``.
    """

    noise_dim = 1

    def step(self, t, x):
        raise NotImplementedError

    def jacobian(self, t, x):
        raise NotImplementedError

    def step_with_jacobian(self, t, x):
        return self.step(t, x), self.jacobian(t, x)

    def identity(self):
        return np.eye(2)


class InsufficientNoise(ValueError):
    pass


class SingularJacobian(ArithmeticError):
    def __init__(self, step):
        super().__init__(f"singular Jacobian at step {step}")
        self.step = step


def _check_length(w: NoiseWord, n: int):
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > len(w):
        raise InsufficientNoise(f"need {n} noise entries, word has {len(w)}")


def compose_random_orbit(sys: RandomMapSystem, w: NoiseWord, x0, n: int) -> list:
    """``[x0, f_{t_1}(x0), f_{t_2}(f_{t_1}(x0)), ...]``, length ``n + 1``."""
    _check_length(w, n)
    orbit = [x0]
    x = x0
    for k in range(n):
        x = sys.step(w[k], x)
        orbit.append(x)
    return orbit


@dataclass(frozen=True)
class SkewState:
    """Point of the skew product: unread noise starts at ``word[index]``."""

    word: NoiseWord
    index: int
    point: object

    @property
    def remaining(self) -> NoiseWord:
        return self.word.shift(self.index)


def skew_step(sys: RandomMapSystem, s: SkewState) -> SkewState:
    if s.index >= len(s.word):
        raise InsufficientNoise("noise stream exhausted")
    return SkewState(s.word, s.index + 1, sys.step(s.word[s.index], s.point))


def orbit_jacobians(sys: RandomMapSystem, w: NoiseWord, x0, n: int):
    """Per-step Jacobians ``Df_{t_k}(x_{k-1})`` and the orbit, for k = 1..n."""
    _check_length(w, n)
    jacs = []
    orbit = [x0]
    x = x0
    for k in range(n):
        x_next, J = sys.step_with_jacobian(w[k], x)
        jacs.append(J)
        orbit.append(x_next)
        x = x_next
    return jacs, orbit


def cocycle_product(sys: RandomMapSystem, w: NoiseWord, x0, n: int):
    """``A^(n)(w, x0)``, accumulated by left multiplication; ``A^(0)`` is the identity."""
    jacs, _ = orbit_jacobians(sys, w, x0, n)
    A = sys.identity()
    for J in jacs:
        A = J @ A
    return A


def log_norm_apply(A, v) -> float:
    """``log ||A v||``; ``-inf`` when the image vanishes."""
    if hasattr(A, "log_norm_apply"):
        return A.log_norm_apply(v)
    image = np.asarray(A, dtype=float) @ np.asarray(v, dtype=float)
    norm = math.hypot(image[0], image[1])
    return math.log(norm) if norm > 0.0 else NEG_INF


def lyapunov_ftle_discrete(A, v, n: int) -> float:
    """``(1/n) log ||A v||``; returns ``-inf`` (not an error) when ``A v = 0``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        raise ValueError("tangent vector must be nonzero")
    return log_norm_apply(A, v) / n


def birkhoff_average(psi: Callable, orbit: Sequence) -> float:
    """Mean of ``psi`` over ``orbit[0..n-1]`` where ``n = len(orbit)``."""
    if len(orbit) == 0:
        raise ValueError("empty orbit")
    return math.fsum(psi(x) for x in orbit) / len(orbit)


def qr_spectrum(sys: RandomMapSystem, w: NoiseWord, x0, n: int):
    """Benettin/QR estimate ``(l1, l2)`` of the Lyapunov spectrum along ``n`` steps.

    The per-step Jacobian multiplies the current orthonormal frame; the log
    diagonal of the R factor is accumulated. ``l1 + l2`` equals the mean log
    determinant up to round-off.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    jacs, _ = orbit_jacobians(sys, w, x0, n)
    Q = np.eye(2)
    logs1, logs2 = [], []
    for k, J in enumerate(jacs):
        J = J.to_dense() if hasattr(J, "to_dense") else np.asarray(J, dtype=float)
        if not np.linalg.det(J):
            raise SingularJacobian(k)
        Q, R = np.linalg.qr(J @ Q)
        d = np.abs(np.diag(R))
        if np.any(d == 0.0):
            raise SingularJacobian(k)
        logs1.append(math.log(d[0]))
        logs2.append(math.log(d[1]))
    lam = sorted((math.fsum(logs1) / n, math.fsum(logs2) / n), reverse=True)
    return lam[0], lam[1]


def mean_log_det(sys: RandomMapSystem, w: NoiseWord, x0, n: int) -> float:
    jacs, _ = orbit_jacobians(sys, w, x0, n)
    logs = []
    for J in jacs:
        if hasattr(J, "log_abs_det"):
            logs.append(J.log_abs_det())
        else:
            logs.append(math.log(abs(np.linalg.det(np.asarray(J, dtype=float)))))
    return math.fsum(logs) / n


# Reference systems ---------------------------------------------------------


class ShiftSystem(RandomMapSystem):
    """``f_t(x, y) = (x + t, y + t)``."""

    def step(self, t, x):
        s = float(np.asarray(t).reshape(-1)[0])
        return np.asarray(x, dtype=float) + s

    def jacobian(self, t, x):
        return np.eye(2)


class LinearSystem(RandomMapSystem):
    """Constant linear map ``x -> M x`` for every noise value."""

    def __init__(self, M):
        self.M = np.asarray(M, dtype=float)

    def step(self, t, x):
        return self.M @ np.asarray(x, dtype=float)

    def jacobian(self, t, x):
        return self.M.copy()


class NoisyTwistMap(RandomMapSystem):
    """Smooth dissipative twist map with additive noise.

    ``x' = x + c sin(y) + eps t_1``, ``y' = r y + d sin(x) + eps t_2``.
    Its Jacobian ``[[1, c cos y], [d cos x, r]]`` has state-dependent determinant.
    """

    noise_dim = 2

    def __init__(self, c=0.3, d=0.2, r=0.8, eps=0.05):
        self.c, self.d, self.r, self.eps = c, d, r, eps

    def step(self, t, x):
        t = np.asarray(t, dtype=float).reshape(-1)
        t2 = t[1] if t.size > 1 else t[0]
        return np.array([
            x[0] + self.c * math.sin(x[1]) + self.eps * t[0],
            self.r * x[1] + self.d * math.sin(x[0]) + self.eps * t2,
        ])

    def jacobian(self, t, x):
        return np.array([
            [1.0, self.c * math.cos(x[1])],
            [self.d * math.cos(x[0]), self.r],
        ])
