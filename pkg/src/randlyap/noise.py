"""Seeded, counter-based randomness.

Streams are Philox4x64-10 keyed by ``(seed, trajectory_id)``. The ``counter``
of a stream is the number of 64-bit words consumed so far. Word ``c`` is lane
``c % 4`` of the Philox output for counter block ``(c // 4 + 1, 0, 0, 0)``
under key ``(seed, trajectory_id)`` (numpy increments the block before
generating), so it is a pure function of ``(seed, trajectory_id, c)``.
Doubles are formed from the top 53 bits. This mapping is part of the reproducibility contract; do not change it.
"""

import copy
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0**-53


class RngStream:
    """Single-owner counter-based stream of 64-bit words."""

    def __init__(self, seed: int, trajectory_id: int = 0, counter: int = 0):
        if trajectory_id < 0 or counter < 0:
            raise ValueError("trajectory_id and counter must be nonnegative")
        self.seed = int(seed) & _MASK64
        self.trajectory_id = int(trajectory_id)
        self._bitgen = np.random.Philox(
            key=np.array([self.seed, self.trajectory_id & _MASK64], dtype=np.uint64),
            counter=counter // 4,
        )
        self.counter = (counter // 4) * 4
        if counter % 4:
            self.raw(counter % 4)

    def raw(self, n: int) -> np.ndarray:
        out = self._bitgen.random_raw(n)
        self.counter += n
        return np.asarray(out, dtype=np.uint64).reshape(n)

    def uniform01(self, n: int) -> np.ndarray:
        """``n`` doubles on [0, 1)."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * _TWO_M53

    def symmetric(self, n: int) -> np.ndarray:
        """``n`` doubles on [-1, 1)."""
        return 2.0 * self.uniform01(n) - 1.0

    def clone(self) -> "RngStream":
        """Fork: the clone continues from the same counter independently."""
        return copy.deepcopy(self)

    def __repr__(self):
        return f"RngStream(seed={self.seed:#x}, trajectory_id={self.trajectory_id}, counter={self.counter})"


def spawn_stream(seed: int, trajectory_id: int) -> RngStream:
    return RngStream(seed, trajectory_id, 0)


def parse_seed(text) -> int:
    """Accepts decimal or ``0x``-prefixed hex."""
    if isinstance(text, int):
        value = text
    else:
        value = int(str(text).strip(), 0)
    if not 0 <= value <= _MASK64:
        raise ValueError(f"seed {text!r} is not a 64-bit unsigned integer")
    return value


@dataclass(frozen=True)
class UniformCubeNoise:
    """Additive kicks ``epsilon * t`` with ``t`` uniform on the cube [-1, 1]^dim."""

    epsilon: float
    dim: int = 2

    def __post_init__(self):
        if not self.epsilon >= 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if self.dim < 1:
            raise ValueError("dim must be positive")

    def draw(self, stream: RngStream, n: int = 1) -> np.ndarray:
        return stream.symmetric(n * self.dim).reshape(n, self.dim)


def draw_uniform_pair(stream: RngStream):
    w, xi = stream.symmetric(2)
    return float(w), float(xi)


def draw_uniform_pairs(stream: RngStream, n: int) -> np.ndarray:
    """``n`` consecutive pairs; identical to ``n`` calls of :func:`draw_uniform_pair`."""
    return stream.symmetric(2 * n).reshape(n, 2)


class BoxIndexDist:
    """Law of the box index ``n >= n0`` used by the impulsive noise.

    Either ``geometric(q, n0)`` with ``p_n = (1 - q) q**(n - n0)`` or
    ``explicit(weights, n0)`` with ``weights[i] = p_{n0 + i}``.
    """

    def __init__(self, n0: int, q: Optional[float] = None, weights: Optional[Sequence[float]] = None):
        if n0 < 1:
            raise ValueError("n0 must be >= 1")
        if (q is None) == (weights is None):
            raise ValueError("give exactly one of q or weights")
        self.n0 = int(n0)
        self.q = None
        self.weights = None
        if q is not None:
            q = float(q)
            if not 0.0 < q < 1.0:
                raise ValueError(f"geometric q must lie in (0, 1), got {q!r}")
            self.q = q
            self._logq = math.log(q)
        else:
            w = np.asarray(weights, dtype=float)
            if w.ndim != 1 or w.size == 0 or not np.all(np.isfinite(w)):
                raise ValueError("weights must be a finite nonempty list")
            if np.any(w < 0):
                raise ValueError("weights must be nonnegative")
            if abs(w.sum() - 1.0) > 1e-12:
                raise ValueError(f"weights sum to {w.sum()!r}, not 1")
            self.weights = w
            self._cum = np.cumsum(w)

    @classmethod
    def geometric(cls, q: float, n0: int = 2) -> "BoxIndexDist":
        return cls(n0, q=q)

    @classmethod
    def explicit(cls, weights, n0: int) -> "BoxIndexDist":
        return cls(n0, weights=weights)

    @classmethod
    def point_mass(cls, n: int) -> "BoxIndexDist":
        return cls(n, weights=[1.0])

    def mean(self) -> float:
        if self.q is not None:
            return self.n0 + self.q / (1.0 - self.q)
        idx = self.n0 + np.arange(self.weights.size)
        return float(np.dot(idx, self.weights))

    def pmf(self, n: int) -> float:
        j = n - self.n0
        if j < 0:
            return 0.0
        if self.q is not None:
            return (1.0 - self.q) * self.q**j
        return float(self.weights[j]) if j < self.weights.size else 0.0

    def sample_many(self, stream: RngStream, size: int) -> np.ndarray:
        return self.quantile(stream.uniform01(size))

    def quantile(self, u) -> np.ndarray:
        """Index ``n`` with ``F(n - 1) <= u < F(n)``, for ``u`` in [0, 1)."""
        u = np.asarray(u, dtype=float).reshape(-1)
        if np.any((u < 0.0) | (u >= 1.0)):
            raise ValueError("quantile needs u in [0, 1)")
        if self.q is not None:
            # inversion on (0, 1]: P(n0 + j) = (1 - q) q^j
            j = np.floor(np.log1p(-u) / self._logq)
            return (self.n0 + j).astype(np.int64)
        j = np.searchsorted(self._cum, u, side="right")
        j = np.minimum(j, self.weights.size - 1)
        # skip zero-weight tail entries hit through rounding of the cumulative sum
        while np.any(self.weights[j] == 0.0):
            bad = self.weights[j] == 0.0
            j[bad] -= 1
        return (self.n0 + j).astype(np.int64)

    def sample(self, stream: RngStream, current: Optional[int] = None) -> int:
        return int(self.sample_many(stream, 1)[0])

    def __repr__(self):
        if self.q is not None:
            return f"BoxIndexDist.geometric(q={self.q}, n0={self.n0})"
        return f"BoxIndexDist.explicit({self.weights.tolist()}, n0={self.n0})"


class DoublingLaw:
    """Degenerate law ``target = 2 * current``: the deterministic figure-8 return map.

    One word is still consumed per draw so random and deterministic runs
    stay aligned on the stream.
    """

    def __init__(self, n0: int = 2):
        self.n0 = int(n0)

    def sample(self, stream: RngStream, current: Optional[int] = None) -> int:
        if current is None:
            raise ValueError("doubling law needs the current box index")
        if stream is not None:
            stream.raw(1)
        return 2 * int(current)

    def mean(self) -> float:
        raise ValueError("the doubling law is not i.i.d. and has no mean index")

    def __repr__(self):
        return "DoublingLaw()"


def sample_box_index(dist, stream: RngStream, current: Optional[int] = None) -> int:
    return dist.sample(stream, current)


def mean_index(dist) -> float:
    return dist.mean()
