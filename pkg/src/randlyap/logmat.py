"""Sign + log-magnitude 2x2 matrices for overflow-free cocycle products.

An entry is ``sign * base**expo`` with ``sign`` in {-1, 0, +1}. Choosing the
base as the dynamics' natural scale (``kappa`` for the figure-8 map) keeps
exponents integral, so products of monomial matrices are exact.
"""

import math

import numpy as np

_ZERO = (0, 0.0)


def _add(x, y, logbase):
    """Signed log-sum of two entries in base-``exp(logbase)`` units."""
    sx, ex = x
    sy, ey = y
    if sx == 0:
        return y
    if sy == 0:
        return x
    if ex < ey:
        sx, ex, sy, ey = sy, ey, sx, ex
    r = math.exp((ey - ex) * logbase)
    if sx == sy:
        return (sx, ex + math.log1p(r) / logbase)
    if r == 1.0:
        return _ZERO
    return (sx, ex + math.log1p(-r) / logbase)


def _mul(x, y):
    if x[0] == 0 or y[0] == 0:
        return _ZERO
    return (x[0] * y[0], x[1] + y[1])


class LogMat2:
    __slots__ = ("entries", "logbase")

    def __init__(self, entries, logbase=1.0):
        # entries: ((s11, e11), (s12, e12), (s21, e21), (s22, e22))
        self.entries = tuple((int(s), float(e) if s else 0.0) for s, e in entries)
        if len(self.entries) != 4 or any(s not in (-1, 0, 1) for s, _ in self.entries):
            raise ValueError("need four (sign, exponent) pairs with sign in {-1, 0, 1}")
        if not logbase > 0.0:
            raise ValueError("logbase must be positive")
        self.logbase = float(logbase)

    @classmethod
    def identity(cls, logbase=1.0):
        return cls(((1, 0.0), _ZERO, _ZERO, (1, 0.0)), logbase)

    @classmethod
    def diag(cls, d1, d2, logbase=1.0):
        """``d1``, ``d2`` given as (sign, exponent) pairs."""
        return cls((d1, _ZERO, _ZERO, d2), logbase)

    @classmethod
    def antidiag(cls, upper, lower, logbase=1.0):
        return cls((_ZERO, upper, lower, _ZERO), logbase)

    @classmethod
    def from_dense(cls, M, logbase=1.0):
        M = np.asarray(M, dtype=float)
        ent = []
        for x in (M[0, 0], M[0, 1], M[1, 0], M[1, 1]):
            if x == 0.0:
                ent.append(_ZERO)
            else:
                ent.append((1 if x > 0 else -1, math.log(abs(x)) / logbase))
        return cls(ent, logbase)

    def to_dense(self):
        return np.array([s * math.exp(e * self.logbase) if s else 0.0 for s, e in self.entries]).reshape(2, 2)

    def __matmul__(self, other):
        if not isinstance(other, LogMat2):
            return NotImplemented
        if other.logbase != self.logbase:
            raise ValueError("log bases differ")
        a11, a12, a21, a22 = self.entries
        b11, b12, b21, b22 = other.entries
        lb = self.logbase
        return LogMat2(
            (
                _add(_mul(a11, b11), _mul(a12, b21), lb),
                _add(_mul(a11, b12), _mul(a12, b22), lb),
                _add(_mul(a21, b11), _mul(a22, b21), lb),
                _add(_mul(a21, b12), _mul(a22, b22), lb),
            ),
            lb,
        )

    @property
    def signs(self):
        return np.array([s for s, _ in self.entries], dtype=int).reshape(2, 2)

    @property
    def exponents(self):
        """Exponents in base units; zero entries report ``-inf``."""
        return np.array([e if s else -math.inf for s, e in self.entries]).reshape(2, 2)

    def log_abs_entries(self):
        """Natural log of the absolute entries (``-inf`` for zeros)."""
        return self.exponents * self.logbase

    def log_norm_apply(self, v) -> float:
        """Natural ``log ||A v||`` without forming ``A``."""
        v1, v2 = float(v[0]), float(v[1])
        lv = []
        for x in (v1, v2):
            lv.append((1 if x > 0 else -1, math.log(abs(x)) / self.logbase) if x != 0.0 else _ZERO)
        a11, a12, a21, a22 = self.entries
        r1 = _add(_mul(a11, lv[0]), _mul(a12, lv[1]), self.logbase)
        r2 = _add(_mul(a21, lv[0]), _mul(a22, lv[1]), self.logbase)
        logs = [e * self.logbase for s, e in (r1, r2) if s != 0]
        if not logs:
            return -math.inf
        hi = max(logs)
        if len(logs) == 1:
            return hi
        lo = min(logs)
        return hi + 0.5 * math.log1p(math.exp(2.0 * (lo - hi)))

    def log_abs_det(self) -> float:
        a11, a12, a21, a22 = self.entries
        p = _mul(a12, a21)
        d = _add(_mul(a11, a22), (-p[0], p[1]), self.logbase)
        if d[0] == 0:
            return -math.inf
        return d[1] * self.logbase

    def same_pattern(self, other) -> bool:
        return np.array_equal(self.signs, other.signs)

    def max_rel_exponent_diff(self, other) -> float:
        """Largest relative difference of nonzero exponents (0 when patterns match exactly)."""
        if not self.same_pattern(other):
            return math.inf
        worst = 0.0
        for (s, e), (_, f) in zip(self.entries, other.entries):
            if s:
                worst = max(worst, abs(e - f) / max(1.0, abs(e), abs(f)))
        return worst

    def __eq__(self, other):
        return isinstance(other, LogMat2) and self.entries == other.entries and self.logbase == other.logbase

    def __repr__(self):
        cells = ", ".join(f"{'+' if s > 0 else '-' if s < 0 else '0'}{e:g}" if s else "0" for s, e in self.entries)
        return f"LogMat2([{cells}], logbase={self.logbase:g})"
