"""Double-double (paired-double) arithmetic, ~31 significant digits.

Scalar values are DoubleDouble instances; the vector helpers operate on
(hi, lo) ndarray pairs and exist for the extended-precision inner products
of the Lanczos engine. Algorithms are the classical error-free transforms
(Dekker splitting, Knuth two-sum); no fused multiply-add is assumed.
"""

from __future__ import annotations

import math

import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _quick_two_sum(a, b):
    # requires |a| >= |b|
    s = a + b
    return s, b - (s - a)


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


class DoubleDouble:
    """Immutable hi + lo pair with |lo| <= ulp(hi)/2."""

    __slots__ = ("hi", "lo")

    def __init__(self, hi: float, lo: float = 0.0):
        object.__setattr__(self, "hi", float(hi))
        object.__setattr__(self, "lo", float(lo))

    def __setattr__(self, *_):
        raise AttributeError("DoubleDouble is immutable")

    @staticmethod
    def _coerce(x) -> "DoubleDouble":
        return x if isinstance(x, DoubleDouble) else DoubleDouble(float(x))

    def __float__(self) -> float:
        return self.hi + self.lo

    def __repr__(self) -> str:
        return f"DoubleDouble({self.hi!r}, {self.lo!r})"

    def __neg__(self) -> "DoubleDouble":
        return DoubleDouble(-self.hi, -self.lo)

    def __add__(self, other) -> "DoubleDouble":
        o = self._coerce(other)
        s, e = _two_sum(self.hi, o.hi)
        t, f = _two_sum(self.lo, o.lo)
        e += t
        s, e = _quick_two_sum(s, e)
        e += f
        s, e = _quick_two_sum(s, e)
        return DoubleDouble(s, e)

    __radd__ = __add__

    def __sub__(self, other) -> "DoubleDouble":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "DoubleDouble":
        return self._coerce(other) + (-self)

    def __mul__(self, other) -> "DoubleDouble":
        o = self._coerce(other)
        p, e = _two_prod(self.hi, o.hi)
        e += self.hi * o.lo + self.lo * o.hi
        p, e = _quick_two_sum(p, e)
        return DoubleDouble(p, e)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "DoubleDouble":
        o = self._coerce(other)
        q1 = self.hi / o.hi
        r = self - o * DoubleDouble(q1)
        q2 = r.hi / o.hi
        r = r - o * DoubleDouble(q2)
        q3 = r.hi / o.hi
        s, e = _quick_two_sum(q1, q2)
        return DoubleDouble(s, e) + q3

    def __rtruediv__(self, other) -> "DoubleDouble":
        return self._coerce(other) / self

    def sqrt(self) -> "DoubleDouble":
        if self.hi < 0:
            raise ValueError("sqrt of negative DoubleDouble")
        if self.hi == 0.0:
            return DoubleDouble(0.0)
        # one Newton step on a double seed doubles the accurate digits
        y = math.sqrt(self.hi)
        yd = DoubleDouble(y)
        return (yd + self / yd) * 0.5

    def __lt__(self, other):
        o = self._coerce(other)
        return (self.hi, self.lo) < (o.hi, o.lo)

    def __le__(self, other):
        o = self._coerce(other)
        return (self.hi, self.lo) <= (o.hi, o.lo)

    def __gt__(self, other):
        return self._coerce(other) < self

    def __ge__(self, other):
        return self._coerce(other) <= self

    def __eq__(self, other):
        o = self._coerce(other)
        return self.hi == o.hi and self.lo == o.lo

    def __hash__(self):
        return hash((self.hi, self.lo))


def dd_sum(hi: np.ndarray, lo: np.ndarray) -> DoubleDouble:
    """Pairwise double-double reduction of a (hi, lo) array pair.

    Deterministic: the reduction tree depends only on the array length.
    """
    hi = np.asarray(hi, dtype=float)
    lo = np.asarray(lo, dtype=float)
    while hi.size > 1:
        if hi.size % 2:
            hi = np.concatenate([hi, [0.0]])
            lo = np.concatenate([lo, [0.0]])
        s, e = _two_sum(hi[0::2], hi[1::2])
        lo = lo[0::2] + lo[1::2] + e
        hi = s
    s, e = _quick_two_sum(float(hi[0]), float(lo[0])) if abs(hi[0]) >= abs(lo[0]) else _two_sum(float(hi[0]), float(lo[0]))
    return DoubleDouble(s, e)


def dd_dot(a: np.ndarray, b: np.ndarray) -> DoubleDouble:
    """Dot product with error-free elementwise products and a dd reduction."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0:
        return DoubleDouble(0.0)
    p, e = _two_prod(a, b)
    return dd_sum(p, e)
