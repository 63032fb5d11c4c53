from fractions import Fraction

import numpy as np
import pytest

from opgrowth.ddouble import DoubleDouble, _two_prod, _two_sum, dd_dot, dd_sum


def frac(dd: DoubleDouble) -> Fraction:
    return Fraction(dd.hi) + Fraction(dd.lo)


def test_two_sum_is_error_free():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a, b = rng.standard_normal(2) * 10.0 ** rng.integers(-8, 8, 2)
        s, e = _two_sum(a, b)
        assert Fraction(s) + Fraction(e) == Fraction(a) + Fraction(b)


def test_two_prod_is_error_free():
    rng = np.random.default_rng(1)
    for _ in range(200):
        a, b = rng.standard_normal(2) * 10.0 ** rng.integers(-6, 6, 2)
        p, e = _two_prod(a, b)
        assert Fraction(p) + Fraction(e) == Fraction(a) * Fraction(b)


def test_arithmetic_against_fractions():
    rng = np.random.default_rng(2)
    for _ in range(100):
        a, b = rng.standard_normal(2)
        x, y = DoubleDouble(a), DoubleDouble(b)
        for got, want in (
            (x + y, Fraction(a) + Fraction(b)),
            (x - y, Fraction(a) - Fraction(b)),
            (x * y, Fraction(a) * Fraction(b)),
        ):
            err = abs(frac(got) - want)
            assert err <= abs(want) * Fraction(1, 10**30) + Fraction(1, 10**300)


def test_division_and_sqrt():
    x = DoubleDouble(2.0)
    r = x.sqrt()
    resid = frac(r * r) - 2
    assert abs(resid) < Fraction(1, 10**29)
    q = DoubleDouble(1.0) / DoubleDouble(3.0)
    assert abs(frac(q) - Fraction(1, 3)) < Fraction(1, 10**30)


def test_sqrt_rejects_negative():
    with pytest.raises(ValueError):
        DoubleDouble(-1.0).sqrt()


def test_dd_sum_beats_cancellation():
    # pairs (x, -x) plus a tiny residue: naive np.sum loses it entirely
    big = np.repeat([1e16, -1e16], 500)
    tiny = np.full(7, 1e-8)
    data = np.concatenate([big, tiny])
    rng = np.random.default_rng(3)
    rng.shuffle(data)
    total = dd_sum(data, np.zeros_like(data))
    assert float(total) == pytest.approx(7e-8, rel=1e-12)


def test_dd_dot_matches_fsum():
    import math

    rng = np.random.default_rng(4)
    a = rng.standard_normal(4000) * 10.0 ** rng.integers(-10, 10, 4000)
    b = rng.standard_normal(4000)
    # fsum over the error-free expanded products is the exact dot, correctly rounded
    p, e = _two_prod(a, b)
    exact = math.fsum(p.tolist() + e.tolist())
    assert float(dd_dot(a, b)) == pytest.approx(exact, rel=1e-15)


def test_comparisons_and_float_roundtrip():
    x = DoubleDouble(1.5, 1e-20)
    assert x > 1.5
    assert x >= 1.5
    assert DoubleDouble(1.5) == 1.5
    assert float(DoubleDouble(2.5)) == 2.5
