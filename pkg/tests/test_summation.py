import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdm.summation import dot2, fsum, sum2, two_prod, two_sum

finite = st.floats(-1e200, 1e200, allow_nan=False, allow_infinity=False)
moderate = st.floats(-1e100, 1e100, allow_nan=False, allow_infinity=False)


@given(finite, finite)
def test_two_sum_exact(a, b):
    s, e = two_sum(a, b)
    assert Fraction(s) + Fraction(e) == Fraction(a) + Fraction(b)


@given(moderate, moderate)
def test_two_prod_exact(a, b):
    p, e = two_prod(a, b)
    if math.isfinite(p) and abs(p) > 1e-200:
        assert Fraction(p) + Fraction(e) == Fraction(a) * Fraction(b)


def test_sum2_ill_conditioned():
    rng = np.random.default_rng(0)
    x = rng.normal(size=5000) * 10.0 ** rng.integers(-8, 9, size=5000)
    x = np.concatenate([x, -x[:2500], [1e-3]])
    rng.shuffle(x)
    exact = float(sum(Fraction(v) for v in x))
    assert sum2(x) == pytest.approx(exact, rel=1e-15, abs=1e-18)


def test_dot2_ill_conditioned():
    rng = np.random.default_rng(1)
    x = rng.normal(size=3000) * 1e8
    w = rng.normal(size=3000)
    w[-1] = -(float(np.dot(x[:-1], w[:-1]))) / x[-1]
    exact = float(sum(Fraction(a) * Fraction(b) for a, b in zip(x, w)))
    assert abs(dot2(x, w) - exact) <= 1e-12 * max(1.0, abs(exact))


def test_axes_and_empty():
    x = np.arange(12.0).reshape(3, 4)
    np.testing.assert_array_equal(sum2(x, axis=0), x.sum(axis=0))
    np.testing.assert_array_equal(sum2(x), x.sum(axis=1))
    assert sum2(np.zeros((2, 0))).tolist() == [0.0, 0.0]
    assert dot2(np.zeros(0), np.zeros(0)) == 0.0
    assert fsum([1e16, 1.0, -1e16]) == 1.0


def test_order_of_blocks_is_fixed():
    x = np.random.default_rng(2).normal(size=(4, 1000))
    assert np.array_equal(sum2(x), np.array([sum2(row) for row in x]))
