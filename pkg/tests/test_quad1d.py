import math
from fractions import Fraction

import numpy as np
import pytest

from mdm.quad1d import (
    TabulatedFamily,
    TrapezoidalFamily,
    apply_rule,
    as_non_nested,
    count_table,
    new_point_range,
)

fam = TrapezoidalFamily()


def test_point_counts():
    assert count_table(fam, 5) == [0, 1, 3, 5, 9, 17]
    assert list(new_point_range(fam, 3)) == [3, 4]
    assert list(new_point_range(fam, 1)) == [0]


def test_node_order():
    got = [TrapezoidalFamily.node(k) for k in range(9)]
    half = Fraction(1, 2)
    assert got == [0, half, -half, Fraction(1, 4), -Fraction(1, 4), Fraction(1, 8), -Fraction(1, 8),
                   Fraction(3, 8), -Fraction(3, 8)]


def test_nested_prefixes():
    for i in range(2, 13):
        prev = fam.points(i - 1)
        assert np.array_equal(fam.points(i)[: len(prev)], prev)


def test_weights_normalised():
    for i in range(1, 13):
        assert abs(fam.weights(i).sum() - 1.0) <= 1e-15


def test_matches_composite_trapezoid():
    # [DERIVED] oracle: textbook composite trapezoid on the sorted uniform grid
    g = np.cos
    for i in range(2, 9):
        h = 2.0 ** -(i - 1)
        x = np.linspace(-0.5, 0.5, 2 ** (i - 1) + 1)
        y = g(x)
        trap = h * (y.sum() - 0.5 * (y[0] + y[-1]))
        assert apply_rule(fam, i, g) == pytest.approx(trap, rel=1e-14)
    assert apply_rule(fam, 1, g) == 1.0  # midpoint rule
    assert apply_rule(fam, 0, g) == 0.0


def test_convergence_rate():
    exact = math.exp(0.5) - math.exp(-0.5)
    errs = [abs(apply_rule(fam, i, np.exp) - exact) for i in range(4, 11)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    for r in ratios:
        assert r == pytest.approx(4.0, rel=0.02)


def test_rules_are_read_only():
    with pytest.raises(ValueError):
        fam.weights(3)[0] = 1.0


def test_tabulated_family():
    pts = [[0.0], [0.0, 0.3, -0.3]]
    wts = [[1.0], [0.5, 0.25, 0.25]]
    t = TabulatedFamily(pts, wts, nested=True)
    assert t.max_level == 2 and t.n(2) == 3
    with pytest.raises(ValueError):
        t.n(3)
    with pytest.raises(ValueError):
        TabulatedFamily([[0.0], [0.1, 0.2]], [[1.0], [0.5, 0.5]], nested=True)
    with pytest.raises(ValueError):
        TabulatedFamily([[0.0]], [], nested=False)


def test_as_non_nested_keeps_rules():
    nn = as_non_nested(fam, 5)
    assert not nn.nested
    for i in range(1, 6):
        assert np.array_equal(nn.points(i), fam.points(i))
        assert np.array_equal(nn.weights(i), fam.weights(i))
