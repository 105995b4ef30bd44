"""One-dimensional rule families U_1, U_2, ... for Smolyak quadrature.

Level 0 is the zero rule. For nested families the points of level ``i - 1``
are the first ``n(i - 1)`` points of level ``i``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np


class Rule1dFamily:
    nested: bool = False

    def __init__(self) -> None:
        self._cache: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
        self._grids: Dict[tuple, object] = {}  # filled by mdm.smolyak

    def n(self, i: int) -> int:
        raise NotImplementedError

    def _build(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def rule(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        """(points, weights) of level ``i``; both empty for i = 0."""
        if i < 0:
            raise ValueError("level must be >= 0")
        if i == 0:
            return np.zeros(0), np.zeros(0)
        if i not in self._cache:
            pts, wts = self._build(i)
            pts.setflags(write=False)
            wts.setflags(write=False)
            self._cache[i] = (pts, wts)
        return self._cache[i]

    def points(self, i: int) -> np.ndarray:
        return self.rule(i)[0]

    def weights(self, i: int) -> np.ndarray:
        return self.rule(i)[1]

    def weight_padded(self, i: int, size: int) -> np.ndarray:
        """Weights of level ``i`` zero-padded to ``size`` (w_{i,k} = 0 for k >= n(i))."""
        out = np.zeros(size)
        w = self.weights(i)
        out[: len(w)] = w
        return out


class TrapezoidalFamily(Rule1dFamily):
    """Nested composite trapezoidal rules on [-1/2, 1/2], midpoint rule at level 1.

    Points are ordered 0, +1/2, -1/2, +1/4, -1/4, +1/8, -1/8, +3/8, -3/8, ...
    """

    nested = True

    def n(self, i: int) -> int:
        if i == 0:
            return 0
        if i == 1:
            return 1
        return 2 ** (i - 1) + 1

    @staticmethod
    def node(k: int) -> Fraction:
        if k == 0:
            return Fraction(0)
        if k == 1:
            return Fraction(1, 2)
        if k == 2:
            return Fraction(-1, 2)
        if k % 2 == 0:
            return -TrapezoidalFamily.node(k - 1)
        p = k.bit_length()  # 2**(p-1) < k < 2**p for odd k >= 3
        return Fraction(k, 2**p) - Fraction(1, 2)

    def _build(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        n = self.n(i)
        if i == 1:
            return np.zeros(1), np.ones(1)
        pts = np.array([float(self.node(k)) for k in range(n)])
        wts = np.full(n, 0.5 ** (i - 1))
        wts[1:3] = 0.5**i
        return pts, wts


class TabulatedFamily(Rule1dFamily):
    """A family given by explicit lists of points and weights for levels 1..L."""

    def __init__(self, points: Sequence[Sequence[float]], weights: Sequence[Sequence[float]],
                 nested: bool = False) -> None:
        super().__init__()
        if len(points) != len(weights):
            raise ValueError("points and weights must have the same number of levels")
        self._pts = [np.asarray(p, dtype=float) for p in points]
        self._wts = [np.asarray(w, dtype=float) for w in weights]
        self.nested = nested
        if nested:
            for i in range(1, len(self._pts)):
                prev = self._pts[i - 1]
                if not np.array_equal(self._pts[i][: len(prev)], prev):
                    raise ValueError(f"level {i + 1} does not extend level {i}")

    @property
    def max_level(self) -> int:
        return len(self._pts)

    def n(self, i: int) -> int:
        if i == 0:
            return 0
        if i > self.max_level:
            raise ValueError(f"level {i} not tabulated")
        return len(self._pts[i - 1])

    def _build(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        if i > self.max_level:
            raise ValueError(f"level {i} not tabulated")
        return self._pts[i - 1].copy(), self._wts[i - 1].copy()


def as_non_nested(fam: Rule1dFamily, levels: int) -> TabulatedFamily:
    """The same rules as ``fam`` but flagged non-nested (no point sharing)."""
    pts = [fam.points(i) for i in range(1, levels + 1)]
    wts = [fam.weights(i) for i in range(1, levels + 1)]
    return TabulatedFamily(pts, wts, nested=False)


def apply_rule(fam: Rule1dFamily, i: int, g: Callable[[np.ndarray], np.ndarray]) -> float:
    """U_i(g) for a vectorised ``g``; U_0 is the zero rule."""
    if i == 0:
        return 0.0
    pts, wts = fam.rule(i)
    return float(np.dot(wts, np.asarray(g(pts), dtype=float)))


def new_point_range(fam: Rule1dFamily, i: int) -> range:
    """Indices of the points first appearing at level ``i`` of a nested family."""
    return range(fam.n(i - 1), fam.n(i))


def count_table(fam: Rule1dFamily, levels: int) -> List[int]:
    return [fam.n(i) for i in range(levels + 1)]
