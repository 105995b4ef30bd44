"""Product and order dependent (POD) significance weights.

    w(u) = Omega_{|u|} * prod_{j in u} omega_j,
    Omega_l = c1 * (l!)**b1,   omega_j = c2 * j**(-b2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import gammaln

MONOTONICITY_HORIZON = 200


@lru_cache(maxsize=None)
def _log_factorial(n: int) -> float:
    return math.lgamma(n + 1)


@dataclass(frozen=True)
class PodWeights:
    c1: float
    c2: float
    b1: float
    b2: float

    def __post_init__(self) -> None:
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError("c1 and c2 must be positive")
        if self.b1 < 0:
            raise ValueError("b1 must be non-negative")
        if not (self.b2 > 1 and self.b2 > self.b1):
            raise ValueError("need b2 > 1 and b2 > b1")
        # Omega_{l+1} omega_{l+1} <= Omega_l  <=>  ln c2 <= (b2 - b1) ln(l + 1)
        lc2 = math.log(self.c2)
        for ell in range(1, MONOTONICITY_HORIZON + 1):
            if lc2 > (self.b2 - self.b1) * math.log(ell + 1) + 1e-15:
                raise ValueError(
                    f"POD weights violate Omega_(l+1)*omega_(l+1) <= Omega_l at l={ell}"
                )

    @property
    def log_c1(self) -> float:
        return math.log(self.c1)

    @property
    def log_c2(self) -> float:
        return math.log(self.c2)

    def log_order(self, ell: int) -> float:
        """ln Omega_ell."""
        return self.log_c1 + self.b1 * _log_factorial(ell)

    def log_omega(self, j: int) -> float:
        return self.log_c2 - self.b2 * math.log(j)

    def omega(self, j: int) -> float:
        return math.exp(self.log_omega(j))


def weight_log(p: PodWeights, u: Sequence[int]) -> float:
    """ln w(u), summed term by term in log space."""
    ell = len(u)
    acc = p.log_c1 + p.b1 * _log_factorial(ell)
    lc2, b2 = p.log_c2, p.b2
    for j in u:
        acc += lc2 - b2 * math.log(j)
    return acc


def weight(p: PodWeights, u: Sequence[int]) -> float:
    return math.exp(weight_log(p, u))


def weight_log_array(p: PodWeights, sets: np.ndarray) -> np.ndarray:
    """ln w(u) for every row of a ``(K, ell)`` array of same-size sets."""
    sets = np.asarray(sets)
    ell = sets.shape[1]
    base = p.log_c1 + p.b1 * float(gammaln(ell + 1)) + ell * p.log_c2
    if ell == 0:
        return np.full(sets.shape[0], base)
    return base - p.b2 * np.log(sets).sum(axis=1)
