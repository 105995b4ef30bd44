"""Test integrand, norm bounds, point budgets and level selection.

    f(x) = 1 / (1 + sum_j x_j / j**beta),   x_j in [-1/2, 1/2].

With C_u = 12**(-|u|/2) the quadrature-error constants, and
B_u = (1 - zeta(beta)/2)**(-(|u|+1)) |u|! prod_{j in u} j**(-beta)
bounds on the norms of the decomposition terms, the weights
w(u) = C_u B_u are POD weights with c1 = 1/(1 - zeta(beta)/2),
c2 = c1/sqrt(12), b1 = 1, b2 = beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np
from scipy.special import gammaln, logsumexp

from mdm.active_set import ActiveSet, CapacityError
from mdm.coeff_tables import LevelAssignment
from mdm.decomposition import AnchoredIntegrand, default_cost
from mdm.lattice import M_CAP
from mdm.pod_weights import PodWeights
from mdm.quad1d import Rule1dFamily
from mdm.smolyak import NESTED, count_evals

# B_2, B_4, ..., B_14
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6)


def zeta(s: float, n: int = 50) -> float:
    """Riemann zeta for real s > 1, by Euler-Maclaurin summation past n terms."""
    if not s > 1:
        raise ValueError("zeta needs s > 1")
    head = math.fsum(k ** (-s) for k in range(1, n))
    terms = [head, n ** (1 - s) / (s - 1), 0.5 * n ** (-s)]
    rising = s  # s (s+1) ... (s + 2k - 2)
    fact = 2.0  # (2k)!
    for k, b in enumerate(_BERNOULLI, start=1):
        terms.append(b / fact * rising * n ** (-s - 2 * k + 1))
        rising *= (s + 2 * k - 1) * (s + 2 * k)
        fact *= (2 * k + 1) * (2 * k + 2)
    return math.fsum(terms)


class TestIntegrand(AnchoredIntegrand):
    __test__ = False  # not a pytest class

    def __init__(self, beta: float, cost: Callable[[int], float] = default_cost) -> None:
        if not beta > 1:
            raise ValueError("beta must be > 1")
        super().__init__(cost=cost)
        self.beta = float(beta)

    def _eval(self, v: np.ndarray, x: np.ndarray) -> np.ndarray:
        if len(v) == 0:
            return np.ones(x.shape[0])
        return 1.0 / (1.0 + x @ (v.astype(float) ** -self.beta))

    def _eval_many(self, vs: np.ndarray, x: np.ndarray) -> np.ndarray:
        scale = vs.astype(float) ** -self.beta  # (K, d)
        if x.ndim == 2:
            return 1.0 / (1.0 + scale @ x.T)
        return 1.0 / (1.0 + np.einsum("knd,kd->kn", x, scale))


@dataclass(frozen=True)
class NormModel:
    beta: float
    q: float = 2.0
    G: float = 1.0
    cost: Callable[[int], float] = default_cost

    def __post_init__(self) -> None:
        if not self.beta > 1:
            raise ValueError("beta must be > 1")
        if 1 - zeta(self.beta) / 2 <= 0:
            raise ValueError("norm bound needs zeta(beta) < 2")

    @property
    def log_kappa(self) -> float:
        """-ln(1 - zeta(beta)/2)."""
        return -math.log1p(-zeta(self.beta) / 2)

    def log_B(self, sets: np.ndarray) -> np.ndarray:
        """ln B_u for each row of a ``(K, ell)`` array of same-size sets."""
        sets = np.asarray(sets)
        ell = sets.shape[1]
        base = (ell + 1) * self.log_kappa + float(gammaln(ell + 1))
        if ell == 0:
            return np.full(sets.shape[0], base)
        return base - self.beta * np.log(sets).sum(axis=1)

    def log_C(self, ell: int) -> float:
        return -0.5 * ell * math.log(12.0)

    def pod_weights(self) -> PodWeights:
        c1 = math.exp(self.log_kappa)
        return PodWeights(c1=c1, c2=c1 / math.sqrt(12.0), b1=1.0, b2=self.beta)


def point_budget(nm: NormModel, active: ActiveSet, epsilon: float) -> List[np.ndarray]:
    """h_u for every set of ``active``, as one array per cardinality (index 0 is the empty set).

    h_u = ((2/eps) S)**(1/q) (G B_u / cost(|u|))**(1/(q+1)),
    S = sum_{v in U} cost(|v|)**(q/(q+1)) (G B_v)**(1/(q+1)).
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    q, lg = nm.q, math.log(nm.G)
    log_b = [nm.log_B(active.array(ell)) for ell in range(active.d_sup + 1)]
    log_cost = [math.log(nm.cost(ell)) for ell in range(active.d_sup + 1)]
    parts = [q / (q + 1) * log_cost[ell] + (lg + lb) / (q + 1) for ell, lb in enumerate(log_b)]
    log_s = float(logsumexp(np.concatenate(parts)))
    pre = (math.log(2 / epsilon) + log_s) / q
    return [np.exp(pre + (lg + lb - log_cost[ell]) / (q + 1)) for ell, lb in enumerate(log_b)]


def qmc_level(h: float) -> int:
    if not math.isfinite(h):
        raise ValueError("point budget must be finite")
    if h <= 1:
        return 0
    m = math.ceil(math.log2(h))
    # guard against log2 rounding for exact powers of two
    if m > 0 and 2.0 ** (m - 1) >= h:
        m -= 1
    return m


def qmc_levels(active: ActiveSet, budget: List[np.ndarray], m_cap: int = M_CAP) -> LevelAssignment:
    levels = []
    for ell in range(1, active.d_sup + 1):
        m = np.array([qmc_level(float(h)) for h in budget[ell]], dtype=np.int64)
        if m.size and m.max() > m_cap:
            raise CapacityError("lattice exhausted: level above m_cap")
        levels.append(m)
    return LevelAssignment.from_active(active, levels)


def smolyak_level_table(fam: Rule1dFamily, d: int, h_max: float) -> List[int]:
    """count_evals(fam, d, m) for m = 1, 2, ... until it reaches ``h_max``."""
    counts = [count_evals(fam, d, 1, NESTED)]
    while counts[-1] < h_max:
        counts.append(count_evals(fam, d, len(counts) + 1, NESTED))
    return counts


def smolyak_levels(active: ActiveSet, budget: List[np.ndarray], fam: Rule1dFamily) -> LevelAssignment:
    """Smallest m >= 1 with count_evals(|u|, m) >= h_u."""
    levels = []
    for ell in range(1, active.d_sup + 1):
        h = budget[ell]
        if h.size == 0:
            levels.append(np.zeros(0, dtype=np.int64))
            continue
        counts = np.array(smolyak_level_table(fam, ell, float(h.max())), dtype=float)
        levels.append(np.searchsorted(counts, h, side="left").astype(np.int64) + 1)
    return LevelAssignment.from_active(active, levels)


def budget_dict(active: ActiveSet, budget: List[np.ndarray]) -> Dict[tuple, float]:
    return {u: float(h) for ell, sets in enumerate(active.by_size) for u, h in zip(sets, budget[ell])}
