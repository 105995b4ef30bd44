"""Threshold T for the active set.

    T(alpha) = ((eps / 2) / S(alpha)) ** (alpha / (alpha - 1)),
    S(alpha) >= sum_u w(u) ** (1 / alpha),

with S an upper bound on the infinite sum, so T is an underestimate and the
truncation error stays below eps / 2. T is maximised over a grid of alpha.
Everything is carried in log space; for alpha close to 1 the partial sums
overflow double precision long before they become irrelevant.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import gammaln, logsumexp

from mdm.pod_weights import PodWeights


@dataclass(frozen=True)
class ToleranceParams:
    epsilon: float
    s: int = 1000
    t: float = 0.5
    alpha_grid_size: int = 100

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.s < 1:
            raise ValueError("s must be >= 1")
        if not 0 < self.t < 1:
            raise ValueError("t must lie in (0, 1)")
        if self.alpha_grid_size < 2:
            raise ValueError("alpha_grid_size must be >= 2")


@dataclass
class ToleranceResult:
    epsilon: float
    T: float
    alpha_star: float
    sum_bound: float
    per_alpha: List[Tuple[float, float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_alpha"] = [
            {"alpha": a, "sum_bound": s, "T": t} for a, s, t in self.per_alpha
        ]
        return d


def _check_alpha(p: PodWeights, alpha: float) -> None:
    if not (alpha >= 1 and p.b1 < alpha < p.b2):
        raise ValueError(
            f"alpha out of range: need alpha >= 1 and {p.b1} < alpha < {p.b2}, got {alpha}"
        )


def log_tail_bound(a: float, c: float, z: float, s: int, t: float) -> float:
    """ln E_{s,t}: bound on the tail l > s of the order-wise series.

    ``a = 0`` is handled as the limit a -> 0+, where the Hoelder split
    degenerates to the sup bound t**s on the first factor.
    """
    if not 0 <= a < 1:
        raise ValueError("tail bound needs 0 <= a < 1")
    log_y = math.log(c * z / t)
    y_pow = math.exp(log_y / (1 - a))
    log_second = y_pow + min(0.0, s * log_y / (1 - a)) - math.lgamma(s + 1)
    if a == 0:
        log_first = s * math.log(t)
    else:
        x = t ** (1 / a)
        log_first = a * (
            (s / a) * math.log(t) - math.log1p(-x) + math.log(s + 1 / (1 - x))
        )
    return math.log(c) + math.log1p(z / (s + 1)) + log_first + (1 - a) * log_second


def log_sum_bound_pod(p: PodWeights, alpha: float, s: int = 1000, t: float = 0.5) -> float:
    """ln of the upper bound on sum_u w(u)**(1/alpha) for POD weights."""
    _check_alpha(p, alpha)
    if not 0 < t < 1 or s < 1:
        raise ValueError("need s >= 1 and 0 < t < 1")
    a = p.b1 / alpha
    b = p.b2 / alpha
    log_c = p.log_c2 / alpha
    z = (2.0 / 3.0) ** (b - 1) / (b - 1)
    ell = np.arange(1, s + 1, dtype=float)
    terms = (
        a * gammaln(ell + 1)
        + ell * log_c
        + (ell - 1) * math.log(z)
        - gammaln(ell)
        + np.log1p(z / ell)
    )
    tail = log_tail_bound(a, math.exp(log_c), z, s, t)
    return p.log_c1 / alpha + float(logsumexp(np.concatenate(([0.0], terms, [tail]))))


def sum_bound_pod(p: PodWeights, alpha: float, s: int = 1000, t: float = 0.5) -> float:
    return math.exp(log_sum_bound_pod(p, alpha, s, t))


def log_sum_bound_product(p: PodWeights, alpha: float, s: int = 1000) -> float:
    """ln of the product-form bound, valid when b1 = 0."""
    if p.b1 != 0:
        raise ValueError("product-form bound requires b1 = 0")
    _check_alpha(p, alpha)
    b = p.b2 / alpha
    c = math.exp(p.log_c2 / alpha)
    j = np.arange(1, s + 1, dtype=float)
    return (
        p.log_c1 / alpha
        + c / ((b - 1) * (s + 0.5) ** (b - 1))
        + math.fsum(np.log1p(c * j ** (-b)))
    )


def sum_bound_product(p: PodWeights, alpha: float, s: int = 1000) -> float:
    return math.exp(log_sum_bound_product(p, alpha, s))


def log_threshold(epsilon: float, alpha: float, log_sum: float) -> float:
    """ln T for a given alpha and ln of the sum bound."""
    return alpha / (alpha - 1) * (math.log(epsilon / 2) - log_sum)


def alpha_grid(p: PodWeights, size: int) -> np.ndarray:
    """Equispaced alphas with spacing (hi - lo) / size, endpoints dropped.

    lo = max(1, b1), hi = b2. Both endpoints are inadmissible (T undefined at
    alpha = 1, divergent sum at alpha = b2), leaving size - 1 points.
    """
    lo, hi = max(1.0, p.b1), p.b2
    k = np.arange(1, size)
    return lo + k * (hi - lo) / size


def compute_tolerance(p: PodWeights, tp: ToleranceParams) -> ToleranceResult:
    best: Optional[Tuple[float, float, float]] = None
    diagnostics = []
    for alpha in alpha_grid(p, tp.alpha_grid_size):
        alpha = float(alpha)
        try:
            if p.b1 == 0:
                log_s = log_sum_bound_product(p, alpha, tp.s)
            else:
                log_s = log_sum_bound_pod(p, alpha, tp.s, tp.t)
        except (ValueError, OverflowError):
            continue
        if not math.isfinite(log_s):
            continue
        log_t = log_threshold(tp.epsilon, alpha, log_s)
        diagnostics.append((alpha, math.exp(min(log_s, 700.0)), math.exp(log_t)))
        # strict '>' keeps the smaller alpha on ties
        if best is None or log_t > best[0]:
            best = (log_t, alpha, log_s)
    if best is None:
        raise ValueError("no admissible alpha")
    log_t, alpha, log_s = best
    return ToleranceResult(
        epsilon=tp.epsilon,
        T=math.exp(log_t),
        alpha_star=alpha,
        sum_bound=math.exp(log_s),
        per_alpha=diagnostics,
    )
