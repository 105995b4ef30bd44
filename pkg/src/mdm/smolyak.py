"""Smolyak quadrature on [-1/2, 1/2]^d.

    Q_{d,m} = sum_{|i| <= d + m - 1} (U_{i_1} - U_{i_1 - 1}) x ... x (U_{i_d} - U_{i_d - 1})

Three explicit forms are provided, each as a precomputed grid of points and
weights:

* nested: every distinct node appears once, with the combined weight
  w_{i,k} = sum_{q >= i, |q| <= L} prod_j (w_{q_j,k_j} - w_{q_j - 1,k_j});
* non-nested: every tensor grid with |i| <= L, product weights times a
  signed binomial sum;
* the tensor sum Q~_{d,m} over |i| = L used by the combination technique.

Grids are cached on the rule family per (kind, d, m).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Callable, Dict, Iterator, List, Sequence, Tuple

import numpy as np

from mdm.quad1d import Rule1dFamily
from mdm.summation import dot2

NESTED = "nested-direct"
NON_NESTED = "non-nested-direct"
COMBINATION = "combination"
VARIANTS = (NESTED, NON_NESTED, COMBINATION)


@dataclass(frozen=True)
class SmolyakGrid:
    d: int
    m: int
    kind: str
    points: np.ndarray  # (N, d)
    weights: np.ndarray  # (N,)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def apply(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(dot2(np.asarray(g(self.points), dtype=float), self.weights))


def index_sets(d: int, lo: int, hi: int, cap: int | None = None) -> Iterator[Tuple[int, ...]]:
    """All i in N^d with lo <= |i| <= hi (and i_j <= cap), lexicographic order."""
    if d == 0:
        if lo <= 0 <= hi:
            yield ()
        return
    top = hi - (d - 1)
    if cap is not None:
        top = min(top, cap)
    for first in range(1, top + 1):
        for rest in index_sets(d - 1, lo - first, hi - first, cap):
            yield (first,) + rest


def _check(d: int, m: int) -> None:
    if m < 1:
        raise ValueError("Smolyak level m must be >= 1")
    if d < 1:
        raise ValueError("dimension must be >= 1")


def _history_classes(fam: Rule1dFamily, i: int, m: int):
    """Group the new points of level ``i`` by their difference history.

    Returns (histories, members): histories[c] is the vector
    (w_{q,k} - w_{q-1,k}) for q = 0..m, identical for all k in members[c].
    """
    key = ("hist", i, m)
    if key in fam._grids:
        return fam._grids[key]
    lo, hi = fam.n(i - 1), fam.n(i)
    ks = np.arange(lo, hi)
    hist = np.zeros((hi - lo, m + 1))
    prev = np.zeros(hi - lo)
    for q in range(i, m + 1):
        w = fam.weights(q)
        cur = np.zeros(hi - lo)
        inside = ks < len(w)
        cur[inside] = w[ks[inside]]
        hist[:, q] = cur - prev
        prev = cur
    uniq, inverse = np.unique(hist, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    members = [ks[inverse == c] for c in range(len(uniq))]
    fam._grids[key] = (uniq, members)
    return uniq, members


def _tensor_points(fam: Rule1dFamily, levels: Sequence[int], idx: Sequence[np.ndarray]) -> np.ndarray:
    axes = [fam.points(i)[k] for i, k in zip(levels, idx)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([a.reshape(-1) for a in mesh], axis=1)


def _tensor_weights(vectors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones(1)
    for v in vectors:
        out = np.multiply.outer(out, v).reshape(-1)
    return out


def _truncated_mass(polys: Sequence[np.ndarray], deg: int) -> float:
    """Sum of the coefficients of prod(polys) up to degree ``deg``."""
    acc = np.ones(1)
    for p in polys:
        acc = np.convolve(acc, p)[: deg + 1]
    return float(acc[: deg + 1].sum())


def _nested_grid(fam: Rule1dFamily, d: int, m: int) -> SmolyakGrid:
    L = d + m - 1
    pts: List[np.ndarray] = []
    wts: List[np.ndarray] = []
    for i in index_sets(d, d, L, cap=m):
        classes = [_history_classes(fam, ij, m) for ij in i]
        for choice in np.ndindex(*[len(c[0]) for c in classes]):
            polys = [classes[j][0][c] for j, c in enumerate(choice)]
            idx = [classes[j][1][c] for j, c in enumerate(choice)]
            w = _truncated_mass(polys, L)
            block = _tensor_points(fam, i, idx)
            pts.append(block)
            wts.append(np.full(block.shape[0], w))
    return SmolyakGrid(d, m, NESTED, np.concatenate(pts), np.concatenate(wts))


def _signed_binomial(d: int, top: int) -> int:
    return sum((-1) ** s * comb(d, s) for s in range(min(d, top) + 1))


def _non_nested_grid(fam: Rule1dFamily, d: int, m: int) -> SmolyakGrid:
    L = d + m - 1
    pts, wts = [], []
    for i in index_sets(d, d, L, cap=m):
        coef = _signed_binomial(d, L - sum(i))
        idx = [np.arange(fam.n(ij)) for ij in i]
        pts.append(_tensor_points(fam, i, idx))
        wts.append(coef * _tensor_weights([fam.weights(ij) for ij in i]))
    return SmolyakGrid(d, m, NON_NESTED, np.concatenate(pts), np.concatenate(wts))


def _combination_grid(fam: Rule1dFamily, d: int, m: int) -> SmolyakGrid:
    L = d + m - 1
    pts, wts = [], []
    for i in index_sets(d, L, L, cap=m):
        idx = [np.arange(fam.n(ij)) for ij in i]
        pts.append(_tensor_points(fam, i, idx))
        wts.append(_tensor_weights([fam.weights(ij) for ij in i]))
    return SmolyakGrid(d, m, COMBINATION, np.concatenate(pts), np.concatenate(wts))


_BUILDERS = {NESTED: _nested_grid, NON_NESTED: _non_nested_grid, COMBINATION: _combination_grid}


def grid(fam: Rule1dFamily, d: int, m: int, kind: str = NESTED) -> SmolyakGrid:
    """Cached grid for Q_{d,m} (nested or non-nested) or Q~_{d,m} (combination)."""
    _check(d, m)
    if kind not in _BUILDERS:
        raise ValueError(f"unknown grid kind {kind!r}")
    if kind == NESTED and not fam.nested:
        raise ValueError("nested grid requested for a non-nested family")
    key = (kind, d, m)
    g = fam._grids.get(key)
    if g is None:
        g = _BUILDERS[kind](fam, d, m)
        g.points.setflags(write=False)
        g.weights.setflags(write=False)
        fam._grids[key] = g
    return g  # type: ignore[return-value]


def direct_grid(fam: Rule1dFamily, d: int, m: int) -> SmolyakGrid:
    return grid(fam, d, m, NESTED if fam.nested else NON_NESTED)


def smolyak_direct(fam: Rule1dFamily, v: Sequence[int], m: int,
                   g: Callable[[np.ndarray], np.ndarray]) -> float:
    """Q_{|v|,m}(g); ``g`` maps an ``(N, |v|)`` array of points to ``(N,)`` values."""
    return direct_grid(fam, len(v), m).apply(g)


def combination_rule(fam: Rule1dFamily, v: Sequence[int], m: int,
                     g: Callable[[np.ndarray], np.ndarray]) -> float:
    """Q~_{|v|,m}(g): the plain sum of tensor rules with |i| = |v| + m - 1."""
    return grid(fam, len(v), m, COMBINATION).apply(g)


def combination_coefficients(d: int, m: int) -> Dict[int, int]:
    """r -> (-1)^(m-r) binom(d-1, m-r) so that Q_{d,m} = sum_r coef[r] Q~_{d,r}."""
    _check(d, m)
    return {r: (-1) ** (m - r) * comb(d - 1, m - r) for r in range(max(m - d + 1, 1), m + 1)}


def combination_assembly(fam: Rule1dFamily, d: int, m: int,
                         g: Callable[[np.ndarray], np.ndarray]) -> float:
    vals = [c * combination_rule(fam, range(d), r, g) for r, c in combination_coefficients(d, m).items()]
    return float(np.sum(vals))


def smolyak_projection_check(fam: Rule1dFamily, u: Sequence[int], v: Sequence[int], m: int,
                             g: Callable[[np.ndarray], np.ndarray]) -> Tuple[float, float]:
    """(Q_{u,m} applied to g(x_v), Q_{v,m}(g)); equal when the rules contain the anchor."""
    u, v = tuple(u), tuple(v)
    if not v:
        raise ValueError("v must be nonempty")
    pos = [u.index(j) for j in v] if set(v) <= set(u) else None
    if pos is None:
        raise ValueError(f"{v} is not a subset of {u}")
    big = smolyak_direct(fam, u, m, lambda x: g(x[:, pos]))
    small = smolyak_direct(fam, v, m, g)
    return big, small


def _poly_power_prefix(coeffs: Sequence[int], d: int, deg: int) -> List[int]:
    """Coefficients 0..deg of (sum_i coeffs[i] x^i)^d with exact integers."""
    acc = [1] + [0] * deg
    for _ in range(d):
        nxt = [0] * (deg + 1)
        for a, ca in enumerate(acc):
            if ca:
                for b in range(1, min(len(coeffs) - 1, deg - a) + 1):
                    nxt[a + b] += ca * coeffs[b]
        acc = nxt
    return acc


def count_evals(fam: Rule1dFamily, d: int, m: int, variant: str = NESTED) -> int:
    """Number of integrand evaluations of one application of the rule."""
    _check(d, m)
    L = d + m - 1
    n = [fam.n(i) for i in range(m + 1)]
    if variant == NESTED:
        coeffs = [0] + [n[i] - n[i - 1] for i in range(1, m + 1)]
        return sum(_poly_power_prefix(coeffs, d, L))
    if variant == NON_NESTED:
        return sum(_poly_power_prefix(n, d, L))
    if variant == COMBINATION:
        return _poly_power_prefix(n, d, L)[L]
    raise ValueError(f"unknown variant {variant!r}")
