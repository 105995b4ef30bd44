"""MDM engines: efficient Smolyak, combination-technique and (R)QMC, plus naive oracles.

The efficient engines walk the coefficient tables. All sets v of one size
that need the same quadrature rule (same level, and for QMC the same
position mask) are evaluated in one call to
:meth:`AnchoredIntegrand.evaluate_many`. Inner sums over quadrature nodes
are compensated (:mod:`mdm.summation`); the outer sum over all terms uses
``math.fsum``, which is exactly rounded and hence independent of the
order in which work items finish.

The naive engines evaluate sum_{u in U} A_u(f_u) term by term, expanding
every f_u into its 2^|u| anchored evaluations at every node.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from mdm.coeff_tables import CombinationTables, LevelAssignment, QmcTables, SmolyakTables
from mdm.decomposition import AnchoredIntegrand
from mdm.lattice import LatticeSequence, apply_shift, random_shifts, tent_translate
from mdm.quad1d import Rule1dFamily
from mdm.smolyak import COMBINATION, combination_coefficients, direct_grid, grid
from mdm.summation import dot2, sum2, two_prod, two_sum

# max K * N * d doubles per evaluate_many call
CHUNK_ELEMENTS = 1 << 22


@dataclass
class MdmReport:
    method: str
    estimate: float
    eval_count: int
    wall_time: float
    per_shift: Optional[List[float]] = None
    std_error: Optional[float] = None
    n_terms: int = 0
    config: Dict = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def rqmc_std_error(values: Sequence[float]) -> Optional[float]:
    """sqrt(sum (A_q - mean)^2 / (r (r - 1))); None for r < 2."""
    r = len(values)
    if r < 2:
        return None
    mean = math.fsum(values) / r
    return math.sqrt(math.fsum((a - mean) ** 2 for a in values) / (r * (r - 1)))


def _chunks(k: int, n: int, d: int) -> Iterable[slice]:
    step = max(1, CHUNK_ELEMENTS // max(1, n * max(d, 1)))
    for a in range(0, k, step):
        yield slice(a, min(k, a + step))


def _split_groups(keys: np.ndarray) -> List[np.ndarray]:
    """Row indices grouped by identical rows of ``keys`` (K, p), groups in sorted key order."""
    if len(keys) == 0:
        return []
    order = np.lexsort(keys.T[::-1])
    k = keys[order]
    new = np.ones(len(k), dtype=bool)
    new[1:] = np.any(k[1:] != k[:-1], axis=1)
    return np.split(order, np.flatnonzero(new)[1:])


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _anchor(f: AnchoredIntegrand) -> float:
    return f.at_anchor()


def _tau_star(tables) -> int:
    return int(max((a[:, -1].max() for a in tables.ext_arrays[1:] if len(a)), default=0))


# -- Smolyak ------------------------------------------------------------------


@dataclass
class _UnionRule:
    """Distinct points of the grids (d, m), m in ``ms``; row j of ``weights`` is grid ms[j] on them."""

    points: np.ndarray
    weights: np.ndarray  # (len(ms), N)


def _union_rule(fam: Rule1dFamily, d: int, ms: Tuple[int, ...], kind: Optional[str]) -> _UnionRule:
    key = ("union", kind, d, ms)
    hit = fam._grids.get(key)
    if hit is not None:
        return hit  # type: ignore[return-value]
    grids = [direct_grid(fam, d, m) if kind is None else grid(fam, d, m, kind) for m in ms]
    pts = np.concatenate([g.points for g in grids])
    first = np.concatenate([np.full(g.size, j) for j, g in enumerate(grids)])
    # stable sort by point, then keep the earliest occurrence of each point
    order = np.lexsort(np.vstack([first[None, :], pts.T[::-1]]))
    srt = pts[order]
    new = np.ones(len(srt), dtype=bool)
    new[1:] = np.any(srt[1:] != srt[:-1], axis=1)
    uid = np.cumsum(new) - 1  # distinct-point id of each sorted row
    rep = order[new]
    # reorder distinct points by first level, then by position in that grid
    pos = np.argsort(rep, kind="stable")
    rank = np.empty_like(pos)
    rank[pos] = np.arange(len(pos))
    col = np.empty(len(pts), dtype=np.int64)
    col[order] = rank[uid]
    points = pts[rep[pos]]
    W = np.zeros((len(grids), len(points)))
    off = 0
    for j, g in enumerate(grids):
        # a point may recur inside one combination grid: add its weights
        np.add.at(W[j], col[off:off + g.size], g.weights)
        off += g.size
    points.setflags(write=False)
    W.setflags(write=False)
    out = _UnionRule(points, W)
    fam._grids[key] = out
    return out


def _run_smolyak(tables: SmolyakTables, fam: Rule1dFamily, f: AnchoredIntegrand, kind: Optional[str],
                 method: str, threads: int) -> MdmReport:
    """Each v is evaluated once, on the union of the grids its coefficients refer to."""
    t0 = time.perf_counter()
    c0 = f.eval_count
    terms = [tables.c_empty * _anchor(f)] if tables.c_empty else []
    items = []
    n_terms = 0
    for d in range(1, tables.d_sup + 1):
        flat = tables.flat[d]
        if len(flat.c) == 0:
            continue
        n_terms += len(flat.c)
        # rows are sorted by (v, m): the last row of each v holds its top level
        new = np.ones(len(flat.c), dtype=bool)
        new[1:] = np.any(flat.v[1:] != flat.v[:-1], axis=1)
        owner = np.cumsum(new) - 1
        V = flat.v[new]
        last = np.r_[np.flatnonzero(new)[1:], len(flat.c)] - 1
        top = flat.m[last]
        for g in _split_groups(top[:, None]):
            rows = np.flatnonzero(np.isin(owner, g))
            ms = tuple(np.unique(flat.m[rows]).tolist())
            slot = {m: j for j, m in enumerate(ms)}
            C = np.zeros((len(g), len(ms)))
            local = np.searchsorted(g, owner[rows])
            C[local, [slot[m] for m in flat.m[rows].tolist()]] = flat.c[rows]
            items.append((d, ms, V[g], C))

    def work(item) -> List[float]:
        d, ms, Vg, C = item
        rule = _union_rule(fam, d, ms, kind)
        out: List[float] = []
        for sl in _chunks(len(Vg), len(rule.points), d + 2):
            vals = f.evaluate_many(Vg[sl], rule.points)
            # sum_m c(v, m) Q_{v,m} as one weighted sum per v
            out.extend(dot2(vals, C[sl] @ rule.weights).tolist())
        return out

    for part in _map(work, items, threads):
        terms.extend(part)
    est = math.fsum(terms)
    return MdmReport(method, est, f.eval_count - c0, time.perf_counter() - t0, n_terms=n_terms)


def run_smolyak_direct(tables: SmolyakTables, fam: Rule1dFamily, f: AnchoredIntegrand,
                       threads: int = 1) -> MdmReport:
    """c_empty f(0) + sum_{v, m} c(v, m) Q_{v,m}(f(._v; 0))."""
    return _run_smolyak(tables, fam, f, None, "smolyak-direct", threads)


def run_smolyak_combination(tables: CombinationTables, fam: Rule1dFamily, f: AnchoredIntegrand,
                            threads: int = 1) -> MdmReport:
    """c_empty f(0) + sum_{v, m} c~(v, m) Q~_{v,m}(f(._v; 0))."""
    return _run_smolyak(tables, fam, f, COMBINATION, "smolyak-ct", threads)


# -- QMC ----------------------------------------------------------------------


@dataclass
class _QmcItem:
    d: int
    top: int  # highest level with a nonzero coefficient
    V: np.ndarray  # (K, d) sets v
    cols: np.ndarray  # (K, d) zero-based point coordinates given by the positions w
    C: np.ndarray  # (K, top + 1) coefficients c(v, w, m) as floats


def _qmc_plan(tables: QmcTables) -> List[_QmcItem]:
    """One work item per (|v|, top level), one row per (v, w); cached on the tables."""
    plan = getattr(tables, "_plan", None)
    if plan is not None:
        return plan
    plan = []
    for d in range(1, tables.d_sup + 1):
        fl = tables.flat[d]
        if len(fl.c) == 0:
            continue
        # rows are sorted by (v, w, m): find the (v, w) groups
        key = np.column_stack([fl.v, fl.w])
        new = np.ones(len(key), dtype=bool)
        new[1:] = np.any(key[1:] != key[:-1], axis=1)
        starts = np.flatnonzero(new)
        gid = np.cumsum(new) - 1
        top = np.maximum.reduceat(fl.m, starts)
        gw = fl.w[starts]
        bits = (gw[:, None] >> np.arange(64)[None, :]) & 1
        cols = np.nonzero(bits)[1].reshape(len(gw), d)
        for t in np.unique(top):
            sel = np.flatnonzero(top == t)
            slot = np.full(len(starts), -1, dtype=np.int64)
            slot[sel] = np.arange(len(sel))
            rows = np.flatnonzero(slot[gid] >= 0)
            dense = np.zeros((len(sel), int(t) + 1))
            dense[slot[gid[rows]], fl.m[rows]] = fl.c[rows]
            plan.append(_QmcItem(d, int(t), fl.v[starts[sel]], cols[sel], dense))
    tables._plan = plan
    return plan


def _dyadic_block_sums(vals: np.ndarray, top: int) -> np.ndarray:
    """Block sums over columns [0, 1), [1, 2), [2, 4), ..., [2^(top-1), 2^top).

    One compensated pairwise reduction of each row: after j pairing rounds
    node 1 holds the sum over columns [2^j, 2^(j+1)).
    """
    out = np.empty((vals.shape[0], top + 1))
    out[:, 0] = vals[:, 0]
    x, err = vals, np.zeros_like(vals)
    for j in range(top):
        out[:, j + 1] = x[:, 1] + err[:, 1]
        if j + 1 < top:
            s, e = two_sum(x[:, 0::2], x[:, 1::2])
            err = err[:, 0::2] + err[:, 1::2] + e
            x = s
    return out


def run_qmc(tables: QmcTables, seq: LatticeSequence, f: AnchoredIntegrand,
            shift: Optional[np.ndarray] = None, threads: int = 1) -> MdmReport:
    """c_empty f(0) + sum_{v, w, m} c(v, w, m) S_{v,w,m}(f) / 2^m_max.

    S_{v,w,m} is the sum of f(._v; 0) over lattice block m, using point
    coordinates at positions w. For each (v, w) the points 0 .. 2^top - 1
    are evaluated once and split into blocks. ``shift`` is indexed by
    variable: variable j is shifted by shift[j - 1].
    """
    t0 = time.perf_counter()
    c0 = f.eval_count
    if tables.m_max > seq.m_cap:
        raise ValueError("lattice exhausted: m_max above m_cap")
    if shift is not None:
        shift = np.asarray(shift, dtype=float)
        if len(shift) < _tau_star(tables):
            raise ValueError("shift shorter than the truncation dimension")
    plan = _qmc_plan(tables)
    # radical-inverse order: every level's points are a prefix of the highest level's
    top_all = max((it.top for it in plan), default=0)
    base = seq.points(np.arange(1 << top_all), tables.d_sup)
    anchor = tables.c_empty * _anchor(f) if tables.c_empty else 0.0

    def work(it: _QmcItem) -> List[float]:
        t = base[: 1 << it.top]
        out: List[float] = []
        for sl in _chunks(len(it.V), len(t), it.d):
            X = t[:, it.cols[sl]].transpose(1, 0, 2)  # (K, N, d)
            if shift is not None:
                X = apply_shift(X, shift[it.V[sl] - 1][:, None, :])
            vals = f.evaluate_many(it.V[sl], tent_translate(X))
            S = _dyadic_block_sums(vals, it.top)
            p, e = two_prod(it.C[sl], S)
            out.extend(sum2(np.concatenate([p, e], axis=1)).tolist())
        return out

    terms: List[float] = []
    for part in _map(work, plan, threads):
        terms.extend(part)
    # block sums carry the integer factor 2^(m_max - m_u); rescale exactly
    scale = math.ldexp(1.0, -tables.m_max)
    est = math.fsum([anchor] + [t * scale for t in terms])
    return MdmReport("qmc" if shift is None else "qmc-shifted", est, f.eval_count - c0,
                     time.perf_counter() - t0, n_terms=tables.nonzero_count())


def run_rqmc(tables: QmcTables, seq: LatticeSequence, f: AnchoredIntegrand, r: int, seed: int,
             threads: int = 1) -> MdmReport:
    """Mean over ``r`` independent random shifts, with the sample standard error."""
    if r < 1:
        raise ValueError("need at least one shift")
    t0 = time.perf_counter()
    c0 = f.eval_count
    shifts = random_shifts(r, max(_tau_star(tables), 1), seed)
    per = [run_qmc(tables, seq, f, shift=s, threads=threads).estimate for s in shifts]
    est = math.fsum(per) / r
    return MdmReport("rqmc", est, f.eval_count - c0, time.perf_counter() - t0, per_shift=per,
                     std_error=rqmc_std_error(per), n_terms=tables.nonzero_count(),
                     config={"r": r, "seed": seed})


def prepare_smolyak(tables: SmolyakTables, fam: Rule1dFamily, combination: bool = False) -> None:
    """Build every quadrature grid the tables refer to (cached on ``fam``)."""
    kind = COMBINATION if combination else None
    for d in range(1, tables.d_sup + 1):
        flat = tables.flat[d]
        if len(flat.c) == 0:
            continue
        new = np.ones(len(flat.c), dtype=bool)
        new[1:] = np.any(flat.v[1:] != flat.v[:-1], axis=1)
        owner = np.cumsum(new) - 1
        top = flat.m[np.r_[np.flatnonzero(new)[1:], len(flat.c)] - 1]
        for t in np.unique(top).tolist():
            ms = tuple(np.unique(flat.m[np.isin(owner, np.flatnonzero(top == t))]).tolist())
            _union_rule(fam, d, ms, kind)


def prepare_qmc(tables: QmcTables) -> None:
    """Build the QMC work plan (cached on ``tables``)."""
    _qmc_plan(tables)


def prepare_naive(variant: str, levels: LevelAssignment, fam: Optional[Rule1dFamily] = None) -> None:
    """Build the grids a naive Smolyak run will use, so timing covers evaluation only."""
    if not variant.startswith("smolyak") or fam is None:
        return
    for ell in range(1, levels.d_sup + 1):
        for m in np.unique(levels.levels[ell]).tolist():
            if variant == "smolyak-direct":
                direct_grid(fam, ell, m)
            else:
                for r in combination_coefficients(ell, m):
                    grid(fam, ell, r, COMBINATION)


# -- naive oracles -------------------------------------------------------------


def _anchored_values(f: AnchoredIntegrand, U: np.ndarray, X: np.ndarray) -> np.ndarray:
    """f_u at the nodes: sum over subsets v of u of (-1)^(|u|-|v|) f(x_v; 0).

    ``U`` is (K, l); ``X`` is (N, l) shared or (K, N, l) per set. Returns (K, N).
    """
    ell = U.shape[1]
    acc = None
    comp = None
    for mask in range(1 << ell):
        cols = [k for k in range(ell) if (mask >> k) & 1]
        vals = f.evaluate_many(U[:, cols], X[..., cols])
        if (ell - len(cols)) % 2:
            vals = -vals
        if acc is None:
            acc, comp = vals, np.zeros_like(vals)
        else:
            acc, e = two_sum(acc, vals)
            comp += e
    return acc + comp


NAIVE_VARIANTS = ("smolyak-direct", "smolyak-ct", "qmc")


def run_naive(variant: str, levels: LevelAssignment, f: AnchoredIntegrand, *,
              fam: Optional[Rule1dFamily] = None, seq: Optional[LatticeSequence] = None,
              shift: Optional[np.ndarray] = None, threads: int = 1) -> MdmReport:
    """f(0) + sum_{u in U, u nonempty} A_u(f_u), each f_u expanded explicitly."""
    if variant not in NAIVE_VARIANTS:
        raise ValueError(f"unknown naive variant {variant!r}")
    if variant.startswith("smolyak") and fam is None:
        raise ValueError("Smolyak variants need a rule family")
    if variant == "qmc" and seq is None:
        raise ValueError("QMC variant needs a lattice sequence")
    t0 = time.perf_counter()
    c0 = f.eval_count
    terms = [_anchor(f)]
    items = []
    for ell in range(1, levels.d_sup + 1):
        A, M = levels.sets[ell], levels.levels[ell]
        for idx in _split_groups(M[:, None]):
            items.append((ell, int(M[idx[0]]), A[idx]))
    if variant == "qmc" and levels.m_max > seq.m_cap:
        raise ValueError("lattice exhausted: m_max above m_cap")

    def rules(ell: int, m: int) -> List[Tuple[np.ndarray, np.ndarray]]:
        if variant == "smolyak-direct":
            g = direct_grid(fam, ell, m)
            return [(g.points, g.weights)]
        if variant == "smolyak-ct":
            out = []
            for r, c in combination_coefficients(ell, m).items():
                g = grid(fam, ell, r, COMBINATION)
                out.append((g.points, c * g.weights))
            return out
        pts = seq.points(np.arange(1 << m), ell)
        return [(pts, np.full(len(pts), math.ldexp(1.0, -m)))]

    def work(item) -> List[float]:
        ell, m, A = item
        out: List[float] = []
        for pts, wts in rules(ell, m):
            for sl in _chunks(len(A), len(pts), ell << ell):
                if variant != "qmc":
                    X = pts
                elif shift is None:
                    X = tent_translate(pts)
                else:
                    X = tent_translate(apply_shift(pts[None, :, :], shift[A[sl] - 1][:, None, :]))
                fu = _anchored_values(f, A[sl], X)
                out.extend(dot2(fu, wts).tolist())
        return out

    for part in _map(work, items, threads):
        terms.extend(part)
    return MdmReport("naive-" + variant, math.fsum(terms), f.eval_count - c0, time.perf_counter() - t0,
                     n_terms=len(levels))
