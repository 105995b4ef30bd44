"""Extended active set and the integer coefficient tables of the MDM engines.

For every nonempty v in U_ext (all nonempty subsets of members of U):

    smolyak       c(v, m)    = sum_{u >= v, m_u = m} (-1)^(|u|-|v|)
    combination   c~(v, m)   = sum_{u >= v, m_u-|v|+1 <= m <= m_u}
                                   (-1)^(|u|-|v|+m_u-m) binom(|v|-1, m_u-m)
    qmc           c(v, w, m) = sum_{u >= v, u|v = w, m_u >= m}
                                   (-1)^(|u|-|v|) 2^(m_max-m_u)

and c_empty = sum_{u in U} (-1)^|u|. Here u|v are the 1-based positions of
the elements of v inside u, stored as a bitmask (bit k-1 set for position k).

Two builders exist for each table. The default one is vectorised over all
(u, v) pairs of a given cardinality with numpy. The ``*_loop`` builders
follow the set-by-set accumulation directly and serve as reference.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb
from typing import IO, Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from mdm.setkit import SetStore, VarSet, mask_positions, position_map, sets_to_array, subsets_of, varset

M_MAX_LIMIT = 62


@dataclass
class LevelAssignment:
    """m_u for every nonempty u of an active set, stored per cardinality.

    ``sets[ell]`` is a ``(K, ell)`` array and ``levels[ell]`` the matching
    ``(K,)`` levels; index 0 is unused (the empty set has no level).
    """

    sets: List[np.ndarray]
    levels: List[np.ndarray]
    _lookup: Optional[Dict[VarSet, int]] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if len(self.sets) != len(self.levels):
            raise ValueError("sets and levels must align")
        for ell, (s, m) in enumerate(zip(self.sets, self.levels)):
            if ell and s.shape != (len(m), ell):
                raise ValueError(f"bad shape for cardinality {ell}")
            if len(m) and m.min() < 0:
                raise ValueError("levels must be non-negative")
        if self.m_max > M_MAX_LIMIT:
            raise ValueError(f"m_max above {M_MAX_LIMIT}")

    @classmethod
    def from_active(cls, active, levels: List[np.ndarray]) -> "LevelAssignment":
        sets = [np.zeros((0, 0), dtype=np.int64)] + [active.array(ell) for ell in range(1, active.d_sup + 1)]
        lv = [np.zeros(0, dtype=np.int64)] + [np.asarray(m, dtype=np.int64) for m in levels]
        return cls(sets, lv)

    @classmethod
    def from_dict(cls, mapping: Mapping[VarSet, int]) -> "LevelAssignment":
        d = max((len(u) for u in mapping), default=0)
        buckets: List[List[Tuple[VarSet, int]]] = [[] for _ in range(d + 1)]
        for u, m in mapping.items():
            u = varset(u)
            if not u:
                continue
            buckets[len(u)].append((u, int(m)))
        sets = [np.zeros((0, 0), dtype=np.int64)]
        levels = [np.zeros(0, dtype=np.int64)]
        for ell in range(1, d + 1):
            b = sorted(buckets[ell])
            sets.append(sets_to_array([u for u, _ in b], ell))
            levels.append(np.array([m for _, m in b], dtype=np.int64))
        return cls(sets, levels)

    @property
    def d_sup(self) -> int:
        return len(self.sets) - 1

    @property
    def m_max(self) -> int:
        return int(max((m.max() for m in self.levels if len(m)), default=0))

    def items(self) -> Iterator[Tuple[VarSet, int]]:
        for s, m in zip(self.sets[1:], self.levels[1:]):
            for row, lv in zip(s.tolist(), m.tolist()):
                yield tuple(row), lv

    def __getitem__(self, u: VarSet) -> int:
        if self._lookup is None:
            self._lookup = dict(self.items())
        return self._lookup[tuple(u)]

    def __len__(self) -> int:
        return sum(len(m) for m in self.levels[1:])

    def histogram(self) -> Dict[int, Dict[int, int]]:
        """{|u|: {m: count}}."""
        out: Dict[int, Dict[int, int]] = {}
        for ell in range(1, self.d_sup + 1):
            vals, cnt = np.unique(self.levels[ell], return_counts=True)
            out[ell] = {int(a): int(b) for a, b in zip(vals, cnt)}
        return out


def _c_empty(levels: LevelAssignment) -> int:
    return 1 + sum((-1) ** ell * len(levels.levels[ell]) for ell in range(1, levels.d_sup + 1))


@dataclass
class _FlatTable:
    """Nonzero coefficients for one cardinality d of v.

    ``v`` (E, d) sets, ``m`` (E,) levels, ``c`` (E,) int64 coefficients and,
    for QMC tables, ``w`` (E,) position bitmasks. Rows are sorted by
    (v, w, m) lexicographically.
    """

    v: np.ndarray
    m: np.ndarray
    c: np.ndarray
    w: Optional[np.ndarray] = None


class _Tables:
    kind = ""

    def __init__(self, ext: List[np.ndarray], flat: List[_FlatTable], c_empty: int, m_max: int) -> None:
        self.ext_arrays = ext  # ext_arrays[d]: (K, d) sorted nonempty members of U_ext
        self.flat = flat  # flat[d] for d = 1..d_sup (index 0 unused)
        self.c_empty = c_empty
        self.m_max = m_max
        self._store: Optional[SetStore] = None

    @property
    def d_sup(self) -> int:
        return len(self.flat) - 1

    @property
    def ext_size(self) -> int:
        """Number of nonempty sets in U_ext."""
        return sum(len(a) for a in self.ext_arrays[1:])

    def ext_sets(self) -> Iterator[VarSet]:
        for a in self.ext_arrays[1:]:
            for row in a.tolist():
                yield tuple(row)

    def nonzero_count(self) -> int:
        return sum(len(f.c) for f in self.flat[1:])

    def _payload(self) -> SetStore:
        raise NotImplementedError

    @property
    def ext(self) -> SetStore:
        """U_ext as a SetStore with the coefficient maps as payload."""
        if self._store is None:
            self._store = self._payload()
        return self._store

    def to_json(self) -> Dict:
        body = {}
        for u, p in self.ext.sorted_items():
            key = ",".join(map(str, u))
            if p and isinstance(next(iter(p.values())), dict):
                body[key] = {",".join(map(str, w)): {str(m): c for m, c in sorted(cm.items())}
                             for w, cm in sorted(p.items())}
            else:
                body[key] = {str(m): c for m, c in sorted(p.items())}
        return {"kind": self.kind, "c_empty": self.c_empty, "m_max": self.m_max, "coefficients": body}

    def dump_json(self, fh: IO[str]) -> None:
        json.dump(self.to_json(), fh, indent=1)


class SmolyakTables(_Tables):
    kind = "smolyak"

    def _payload(self) -> SetStore:
        store: SetStore = SetStore()
        for u in self.ext_sets():
            store.insert(u, {})
        for f in self.flat[1:]:
            for row, m, c in zip(f.v.tolist(), f.m.tolist(), f.c.tolist()):
                store.lookup(tuple(row))[m] = c
        return store


class CombinationTables(SmolyakTables):
    kind = "combination"


class QmcTables(_Tables):
    kind = "qmc"

    def _payload(self) -> SetStore:
        store: SetStore = SetStore()
        for u in self.ext_sets():
            store.insert(u, {})
        for d, f in enumerate(self.flat):
            if d == 0:
                continue
            for row, w, m, c in zip(f.v.tolist(), f.w.tolist(), f.m.tolist(), f.c.tolist()):
                pos = mask_positions(w, 64)
                store.lookup(tuple(row)).setdefault(pos, {})[m] = c
        return store

    def positions(self, v: VarSet) -> List[VarSet]:
        """M(v): the distinct positions u|v over supersets u in U."""
        return sorted(self.ext.lookup(tuple(v)))


# -- vectorised builders ----------------------------------------------------


def _unique_rows(keys: np.ndarray) -> np.ndarray:
    """Distinct rows of ``keys`` in lexicographic order (lexsort beats np.unique(axis=0) here)."""
    if len(keys) == 0:
        return keys
    keys = keys[np.lexsort(keys.T[::-1])]
    new = np.ones(len(keys), dtype=bool)
    new[1:] = np.any(keys[1:] != keys[:-1], axis=1)
    return keys[new]


def _group_rows(keys: np.ndarray, vals: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Sum ``vals`` over identical rows of ``keys``; rows come back sorted."""
    if len(keys) == 0:
        return keys, vals
    order = np.lexsort(keys.T[::-1])
    keys, vals = keys[order], vals[order]
    new = np.ones(len(keys), dtype=bool)
    new[1:] = np.any(keys[1:] != keys[:-1], axis=1)
    starts = np.flatnonzero(new)
    return keys[starts], np.add.reduceat(vals, starts)


def _pairs(levels: LevelAssignment):
    """Yield (d, V, sign, m_u, wmask) for all (u, v) pairs with v a nonempty subset of u, |v| = d."""
    for ell in range(1, levels.d_sup + 1):
        A, M = levels.sets[ell], levels.levels[ell]
        if len(A) == 0:
            continue
        for mask in range(1, 1 << ell):
            cols = [k for k in range(ell) if (mask >> k) & 1]
            d = len(cols)
            sign = -1 if (ell - d) % 2 else 1
            yield d, A[:, cols], sign, M, mask


def _ext_from_keys(keys_by_d: List[List[np.ndarray]], d_sup: int) -> List[np.ndarray]:
    ext = [np.zeros((0, 0), dtype=np.int64)]
    for d in range(1, d_sup + 1):
        if keys_by_d[d]:
            allv = np.concatenate(keys_by_d[d])
            ext.append(_unique_rows(allv))
        else:
            ext.append(np.zeros((0, d), dtype=np.int64))
    return ext


def _check_qmc_capacity(levels: LevelAssignment, n_sets: int) -> None:
    # |c| <= n_sets * 2^m_max must fit in int64
    if levels.m_max > M_MAX_LIMIT or n_sets >= 2 ** (M_MAX_LIMIT - levels.m_max):
        raise OverflowError("QMC coefficient magnitude could overflow int64")


def build_smolyak_tables(levels: LevelAssignment) -> SmolyakTables:
    d_sup = levels.d_sup
    keys: List[List[np.ndarray]] = [[] for _ in range(d_sup + 1)]
    vals: List[List[np.ndarray]] = [[] for _ in range(d_sup + 1)]
    for d, V, sign, M, _ in _pairs(levels):
        keys[d].append(np.column_stack([V, M]))
        vals[d].append(np.full(len(V), sign, dtype=np.int64))
    flat = [_FlatTable(np.zeros((0, 0), dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))]
    for d in range(1, d_sup + 1):
        k, c = _group_rows(np.concatenate(keys[d]), np.concatenate(vals[d])) if keys[d] else (
            np.zeros((0, d + 1), dtype=np.int64), np.zeros(0, dtype=np.int64))
        nz = c != 0
        flat.append(_FlatTable(k[nz, :d], k[nz, d], c[nz]))
    ext = _ext_from_keys([[k[:, :-1] for k in ks] for ks in keys], d_sup)
    return SmolyakTables(ext, flat, _c_empty(levels), levels.m_max)


def build_combination_tables(levels: LevelAssignment) -> CombinationTables:
    d_sup = levels.d_sup
    keys: List[List[np.ndarray]] = [[] for _ in range(d_sup + 1)]
    vals: List[List[np.ndarray]] = [[] for _ in range(d_sup + 1)]
    ext_keys: List[List[np.ndarray]] = [[] for _ in range(d_sup + 1)]
    for d, V, sign, M, _ in _pairs(levels):
        ext_keys[d].append(V)
        for t in range(d):  # t = m_u - m
            m = M - t
            ok = m >= 1
            if not ok.any():
                continue
            coef = sign * (-1) ** t * comb(d - 1, t)
            keys[d].append(np.column_stack([V[ok], m[ok]]))
            vals[d].append(np.full(int(ok.sum()), coef, dtype=np.int64))
    flat = [_FlatTable(np.zeros((0, 0), dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))]
    for d in range(1, d_sup + 1):
        k, c = _group_rows(np.concatenate(keys[d]), np.concatenate(vals[d])) if keys[d] else (
            np.zeros((0, d + 1), dtype=np.int64), np.zeros(0, dtype=np.int64))
        nz = c != 0
        flat.append(_FlatTable(k[nz, :d], k[nz, d], c[nz]))
    ext = _ext_from_keys(ext_keys, d_sup)
    return CombinationTables(ext, flat, _c_empty(levels), levels.m_max)


def build_qmc_tables(levels: LevelAssignment) -> QmcTables:
    d_sup, m_max = levels.d_sup, levels.m_max
    _check_qmc_capacity(levels, max(len(levels), 1))
    keys: List[List[np.ndarray]] = [[] for _ in range(d_sup + 1)]
    vals: List[List[np.ndarray]] = [[] for _ in range(d_sup + 1)]
    for d, V, sign, M, mask in _pairs(levels):
        keys[d].append(np.column_stack([V, np.full(len(V), mask, dtype=np.int64), M]))
        vals[d].append(sign * (np.int64(1) << (m_max - M)))
    flat = [_FlatTable(np.zeros((0, 0), dtype=np.int64), np.zeros(0, dtype=np.int64),
                       np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))]
    for d in range(1, d_sup + 1):
        if not keys[d]:
            z = np.zeros(0, dtype=np.int64)
            flat.append(_FlatTable(np.zeros((0, d), dtype=np.int64), z, z, z))
            continue
        k, s = _group_rows(np.concatenate(keys[d]), np.concatenate(vals[d]))
        # rows sorted by (v, w, m_u); c(v, w, m) is the suffix sum over m_u >= m
        grp = k[:, : d + 1]
        new = np.ones(len(k), dtype=bool)
        new[1:] = np.any(grp[1:] != grp[:-1], axis=1)
        gid = np.cumsum(new) - 1
        gmax = np.maximum.reduceat(k[:, d + 1], np.flatnonzero(new))
        # expand each group to m = 0..gmax and place the m_u contributions
        lens = gmax + 1
        offs = np.concatenate([[0], np.cumsum(lens)])
        dense = np.zeros(offs[-1], dtype=np.int64)
        dense[offs[gid] + k[:, d + 1]] = s
        # suffix sum within each group: sum(dense[i : end of group])
        cs0 = np.concatenate([[0], np.cumsum(dense)])
        g_of = np.repeat(np.arange(len(lens)), lens)
        idx = np.arange(offs[-1])
        suffix = cs0[offs[g_of + 1]] - cs0[idx]
        m_of = idx - offs[g_of]
        nz = suffix != 0
        starts = np.flatnonzero(new)
        gk = k[starts]
        flat.append(_FlatTable(gk[g_of[nz], :d], m_of[nz], suffix[nz], gk[g_of[nz], d]))
    ext = _ext_from_keys([[k[:, :-2] for k in ks] for ks in keys], d_sup)
    return QmcTables(ext, flat, _c_empty(levels), m_max)


# -- reference builders -------------------------------------------------------


def _empty_flat_from_store(store: SetStore, d_sup: int, qmc: bool) -> List[_FlatTable]:
    flat = [_FlatTable(np.zeros((0, 0), dtype=np.int64), np.zeros(0, dtype=np.int64),
                       np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64) if qmc else None)]
    for d in range(1, d_sup + 1):
        rows = []
        for v in sorted(store.of_size(d)):
            p = store.lookup(v)
            if qmc:
                for w in sorted(p, key=lambda t: sum(1 << (k - 1) for k in t)):
                    wm = sum(1 << (k - 1) for k in w)
                    for m in sorted(p[w]):
                        if p[w][m]:
                            rows.append((v, wm, m, p[w][m]))
            else:
                for m in sorted(p):
                    if p[m]:
                        rows.append((v, 0, m, p[m]))
        flat.append(_FlatTable(
            sets_to_array([r[0] for r in rows], d),
            np.array([r[2] for r in rows], dtype=np.int64),
            np.array([r[3] for r in rows], dtype=np.int64),
            np.array([r[1] for r in rows], dtype=np.int64) if qmc else None,
        ))
    return flat


def _ext_from_store(store: SetStore, d_sup: int) -> List[np.ndarray]:
    return [np.zeros((0, 0), dtype=np.int64)] + [
        sets_to_array(sorted(store.of_size(d)), d) for d in range(1, d_sup + 1)
    ]


def build_smolyak_tables_loop(levels: LevelAssignment, combination: bool = False) -> SmolyakTables:
    """Set-by-set accumulation over U in increasing cardinality."""
    store: SetStore = SetStore()
    c_empty = 1
    for u, mu in levels.items():
        c_empty += (-1) ** len(u)
        for v in subsets_of(u):
            if not v:
                continue
            p = store.setdefault(v, {})
            sign = (-1) ** (len(u) - len(v))
            if combination:
                for m in range(max(mu - len(v) + 1, 1), mu + 1):
                    p[m] = p.get(m, 0) + sign * (-1) ** (mu - m) * comb(len(v) - 1, mu - m)
            else:
                p[mu] = p.get(mu, 0) + sign
    d_sup = levels.d_sup
    cls = CombinationTables if combination else SmolyakTables
    out = cls(_ext_from_store(store, d_sup), _empty_flat_from_store(store, d_sup, False), c_empty, levels.m_max)
    return out


def build_combination_tables_loop(levels: LevelAssignment) -> CombinationTables:
    return build_smolyak_tables_loop(levels, combination=True)  # type: ignore[return-value]


def build_qmc_tables_loop(levels: LevelAssignment) -> QmcTables:
    m_max = levels.m_max
    _check_qmc_capacity(levels, max(len(levels), 1))
    store: SetStore = SetStore()
    c_empty = 1
    for u, mu in levels.items():
        c_empty += (-1) ** len(u)
        scale = 1 << (m_max - mu)
        for v in subsets_of(u):
            if not v:
                continue
            w = position_map(u, v)
            p = store.setdefault(v, {})
            cm = p.setdefault(w, {})
            sign = (-1) ** (len(u) - len(v))
            for m in range(0, mu + 1):
                cm[m] = cm.get(m, 0) + sign * scale
    d_sup = levels.d_sup
    out = QmcTables(_ext_from_store(store, d_sup), _empty_flat_from_store(store, d_sup, True), c_empty, m_max)
    return out
