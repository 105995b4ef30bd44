"""Finite subsets of the positive integers and a cardinality-indexed store.

A set is represented as a plain tuple of strictly increasing positive ints.
Tuples hash and compare by value, which is exactly the identity we need.
"""

from __future__ import annotations

from typing import Any, Dict, Generic, Iterable, Iterator, List, Sequence, Tuple, TypeVar

import numpy as np

VarSet = Tuple[int, ...]

MAX_SUBSET_CARDINALITY = 64

P = TypeVar("P")


def varset(indices: Iterable[int]) -> VarSet:
    """Validate and return ``indices`` as a VarSet tuple."""
    u = tuple(int(j) for j in indices)
    if u and u[0] < 1:
        raise ValueError(f"set elements must be positive, got {u}")
    for a, b in zip(u, u[1:]):
        if a >= b:
            raise ValueError(f"set elements must be strictly increasing, got {u}")
    return u


def subsets_of(u: Sequence[int]) -> Iterator[VarSet]:
    """Yield every subset of ``u`` once, in increasing bitmask order over positions.

    Mask bit ``k`` selects ``u[k]``; mask 0 is the empty set and the last mask is ``u``.
    """
    n = len(u)
    if n > MAX_SUBSET_CARDINALITY:
        raise ValueError("set too large for subset enumeration")
    for mask in range(1 << n):
        yield tuple(u[k] for k in range(n) if (mask >> k) & 1)


def position_map(u: Sequence[int], v: Sequence[int]) -> VarSet:
    """Return the 1-based positions within ``u`` at which the elements of ``v`` sit."""
    where = {j: k + 1 for k, j in enumerate(u)}
    try:
        return tuple(where[j] for j in v)
    except KeyError:
        raise ValueError(f"{tuple(v)} is not a subset of {tuple(u)}") from None


def project_point(t: Sequence[float], w: Sequence[int]) -> Tuple[float, ...]:
    """Pick the coordinates of ``t`` at the 1-based positions ``w``."""
    n = len(t)
    out = []
    for k in w:
        if not 1 <= k <= n:
            raise IndexError(f"position {k} out of range for a point of length {n}")
        out.append(t[k - 1])
    return tuple(out)


def mask_positions(mask: int, n: int) -> VarSet:
    """1-based positions selected by ``mask`` among ``n`` slots."""
    return tuple(k + 1 for k in range(n) if (mask >> k) & 1)


def sets_to_array(sets: Sequence[VarSet], d: int) -> np.ndarray:
    """Stack same-cardinality sets into an ``(K, d)`` int64 array."""
    if not sets:
        return np.zeros((0, d), dtype=np.int64)
    return np.asarray(sets, dtype=np.int64).reshape(len(sets), d)


class SetStore(Generic[P]):
    """Array of hash tables, one per cardinality, mapping a set to its payload."""

    def __init__(self) -> None:
        self.tables: List[Dict[VarSet, P]] = [{}]

    def _table(self, ell: int) -> Dict[VarSet, P]:
        while len(self.tables) <= ell:
            self.tables.append({})
        return self.tables[ell]

    def insert(self, u: VarSet, payload: P = None) -> None:  # type: ignore[assignment]
        self._table(len(u))[u] = payload

    def setdefault(self, u: VarSet, payload: P) -> P:
        return self._table(len(u)).setdefault(u, payload)

    def lookup(self, u: VarSet) -> P:
        ell = len(u)
        if ell >= len(self.tables) or u not in self.tables[ell]:
            raise KeyError(u)
        return self.tables[ell][u]

    def __contains__(self, u: object) -> bool:
        if not isinstance(u, tuple):
            return False
        ell = len(u)
        return ell < len(self.tables) and u in self.tables[ell]

    def __len__(self) -> int:
        return sum(len(t) for t in self.tables)

    @property
    def d_sup(self) -> int:
        """Largest cardinality holding at least one set."""
        for ell in range(len(self.tables) - 1, -1, -1):
            if self.tables[ell]:
                return ell
        return 0

    def counts(self) -> List[int]:
        return [len(t) for t in self.tables]

    def of_size(self, ell: int) -> Dict[VarSet, P]:
        if ell >= len(self.tables):
            return {}
        return self.tables[ell]

    def __iter__(self) -> Iterator[VarSet]:
        for table in self.tables:
            yield from table

    def items(self) -> Iterator[Tuple[VarSet, P]]:
        for table in self.tables:
            yield from table.items()

    def sorted_items(self) -> Iterator[Tuple[VarSet, P]]:
        """Items by cardinality, then lexicographically."""
        for table in self.tables:
            for u in sorted(table):
                yield u, table[u]

    def to_dict(self) -> Dict[str, Any]:
        return {",".join(map(str, u)): p for u, p in self.sorted_items()}
