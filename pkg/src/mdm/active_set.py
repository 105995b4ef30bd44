"""Active set U = {u : w(u) > T} for POD weights.

Sets are generated cardinality by cardinality, starting from (1, ..., l)
and walking lexicographically with backtracking: when a set fails the
threshold, every set that would follow it by incrementing the same trailing
slot fails too, so the walk moves one slot to the left.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Dict, List

import numpy as np

from mdm.pod_weights import PodWeights, weight_log
from mdm.setkit import SetStore, VarSet, sets_to_array, varset

DEFAULT_ELL_THRESHOLD = 64


class CapacityError(RuntimeError):
    """A computational cap was hit; continuing would void the error guarantee."""


@dataclass
class ActiveSet:
    store: SetStore
    T: float
    by_size: List[List[VarSet]] = field(default_factory=list)

    @property
    def d_sup(self) -> int:
        return self.store.d_sup

    @property
    def counts(self) -> List[int]:
        """Number of sets of each size 1..d_sup."""
        return [len(s) for s in self.by_size[1:]]

    @property
    def tau(self) -> List[int]:
        """tau_l for l = 1..d_sup: the largest last element among sets of size l."""
        return [max(u[-1] for u in sets) for sets in self.by_size[1:] if sets]

    @property
    def tau_star(self) -> int:
        return max(self.tau, default=0)

    def __len__(self) -> int:
        return len(self.store)

    def __contains__(self, u: object) -> bool:
        return u in self.store

    def __iter__(self):
        for sets in self.by_size:
            yield from sets

    def nonempty(self):
        for sets in self.by_size[1:]:
            yield from sets

    def array(self, ell: int) -> np.ndarray:
        """Sets of size ``ell`` as a ``(K, ell)`` int array, lexicographic order."""
        sets = self.by_size[ell] if ell < len(self.by_size) else []
        return sets_to_array(sets, ell)

    def summary(self) -> Dict:
        return {
            "T": self.T,
            "d_sup": self.d_sup,
            "tau": self.tau,
            "tau_star": self.tau_star,
            "counts": self.counts,
            "total": len(self),
        }

    def write_jsonl(self, fh: IO[str]) -> None:
        for u in self:
            fh.write(json.dumps(list(u)) + "\n")

    @classmethod
    def read_jsonl(cls, fh: IO[str], T: float) -> "ActiveSet":
        return cls.from_sets((varset(json.loads(line)) for line in fh if line.strip()), T)

    @classmethod
    def from_sets(cls, sets, T: float) -> "ActiveSet":
        store: SetStore = SetStore()
        for u in sets:
            store.insert(tuple(u))
        store.insert(())
        by_size = [sorted(store.of_size(ell)) for ell in range(store.d_sup + 1)]
        return cls(store=store, T=T, by_size=by_size)


def build_active_set(
    p: PodWeights, T: float, ell_threshold: int = DEFAULT_ELL_THRESHOLD
) -> ActiveSet:
    if not T > 0:
        raise ValueError("T must be positive")
    if ell_threshold < 1:
        raise ValueError("ell_threshold must be >= 1")
    log_t = math.log(T)
    if not weight_log(p, ()) > log_t:
        raise ValueError("empty active set: w(emptyset) <= T")

    store: SetStore = SetStore()
    store.insert(())
    by_size: List[List[VarSet]] = [[()]]
    for ell in range(1, ell_threshold + 1):
        u = list(range(1, ell + 1))
        i = ell
        found: List[VarSet] = []
        while True:
            if weight_log(p, u) > log_t:
                i = ell
                t = tuple(u)
                store.insert(t)
                found.append(t)
            else:
                i -= 1
            if i == 0:
                break
            base = u[i - 1]
            for j in range(i, ell + 1):
                u[j - 1] = base + j - i + 1
        if not found:
            break
        by_size.append(found)
        if ell == ell_threshold:
            raise CapacityError("cardinality cap hit")
    return ActiveSet(store=store, T=T, by_size=by_size)


def dimension_stats(a: ActiveSet):
    """(d_sup, [tau_1, ..., tau_dsup], tau_star); tau_star = 0 when U = {emptyset}."""
    return a.d_sup, a.tau, a.tau_star
