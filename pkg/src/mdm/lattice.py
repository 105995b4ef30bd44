"""Extensible rank-1 lattice sequence in radical-inverse order.

Point ``i`` is frac(phi_2(i) * z), with phi_2 the base-2 radical inverse.
With a modulus 2**m_cap this is computed exactly in integers as
(bitrev(i) * z_j mod 2**m_cap) / 2**m_cap. The first 2**m points are the
lattice {k z / 2**m : 0 <= k < 2**m}, and points
floor(2**(m-1)) <= i < 2**m are the ones added when going from level m - 1
to level m.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

M_CAP = 25

_DEFAULT_Z = (
    1, 756581, 694385, 178383, 437131, 945527, 62405, 1079809, 991997, 750785,
    187845, 1666795, 491701, 1092667, 1279469, 817683, 1946073, 1946073, 1530387, 686611,
)


def default_generating_vector(d: Optional[int] = None) -> np.ndarray:
    """The 20-dimensional default vector, or its first ``d`` components."""
    z = np.array(_DEFAULT_Z, dtype=np.int64)
    if d is None:
        return z
    if d > len(z):
        raise ValueError("generating vector exhausted")
    return z[:d]


def read_generating_vector(path: str | Path) -> np.ndarray:
    """Read a generating vector from a text file with one integer per line."""
    vals = [int(line.split()[0]) for line in Path(path).read_text().splitlines()
            if line.strip() and not line.lstrip().startswith("#")]
    if not vals or min(vals) < 1:
        raise ValueError("generating vector must hold positive integers")
    return np.array(vals, dtype=np.int64)


def bit_reverse(i: np.ndarray, bits: int) -> np.ndarray:
    """Reverse the lowest ``bits`` bits of each entry of ``i``."""
    i = np.asarray(i, dtype=np.int64)
    out = np.zeros_like(i)
    for b in range(bits):
        out |= ((i >> b) & 1) << (bits - 1 - b)
    return out


@dataclass
class LatticeSequence:
    z: np.ndarray = field(default_factory=default_generating_vector)
    m_cap: int = M_CAP

    def __post_init__(self) -> None:
        self.z = np.asarray(self.z, dtype=np.int64).reshape(-1)
        if not 1 <= self.m_cap <= 30:
            raise ValueError("m_cap must lie in 1..30")
        if len(self.z) == 0 or self.z.min() < 1:
            raise ValueError("generating vector must hold positive integers")
        # keep products below 2**63: z_j < 2**m_cap after reduction
        self.z = self.z % (1 << self.m_cap)

    @property
    def dim(self) -> int:
        return len(self.z)

    @property
    def n_max(self) -> int:
        return 1 << self.m_cap

    def _check(self, d: int) -> None:
        if d > self.dim:
            raise ValueError("generating vector exhausted")
        if d < 0:
            raise ValueError("dimension must be >= 0")

    def points(self, idx, d: int) -> np.ndarray:
        """Points for the indices ``idx`` (int array) in ``d`` dimensions, shape (N, d)."""
        self._check(d)
        idx = np.asarray(idx, dtype=np.int64).reshape(-1)
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_max):
            raise IndexError("lattice index out of range")
        r = bit_reverse(idx, self.m_cap)
        num = (r[:, None] * self.z[None, :d]) & (self.n_max - 1)
        return num / float(self.n_max)

    def block(self, m: int, d: int) -> np.ndarray:
        """Points floor(2**(m-1)) <= i < 2**m: the single origin for m = 0."""
        if not 0 <= m <= self.m_cap:
            raise ValueError("lattice exhausted: level beyond m_cap")
        return self.points(np.arange(block_start(m), 1 << m), d)


def block_start(m: int) -> int:
    return (1 << (m - 1)) if m >= 1 else 0


def lattice_point(seq: LatticeSequence, i: int, d: int) -> np.ndarray:
    return seq.points([i], d)[0]


def tent_translate(x):
    """x -> (1 - |2x - 1|) - 1/2, mapping [0, 1] onto [-1/2, 1/2]."""
    x = np.asarray(x, dtype=float)
    return 0.5 - np.abs(2.0 * x - 1.0)


def apply_shift(x, delta):
    """frac(x + delta), broadcasting ``delta`` over leading axes."""
    y = np.asarray(x, dtype=float) + np.asarray(delta, dtype=float)
    return y - np.floor(y)


def shifted_point(seq: LatticeSequence, i: int, d: int, delta: Optional[Sequence[float]] = None) -> np.ndarray:
    x = lattice_point(seq, i, d)
    if delta is not None:
        x = apply_shift(x, np.asarray(delta, dtype=float)[:d])
    return tent_translate(x)


def random_shifts(r: int, dim: int, seed: int) -> np.ndarray:
    """``r`` shifts in [0,1)^dim; shift q comes from its own Philox stream.

    Stream q is keyed by (seed, q), so shift q does not depend on r.
    """
    if r < 1:
        raise ValueError("need at least one shift")
    out = np.empty((r, dim))
    for q in range(r):
        ss = np.random.SeedSequence(seed, spawn_key=(q,))
        out[q] = np.random.Generator(np.random.Philox(ss)).random(dim)
    return out
