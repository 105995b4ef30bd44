"""Compensated summation in float64.

Error-free transformations (Knuth's TwoSum, Dekker's TwoProduct) applied
elementwise with numpy, reduced pairwise along the last axis. The result of
``sum2``/``dot2`` is as accurate as if computed in twice the working
precision and then rounded, up to a factor depending on the condition
number. The reduction order is fixed by the array length, so results are
bitwise reproducible.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1


def two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, al * bl - (((p - ah * bh) - al * bh) - ah * bl)


def _tree(x: np.ndarray, err: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    width = 1 << (n - 1).bit_length()
    if width != n:
        pad = np.zeros(x.shape[:-1] + (width - n,))
        x = np.concatenate([x, pad], axis=-1)
        err = np.concatenate([err, pad], axis=-1)
    while x.shape[-1] > 1:
        s, e = two_sum(x[..., 0::2], x[..., 1::2])
        err = err[..., 0::2] + err[..., 1::2] + e
        x = s
    return x[..., 0] + err[..., 0]


def sum2(x, axis: int = -1) -> np.ndarray:
    """Compensated sum along ``axis``."""
    x = np.moveaxis(np.asarray(x, dtype=float), axis, -1)
    if x.shape[-1] == 0:
        return np.zeros(x.shape[:-1])
    return _tree(x, np.zeros_like(x))


def dot2(x, w) -> np.ndarray:
    """Compensated sum of ``x * w`` over the last axis; ``w`` broadcasts against ``x``."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.shape[-1] == 0:
        return np.zeros(x.shape[:-1])
    p, e = two_prod(x, np.broadcast_to(w, x.shape))
    return _tree(p, e)


def fsum(values: Iterable[float]) -> float:
    """Correctly rounded sum of scalars (used for the outer accumulation)."""
    return math.fsum(values)
