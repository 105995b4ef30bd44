"""Anchored integrands and the explicit anchored decomposition.

An integrand is only ever evaluated at anchored points (x_v; 0): the
coordinates in ``v`` take the values in ``x`` and all others are zero. The
engines call :meth:`AnchoredIntegrand.evaluate_many` with many sets of the
same size at once, so subclasses should vectorise it when they can.
"""

from __future__ import annotations

import math
import threading
from typing import Callable, Sequence

import numpy as np

from mdm.setkit import VarSet, subsets_of

MAX_ANCHORED_TERM_CARDINALITY = 30


def default_cost(ell: int) -> float:
    """Cost of one decomposition term f_u with |u| = ell."""
    return float(max((2**ell) * ell, 1))


class AnchoredIntegrand:
    """Base class: f(x_v; 0) with an evaluation counter.

    Subclasses implement :meth:`_eval`, taking an int array ``v`` of shape
    ``(d,)`` and points ``x`` of shape ``(N, d)`` and returning ``(N,)``.
    """

    def __init__(self, cost: Callable[[int], float] = default_cost) -> None:
        self.cost = cost
        self._count = 0
        self._lock = threading.Lock()

    @property
    def eval_count(self) -> int:
        return self._count

    def reset_count(self) -> None:
        with self._lock:
            self._count = 0

    def _add(self, n: int) -> None:
        with self._lock:
            self._count += int(n)

    def _eval(self, v: np.ndarray, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _eval_many(self, vs: np.ndarray, x: np.ndarray) -> np.ndarray:
        if x.ndim == 2:
            return np.stack([self._eval(v, x) for v in vs]) if len(vs) else np.zeros((0, x.shape[0]))
        return np.stack([self._eval(v, xk) for v, xk in zip(vs, x)]) if len(vs) else np.zeros((0, x.shape[1]))

    def evaluate(self, v: Sequence[int], x) -> np.ndarray:
        """f(x_v; 0) for each row of ``x`` (shape ``(N, |v|)``)."""
        v = np.asarray(v, dtype=np.int64).reshape(-1)
        x = np.asarray(x, dtype=float)
        x = x.reshape(-1, len(v)) if len(v) else x.reshape(max(1, x.shape[0] if x.ndim else 1), 0)
        self._add(x.shape[0])
        return self._eval(v, x)

    def evaluate_many(self, vs: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Evaluate ``K`` same-size sets at once.

        ``vs`` has shape ``(K, d)``. ``x`` is either ``(N, d)`` (points shared by
        all sets) or ``(K, N, d)`` (points per set). Returns ``(K, N)``.
        """
        vs = np.asarray(vs, dtype=np.int64)
        x = np.asarray(x, dtype=float)
        n = x.shape[-2]
        self._add(vs.shape[0] * n)
        return self._eval_many(vs, x)

    def at_anchor(self) -> float:
        """f(0)."""
        return float(self.evaluate((), np.zeros((1, 0)))[0])


class CallableIntegrand(AnchoredIntegrand):
    """Wrap a plain ``fn(v, x) -> values`` with the same signature as ``_eval``."""

    def __init__(self, fn: Callable[[np.ndarray, np.ndarray], np.ndarray], **kw) -> None:
        super().__init__(**kw)
        self._fn = fn

    def _eval(self, v: np.ndarray, x: np.ndarray) -> np.ndarray:
        return np.asarray(self._fn(v, x), dtype=float).reshape(x.shape[0])


def anchored_term(f: AnchoredIntegrand, u: VarSet, x: Sequence[float]) -> float:
    """f_u(x_u) = sum over v subset of u of (-1)^(|u|-|v|) f(x_v; 0)."""
    if len(u) > MAX_ANCHORED_TERM_CARDINALITY:
        raise ValueError("set too large for the explicit anchored decomposition")
    x = tuple(float(a) for a in x)
    if len(x) != len(u):
        raise ValueError("point length must match the set size")
    pos = {j: k for k, j in enumerate(u)}
    terms = []
    for v in subsets_of(u):
        xv = np.array([[x[pos[j]] for j in v]], dtype=float).reshape(1, len(v))
        sign = -1.0 if (len(u) - len(v)) % 2 else 1.0
        terms.append(sign * float(f.evaluate(v, xv)[0]))
    return math.fsum(terms)
