import math

import numpy as np
import pytest
from scipy.special import zeta as scipy_zeta

from mdm.active_set import CapacityError, build_active_set
from mdm.integrands import (
    NormModel,
    TestIntegrand,
    budget_dict,
    point_budget,
    qmc_level,
    qmc_levels,
    smolyak_levels,
    zeta,
)
from mdm.pod_weights import weight_log
from mdm.quad1d import TrapezoidalFamily
from mdm.smolyak import count_evals


def test_zeta_accuracy():
    assert zeta(2.0) == pytest.approx(math.pi**2 / 6, rel=1e-14)
    assert zeta(4.0) == pytest.approx(math.pi**4 / 90, rel=1e-14)
    assert zeta(3.0) == pytest.approx(1.2020569031595942, rel=1e-14)  # Apery's constant
    for s in (1.5, 2.5, 3.7, 6.0):
        assert zeta(s) == pytest.approx(float(scipy_zeta(s)), rel=1e-14)


def test_integrand_values():
    f = TestIntegrand(3.0)
    assert f.at_anchor() == 1.0
    assert f.evaluate((1,), [[0.5]])[0] == pytest.approx(2 / 3, rel=1e-15)
    x = np.array([[0.1, -0.3, 0.4]])
    want = 1 / (1 + 0.1 - 0.3 / 8 + 0.4 / 27)
    assert f.evaluate((1, 2, 3), x)[0] == pytest.approx(want, rel=1e-15)
    with pytest.raises(ValueError):
        TestIntegrand(1.0)


def test_norm_model_matches_pod_weights():
    nm = NormModel(3.0)
    p = nm.pod_weights()
    rng = np.random.default_rng(4)
    for ell in range(0, 6):
        sets = np.sort(rng.choice(np.arange(1, 500), size=(20, ell), replace=False), axis=1) if ell else np.zeros((3, 0), dtype=int)
        got = nm.log_B(sets) + nm.log_C(ell)
        want = [weight_log(p, tuple(r)) for r in sets.tolist()]
        np.testing.assert_allclose(got, want, rtol=1e-12)
    with pytest.raises(ValueError):
        NormModel(1.5)  # zeta(1.5) > 2


def test_point_budget_formula():
    nm = NormModel(3.0)
    p = nm.pod_weights()
    a = build_active_set(p, 1e-3)
    eps = 1e-1
    h = budget_dict(a, point_budget(nm, a, eps))
    # [DERIVED] plain evaluation of the budget formula with q = 2, G = 1
    B = {u: math.exp(nm.log_B(np.array([u]).reshape(1, len(u)))[0]) for u in a}
    S = math.fsum(nm.cost(len(u)) ** (2 / 3) * B[u] ** (1 / 3) for u in a)
    for u in a:
        want = (2 / eps * S) ** 0.5 * (B[u] / nm.cost(len(u))) ** (1 / 3)
        assert h[u] == pytest.approx(want, rel=1e-12)
    with pytest.raises(ValueError):
        point_budget(nm, a, 0.0)


def test_qmc_level():
    assert [qmc_level(h) for h in (0.3, 1.0, 1.5, 2.0, 2.0001, 4.0, 1024.0, 1025.0)] == [0, 0, 1, 1, 2, 2, 10, 11]
    with pytest.raises(ValueError):
        qmc_level(float("inf"))


def test_smolyak_levels_are_minimal():
    nm = NormModel(3.0)
    fam = TrapezoidalFamily()
    a = build_active_set(nm.pod_weights(), 1e-4)
    budget = point_budget(nm, a, 1e-2)
    levels = smolyak_levels(a, budget, fam)
    for ell in range(1, a.d_sup + 1):
        for h, m in zip(budget[ell], levels.levels[ell]):
            assert count_evals(fam, ell, int(m)) >= h
            assert m == 1 or count_evals(fam, ell, int(m) - 1) < h


def test_qmc_capacity():
    nm = NormModel(3.0)
    a = build_active_set(nm.pod_weights(), 1e-3)
    budget = point_budget(nm, a, 1e-2)
    assert qmc_levels(a, budget).m_max <= 25
    with pytest.raises(CapacityError):
        qmc_levels(a, budget, m_cap=2)
