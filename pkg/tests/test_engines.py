import itertools
import json
import math

import numpy as np
import pytest

from mdm.active_set import build_active_set
from mdm.coeff_tables import (
    LevelAssignment,
    build_combination_tables,
    build_qmc_tables,
    build_smolyak_tables,
)
from mdm.decomposition import CallableIntegrand
from mdm.engines import (
    MdmReport,
    prepare_qmc,
    prepare_smolyak,
    rqmc_std_error,
    run_naive,
    run_qmc,
    run_rqmc,
    run_smolyak_combination,
    run_smolyak_direct,
)
from mdm.integrands import NormModel, TestIntegrand, point_budget, qmc_levels, smolyak_levels
from mdm.lattice import LatticeSequence, random_shifts
from mdm.quad1d import TrapezoidalFamily
from mdm.setkit import subsets_of
from mdm.tolerance import ToleranceParams, compute_tolerance

seq = LatticeSequence()


class Small:
    """Active set, levels and tables of the beta-model at a given eps."""

    def __init__(self, beta, eps):
        nm = NormModel(beta)
        p = nm.pod_weights()
        self.beta = beta
        self.active = build_active_set(p, compute_tolerance(p, ToleranceParams(eps)).T)
        budget = point_budget(nm, self.active, eps)
        self.fam = TrapezoidalFamily()
        self.s_levels = smolyak_levels(self.active, budget, self.fam)
        self.q_levels = qmc_levels(self.active, budget)
        self.direct = build_smolyak_tables(self.s_levels)
        self.ct = build_combination_tables(self.s_levels)
        self.qmc = build_qmc_tables(self.q_levels)
        self.shift = random_shifts(1, self.active.tau_star, 0)[0]


@pytest.fixture(scope="module", params=[(4.0, 1e-1), (4.0, 1e-2), (3.0, 1e-1)], ids=str)
def case(request):
    return Small(*request.param)


def rel(a, b):
    return abs(a - b) / abs(b)


def test_efficient_equals_naive(case):
    f = TestIntegrand(case.beta)
    d = run_smolyak_direct(case.direct, case.fam, f).estimate
    c = run_smolyak_combination(case.ct, case.fam, f).estimate
    assert rel(c, d) <= 1e-10
    assert rel(d, run_naive("smolyak-direct", case.s_levels, f, fam=case.fam).estimate) <= 1e-10
    assert rel(c, run_naive("smolyak-ct", case.s_levels, f, fam=case.fam).estimate) <= 1e-10
    for shift in (None, case.shift):
        q = run_qmc(case.qmc, seq, f, shift=shift).estimate
        assert rel(q, run_naive("qmc", case.q_levels, f, seq=seq, shift=shift).estimate) <= 1e-10


@pytest.mark.parametrize("kappa", [1.0, 2.75, -0.3])
def test_constant_integrand_exact(case, kappa):
    f = CallableIntegrand(lambda v, x: np.full(x.shape[0], kappa))
    ests = [
        run_smolyak_direct(case.direct, case.fam, f).estimate,
        run_smolyak_combination(case.ct, case.fam, f).estimate,
        run_qmc(case.qmc, seq, f).estimate,
        run_qmc(case.qmc, seq, f, shift=case.shift).estimate,
        run_rqmc(case.qmc, seq, f, 3, seed=1).estimate,
        run_naive("smolyak-direct", case.s_levels, f, fam=case.fam).estimate,
        run_naive("smolyak-ct", case.s_levels, f, fam=case.fam).estimate,
        run_naive("qmc", case.q_levels, f, seq=seq, shift=case.shift).estimate,
    ]
    for e in ests:
        assert abs(e - kappa) <= 1e-13


def test_threads_do_not_change_results(case):
    f = TestIntegrand(case.beta)
    for run, tables in ((run_smolyak_direct, case.direct), (run_smolyak_combination, case.ct)):
        assert run(tables, case.fam, f, threads=1).estimate == run(tables, case.fam, f, threads=4).estimate
    a = run_qmc(case.qmc, seq, f, shift=case.shift, threads=1).estimate
    assert a == run_qmc(case.qmc, seq, f, shift=case.shift, threads=3).estimate
    a = run_naive("qmc", case.q_levels, f, seq=seq, shift=case.shift).estimate
    assert a == run_naive("qmc", case.q_levels, f, seq=seq, shift=case.shift, threads=3).estimate


class Recorder(TestIntegrand):
    """Counts how often each (v, x) argument reaches the integrand."""

    def __init__(self, beta):
        super().__init__(beta)
        self.seen = {}

    def _eval_many(self, vs, x):
        xs = np.broadcast_to(x, (len(vs),) + x.shape) if x.ndim == 2 else x
        for v, rows in zip(vs.tolist(), xs):
            for r in rows.tolist():
                key = (tuple(v), tuple(r))
                self.seen[key] = self.seen.get(key, 0) + 1
        return super()._eval_many(vs, x)


def test_smolyak_engines_evaluate_each_argument_once(case):
    for run, tables in ((run_smolyak_direct, case.direct), (run_smolyak_combination, case.ct)):
        f = Recorder(case.beta)
        rep = run(tables, case.fam, f)
        assert max(f.seen.values()) == 1
        assert rep.eval_count == len(f.seen) + 1  # plus f(0)


def test_qmc_engine_evaluates_each_point_once(case):
    # one evaluation per (v, w, i) with i < 2^top(v, w), top the highest level with c != 0
    expected = 1
    for v, per_w in case.qmc.ext.items():
        for w, cm in per_w.items():
            expected += 1 << max(m for m, c in cm.items() if c)
    f = TestIntegrand(case.beta)
    assert run_qmc(case.qmc, seq, f, shift=case.shift).eval_count == expected


def test_eval_counts_below_naive(case):
    f = TestIntegrand(case.beta)
    pairs = [
        (run_smolyak_direct(case.direct, case.fam, f), run_naive("smolyak-direct", case.s_levels, f, fam=case.fam)),
        (run_smolyak_combination(case.ct, case.fam, f), run_naive("smolyak-ct", case.s_levels, f, fam=case.fam)),
        (run_qmc(case.qmc, seq, f), run_naive("qmc", case.q_levels, f, seq=seq)),
    ]
    for eff, naive in pairs:
        assert eff.eval_count < naive.eval_count


def gauss_legendre_integral(f, v, n=12):
    x, w = np.polynomial.legendre.leggauss(n)
    x, w = x / 2, w / 2
    if not v:
        return 1.0
    grid = np.array(list(itertools.product(x, repeat=len(v))))
    wts = np.prod(np.array(list(itertools.product(w, repeat=len(v)))), axis=1)
    return float(np.dot(f._eval(np.array(v), grid), wts))


def test_rqmc_unbiased_for_truncated_integral():
    small = Small(4.0, 1e-1)
    f = TestIntegrand(4.0)
    # [DERIVED] sum over u in U of the exact integral of f_u, via tensor Gauss-Legendre
    cache = {}
    truth = 0.0
    for u in small.active:
        for v in subsets_of(u):
            if v not in cache:
                cache[v] = gauss_legendre_integral(f, v)
            truth += (-1) ** (len(u) - len(v)) * cache[v]
    runs = np.array([run_rqmc(small.qmc, seq, f, 2, seed=s).estimate for s in range(200)])
    sem = runs.std(ddof=1) / math.sqrt(len(runs))
    assert abs(runs.mean() - truth) <= 3 * sem
    assert sem > 0


def test_rqmc_error_estimate():
    small = Small(3.0, 1e-1)
    f = TestIntegrand(3.0)
    rep = run_rqmc(small.qmc, seq, f, 5, seed=2)
    per = np.array(rep.per_shift)
    assert rep.std_error == pytest.approx(per.std(ddof=1) / math.sqrt(5), rel=1e-12)
    assert rep.estimate == pytest.approx(per.mean(), rel=1e-15)
    # identical shifts give identical estimates and a zero error estimate
    same = [run_qmc(small.qmc, seq, f, shift=small.shift).estimate for _ in range(3)]
    assert rqmc_std_error(same) == 0.0
    assert rqmc_std_error([1.0]) is None


def test_prepare_and_report_json():
    small = Small(3.0, 1e-1)
    prepare_smolyak(small.direct, small.fam)
    prepare_smolyak(small.ct, small.fam, combination=True)
    prepare_qmc(small.qmc)
    rep = run_smolyak_direct(small.direct, small.fam, TestIntegrand(3.0))
    back = json.loads(rep.to_json())
    assert MdmReport(**back) == rep


def test_input_errors():
    small = Small(3.0, 1e-1)
    f = TestIntegrand(3.0)
    with pytest.raises(ValueError):
        run_qmc(small.qmc, seq, f, shift=np.zeros(3))
    with pytest.raises(ValueError):
        run_qmc(small.qmc, LatticeSequence(m_cap=2), f)
    with pytest.raises(ValueError):
        run_naive("other", small.s_levels, f)
    with pytest.raises(ValueError):
        run_naive("qmc", small.q_levels, f)
    with pytest.raises(ValueError):
        run_rqmc(small.qmc, seq, f, 0, seed=0)


def test_hand_sized_model():
    # U = {{}, {1}, {2}, {1,2}}, f = 1 + x1 x2 (only the {1,2} term is nonzero)
    f = CallableIntegrand(lambda v, x: 1.0 + (np.prod(x, axis=1) if len(v) == 2 else np.zeros(len(x))))
    fam = TrapezoidalFamily()
    levels = LevelAssignment.from_dict({(1,): 1, (2,): 1, (1, 2): 3})
    est = run_smolyak_direct(build_smolyak_tables(levels), fam, f).estimate
    # the trapezoid-based Smolyak rule integrates x1 x2 exactly (odd in each variable)
    assert est == pytest.approx(1.0, abs=1e-15)
