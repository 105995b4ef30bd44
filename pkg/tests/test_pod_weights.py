import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdm.integrands import NormModel, zeta
from mdm.pod_weights import PodWeights, weight, weight_log, weight_log_array


def test_weight_matches_direct_product(beta3_pod):
    p = beta3_pod
    u = (2, 5, 11)
    # [DERIVED] Omega_3 * prod omega_j = c1 * 3! * prod c2 / j^3
    direct = p.c1 * math.factorial(3) * math.prod(p.c2 / j**3 for j in u)
    assert weight(p, u) == pytest.approx(direct, rel=1e-13)
    assert weight(p, ()) == pytest.approx(p.c1, rel=1e-15)


def test_constants_of_the_test_model():
    p = NormModel(3.0).pod_weights()
    c1 = 1.0 / (1.0 - zeta(3.0) / 2.0)
    assert p.c1 == pytest.approx(c1, rel=1e-14)
    assert p.c2 == pytest.approx(c1 / math.sqrt(12.0), rel=1e-14)
    assert (p.b1, p.b2) == (1.0, 3.0)


@given(st.lists(st.integers(1, 500), min_size=1, max_size=6, unique=True), st.data())
def test_monotone_in_elements(u, data):
    p = NormModel(3.0).pod_weights()
    u = sorted(u)
    bumps = [data.draw(st.integers(0, 50)) for _ in u]
    v = []
    last = 0
    for a, b in zip(u, bumps):
        last = max(a + b, last + 1)
        v.append(last)
    # componentwise u_i <= v_i
    assert all(a <= b for a, b in zip(u, v))
    assert weight_log(p, u) >= weight_log(p, v)


def test_prefix_monotonicity(beta3_pod):
    p = beta3_pod
    for ell in range(1, 51):
        assert weight_log(p, range(1, ell + 1)) >= weight_log(p, range(1, ell + 2))


def test_omega_non_increasing(beta3_pod):
    vals = [beta3_pod.omega(j) for j in range(1, 300)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_order_condition_rejected():
    # ln c2 > (b2 - b1) ln 2 violates Omega_2 omega_2 <= Omega_1
    with pytest.raises(ValueError):
        PodWeights(c1=1.0, c2=10.0, b1=1.0, b2=2.0)
    with pytest.raises(ValueError):
        PodWeights(c1=1.0, c2=0.1, b1=1.0, b2=0.5)


def test_log_array_matches_scalar(beta3_pod):
    rng = np.random.default_rng(3)
    arr = np.sort(rng.choice(np.arange(1, 1000), size=(50, 4), replace=True), axis=1)
    arr = arr[(np.diff(arr, axis=1) > 0).all(axis=1)]
    got = weight_log_array(beta3_pod, arr)
    want = [weight_log(beta3_pod, tuple(r)) for r in arr.tolist()]
    np.testing.assert_allclose(got, want, rtol=1e-13)
    assert weight_log_array(beta3_pod, np.zeros((2, 0), dtype=int)).tolist() == [math.log(beta3_pod.c1)] * 2


def test_log_space_survives_underflow(beta3_pod):
    u = tuple(range(1000, 1200))
    assert weight(beta3_pod, u) == 0.0
    assert math.isfinite(weight_log(beta3_pod, u))
