import math

import mpmath
import numpy as np
import pytest

from pinpat.catalog import CatalogSpec, build_catalog, catalog_pattern, select_prime, theorem_constants
from pinpat.errors import PinpatError
from pinpat.torus import is_prime


def test_catalog_example_k3():
    V = catalog_pattern(1, 3, 4)
    c, s = math.cos(math.radians(72)), math.sin(math.radians(72))
    assert np.allclose(V.points, [(0, 0), (1, 0), (c, s)], atol=1e-15)
    assert V.catalog == (1, 5)


def test_catalog_example_k4():
    q = 11
    V = catalog_pattern(1, 4, q - 1)
    for j, p in enumerate(V.points[2:], start=1):
        assert np.allclose(p, (math.cos(2 * math.pi * j / q), math.sin(2 * math.pi * j / q)))


@pytest.mark.parametrize("d", [2, 3, 4])
def test_catalog_unit_norms(d):
    spec = CatalogSpec(k=4, d=d, n=12, C_d=1.0, epsilon0=1.0)
    pats = build_catalog(spec)
    assert len(pats) == 12
    for V in pats:
        assert V.points.shape == (4, d)
        assert np.all(V.points[0] == 0)
        assert np.allclose(np.linalg.norm(V.points[1:], axis=1), 1.0, atol=1e-15)
        assert np.all(V.points[:, 2:] == 0)


def test_catalog_spec_checks():
    with pytest.raises(PinpatError):
        CatalogSpec(k=3, d=2, n=5, C_d=1.0, epsilon0=1.0)   # 6 not prime
    with pytest.raises(PinpatError):
        CatalogSpec(k=5, d=2, n=4, C_d=1.0, epsilon0=1.0)   # n < k


def _smallest_prime_above(x):
    p = math.floor(x) + 1
    while not all(p % f for f in range(2, math.isqrt(p) + 1)):
        p += 1
    return p


@pytest.mark.parametrize("eps0, want", [(1.0, 67), (0.5, 127), (0.2, 317), (0.1, 631), (0.05, 1259)])
def test_select_prime_k3(eps0, want):
    ch = select_prime(3, 2, eps0, 1.0)
    lo, hi = 20 * math.pi / eps0, 60 * math.pi / eps0
    assert ch.window == pytest.approx((lo, hi))
    assert ch.n_plus_1 == want == _smallest_prime_above(lo)
    assert ch.in_theory_window and not ch.demo_scale and lo < ch.n_plus_1 < hi


def test_select_prime_k4_demo_scale():
    ch = select_prime(4, 2, 0.5, 1.0, floor=11)
    assert ch.demo_scale and not ch.in_theory_window
    assert ch.n_plus_1 == 13 and is_prime(ch.n_plus_1)
    assert "exp(exp(exp(" in ch.window[1]


def test_constants_k3():
    tc = theorem_constants(3, 2, 0.1, 1.0)
    assert tc.epsilon == pytest.approx(0.01, rel=1e-14)
    assert tc.M_d == pytest.approx(1e10 * math.pi)
    assert tc.epsilon_tilde == pytest.approx(0.01 / (1e10 * math.pi), rel=1e-12)


def test_constants_k3_scaling_in_C():
    a = theorem_constants(3, 2, 0.3, 1.0)
    b = theorem_constants(3, 2, 0.3, 2.0)
    assert b.epsilon == a.epsilon
    assert b.M_d == pytest.approx(4 * a.M_d)
    assert b.epsilon_tilde == pytest.approx(a.epsilon_tilde / 4)


def test_constants_k4_symbolic():
    tc = theorem_constants(4, 2, 0.5, 1.0)
    assert tc.M_d == pytest.approx(10.0)
    with mpmath.workdps(50):
        want = mpmath.mpf(2) ** 4096 * mpmath.log(40 * mpmath.pi)
        assert abs(tc.lnln_neg_log_epsilon - want) / want < mpmath.mpf(10) ** -40
    d = tc.as_dict()
    assert d["epsilon_symbolic"]["sign"] == -1
    assert d["epsilon"] == 0.0


def test_constants_reject_bad_inputs():
    with pytest.raises(PinpatError):
        theorem_constants(3, 2, 0.0, 1.0)
    with pytest.raises(PinpatError):
        select_prime(3, 2, 1.0, -1.0)
