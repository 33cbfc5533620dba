import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from pinpat.errors import BadLength, DomainError, NotPrime, OutOfWindow, PreconditionViolated, TooLarge
from pinpat.torus import (
    CyclicSet,
    TorusSet,
    avoids_rotated_aps,
    gowers_bound,
    gowers_bound_log,
    has_ap,
    is_prime,
    measure_bound_check,
    next_prime,
    perturb_with_witness,
    r_m_exact,
    random_arc_union,
    search_avoider,
    slice_at,
    slicing_identity_check,
    window_representatives,
)

TWO_PI = 2 * math.pi


# ------------------------------------------------------------------- primes


def test_primes():
    assert [p for p in range(30) if is_prime(p)] == oracles.primes_upto(29)
    assert [p for p in range(30) if is_prime(p)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert next_prime(62) == 67 and next_prime(67) == 71


# --------------------------------------------------------------------- APs


def test_has_ap_examples():
    w = has_ap(CyclicSet.from_members(7, [0, 2, 4]), 3)
    assert w is not None and (w.base, w.difference) == (0, 2)
    assert has_ap(CyclicSet.from_members(7, [0, 1, 3]), 3) is None
    assert has_ap(CyclicSet.full(5), 3) is not None


def test_has_ap_rejects_short_length():
    with pytest.raises(BadLength):
        has_ap(CyclicSet.full(5), 1)


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 14).flatmap(lambda N: st.tuples(st.just(N), st.sets(st.integers(0, N - 1)), st.integers(2, 4))))
def test_has_ap_matches_brute(args):
    N, members, m = args
    if m > N:
        return
    w = has_ap(CyclicSet.from_members(N, members), m)
    assert (w is not None) == oracles.brute_has_ap(members, N, m)
    if w is not None:
        el = w.elements()
        assert len(set(el)) == m and all(e in members for e in el)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_r_m_matches_enumeration(m):
    for N in range(m, 17):
        r, S = r_m_exact(N, m)
        assert r == oracles.brute_r_m(N, m), (N, m)
        assert len(S) == r and has_ap(S, m) is None


def test_r_m_examples():
    assert all(r_m_exact(N, 2)[0] == 1 for N in range(2, 41))
    assert r_m_exact(5, 3)[0] == 2
    r7 = r_m_exact(7, 3)[0]
    assert r7 >= 3 and r7 == oracles.brute_r_m(7, 3)


def test_r_m_monotone_in_m():
    for N in range(4, 25):
        r3, r4 = r_m_exact(N, 3)[0], r_m_exact(N, 4)[0]
        assert r_m_exact(N, 2)[0] <= r3 <= r4


def test_r_m_limits():
    with pytest.raises(TooLarge):
        r_m_exact(41, 3)
    with pytest.raises(BadLength):
        r_m_exact(3, 4)


def test_gowers_bound_examples():
    assert gowers_bound(100, 2) == 1
    assert gowers_bound(10**6, 3) == 1e6
    with mpmath.workdps(60):
        want = mpmath.log(10**6) - mpmath.mpf(2) ** -4096 * mpmath.log(mpmath.log(mpmath.log(10**6)))
        assert abs(gowers_bound_log(10**6, 3) - want) < mpmath.mpf(10) ** -50
    with pytest.raises(DomainError):
        gowers_bound(3, 3)


# ------------------------------------------------------------------- arcs


def test_torus_set_normalizes():
    E = TorusSet([(6.0, 7.0), (0.5, 0.9), (0.8, 1.2)])
    arcs = E.arcs
    # the wrapped piece (0, 7 - 2 pi) overlaps (0.5, 0.9) and merges
    assert arcs == [(0.0, 1.2), (6.0, TWO_PI)]
    assert E.measure() == pytest.approx(1.2 + TWO_PI - 6.0)
    assert E.contains(6.5) and E.contains(0.1) and not E.contains(2.0)


def test_torus_set_ops_match_sampling():
    rng = np.random.default_rng(0)
    t = np.linspace(0, TWO_PI, 20001)[:-1]
    for _ in range(50):
        A, B = random_arc_union(rng), random_arc_union(rng)
        s = float(rng.uniform(0, TWO_PI))
        assert np.array_equal(A.union(B).contains(t), A.contains(t) | B.contains(t))
        inter = A.intersection(B).contains(t)
        assert np.mean(inter != (A.contains(t) & B.contains(t))) < 1e-3
        shifted = A.shifted(s).contains(t)
        assert np.mean(shifted != A.contains(np.mod(t - s, TWO_PI))) < 1e-3


def test_avoids_examples():
    for q in (5, 11, 101):
        assert avoids_rotated_aps(TorusSet([(0.0, 0.9 * TWO_PI / q)]), q - 1, 3) is None
    w = avoids_rotated_aps(TorusSet([(0.0, math.pi)]), 4, 3)
    assert w is not None
    assert avoids_rotated_aps(TorusSet(), 4, 3) is None


def test_avoids_witness_sound():
    rng = np.random.default_rng(1)
    found = 0
    for _ in range(200):
        E = random_arc_union(rng, max_arcs=4, max_len=0.4)
        q = int(rng.choice([5, 7, 11, 13]))
        k = int(rng.integers(3, 5))
        w = avoids_rotated_aps(E, q - 1, k)
        if w is not None:
            found += 1
            assert all(E.contains(p) for p in w.elements())
            assert len(w.elements()) == k - 1
        else:
            # no orbit point set inside E, checked on a fine x grid
            xs = np.linspace(0, TWO_PI, 2001)
            for i in range(1, q):
                pts = xs[:, None] + TWO_PI * ((np.arange(k - 1) * i) % q) / q
                assert not np.any(np.all(E.contains(np.mod(pts, TWO_PI).ravel()).reshape(pts.shape), axis=1))
    assert found > 20


def test_avoids_errors():
    with pytest.raises(NotPrime):
        avoids_rotated_aps(TorusSet(), 5, 3)
    with pytest.raises(BadLength):
        avoids_rotated_aps(TorusSet(), 4, 2)
    with pytest.raises(PreconditionViolated):
        avoids_rotated_aps(TorusSet(), 2, 3)


# ----------------------------------------------------------------- slices


def test_slice_examples():
    assert slice_at(TorusSet([(0.0, math.pi)]), 0.0, 3).members() == [0, 1]
    assert len(slice_at(TorusSet.full(), 0.1, 10)) == 11
    with pytest.raises(OutOfWindow):
        slice_at(TorusSet.full(), 1.0, 10)


def test_slice_matches_membership():
    rng = np.random.default_rng(2)
    for _ in range(200):
        E = random_arc_union(rng)
        q = int(rng.choice([5, 11, 101]))
        x = float(rng.uniform(0, TWO_PI / q))
        assert slice_at(E, x, q - 1).members() == oracles.slice_by_membership(E.arcs, x, q)


def test_slicing_identity_examples():
    lhs, rhs = slicing_identity_check(TorusSet([(0.0, TWO_PI / 11)]), 10)
    assert lhs == pytest.approx(TWO_PI / 11) and rhs == pytest.approx(TWO_PI / 11)
    assert slicing_identity_check(TorusSet(), 10) == (0.0, 0.0)


def test_slicing_identity_random():
    rng = np.random.default_rng(3)
    for q in (5, 11, 101):
        for _ in range(100):
            lhs, rhs = slicing_identity_check(random_arc_union(rng), q - 1, quadrature_points=2)
            assert abs(lhs - rhs) <= 1e-9


# --------------------------------------------------------- measure bound


def test_measure_bound_examples():
    c = measure_bound_check(TorusSet([(0.0, 0.9 * TWO_PI / 101)]), 100, 3)
    assert c.ok and c.measure == pytest.approx(0.9 * TWO_PI / 101) and c.bound == pytest.approx(TWO_PI / 101)
    assert measure_bound_check(TorusSet(), 100, 3).ok
    with pytest.raises(PreconditionViolated):
        measure_bound_check(TorusSet([(0.0, 1.0)]), 10, 3)


def test_search_k4_large_prime():
    rng = np.random.default_rng(4)
    res = search_avoider(100, 4, rng, iterations=60)
    assert avoids_rotated_aps(res.best, 100, 4) is None
    assert measure_bound_check(res.best, 100, 4).ok


@pytest.mark.parametrize("q", [11, 101])
def test_search_and_bridge(q):
    n = q - 1
    res = search_avoider(n, 3, np.random.default_rng(q), iterations=100)
    E = res.best
    assert avoids_rotated_aps(E, n, 3) is None
    assert E.measure() <= TWO_PI / q + 1e-12
    for x in window_representatives(E, n):
        assert has_ap(slice_at(E, x, n), 2) is None
    F = perturb_with_witness(E, n, 3, np.random.default_rng(q + 1))
    w = avoids_rotated_aps(F, n, 3)
    assert w is not None
    width = TWO_PI / q
    assert has_ap(slice_at(F, w.base % width, n), 2) is not None
