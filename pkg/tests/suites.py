"""Seeded property suites for the pinned detector.

Each suite returns a SuiteResult with the number of checked cases, the number
skipped as borderline, and a list of failures (instance seeds plus detail).
Borderline means the exhaustive oracle changes its answer when tol moves by
one part in a million, so rounding may legitimately decide the outcome.
"""

from dataclasses import dataclass, field

import numpy as np

import oracles
from pinpat.detector import occurs_at, pinned_scaling_set
from pinpat.geometry import random_isometry


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    skipped: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def line(self) -> str:
        return f"{self.name}: {self.cases} cases, {self.skipped} skipped, {len(self.failures)} failures"


def sound(points, x, P, r, O, tol) -> bool:
    """Every image point has a stored point within tol (plain distance loop)."""
    img = np.asarray(x) + r * (P @ O.matrix.T)
    return all(oracles.nearest_distance_brute(points, p) <= tol * (1 + 1e-12) for p in img)


def _borderline(E, x, P, r, tol) -> bool:
    lo = oracles.brute_occurs(E.points, x, P, r, tol * (1 - 1e-6))
    hi = oracles.brute_occurs(E.points, x, P, r, tol * (1 + 1e-6))
    return lo != hi


def isometry_equivariance(n=300, seed=101) -> SuiteResult:
    res = SuiteResult("isometry equivariance")
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        E, x, V, r, tol = oracles.random_instance(rng)
        if _borderline(E, x, V.points, r, tol):
            res.skipped += 1
            continue
        O = random_isometry(2, rng)
        a = occurs_at(E, x, V, r, tol)
        b = occurs_at(E.transformed(O), O(x), V, r, tol)
        res.cases += 1
        if (a is None) != (b is None):
            res.failures.append((i, f"original {a is not None}, rotated {b is not None}"))
        elif b is not None and not sound(O(E.points), O(x), V.points, r, b, tol):
            res.failures.append((i, "rotated witness unsound"))
    return res


def scale_equivariance(n=250, seed=202, lam=2.0, grid=6) -> SuiteResult:
    res = SuiteResult("scale equivariance")
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        E, x, V, r, tol = oracles.random_instance(rng)
        rg = r + tol * np.linspace(-2.0, 2.0, grid)
        S = pinned_scaling_set(E, x, V, rg, tol)
        T = pinned_scaling_set(E.transformed(scale=lam), lam * x, V, lam * rg, lam * tol)
        res.cases += 1
        if [lam * s for s in S.radii] != T.radii:
            res.failures.append((i, f"radii {S.radii} vs {T.radii}"))
            continue
        for (_, O1), (_, O2) in zip(S.scales, T.scales):
            if not np.allclose(O1.matrix, O2.matrix, atol=1e-12):
                res.failures.append((i, "witness differs"))
                break
    return res


def witness_soundness(n=300, seed=303) -> SuiteResult:
    res = SuiteResult("witness soundness")
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        E, x, V, r, tol = oracles.random_instance(rng, planted=bool(i % 4))
        for path in ("planar", "generic"):
            O = occurs_at(E, x, V, r, tol, path=path)
            if O is None:
                continue
            res.cases += 1
            if not sound(E.points, x, V.points, r, O, tol):
                res.failures.append((i, f"{path} witness unsound"))
    return res


def oracle_equivalence(n=300, seed=404) -> SuiteResult:
    """occurs_at (auto path) against exhaustive ordered-pair enumeration, |E| <= 30."""
    res = SuiteResult("brute-force oracle equivalence")
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        E, x, V, r, tol = oracles.random_instance(rng, extra=(5, 27))
        assert len(E) <= 30
        if _borderline(E, x, V.points, r, tol):
            res.skipped += 1
            continue
        res.cases += 1
        want = oracles.brute_occurs(E.points, x, V.points, r, tol)
        got = occurs_at(E, x, V, r, tol) is not None
        if want != got:
            res.failures.append((i, f"oracle {want}, detector {got}"))
    return res


def fast_generic_agreement(n=400, seed=505) -> SuiteResult:
    """Planar fast path and generic path agree away from the tol/4 .. tol gap."""
    res = SuiteResult("fast path = generic path")
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        E, x, V, r, tol = oracles.random_instance(rng, noise=0.2)
        full = oracles.brute_occurs(E.points, x, V.points, r, tol)
        quarter = oracles.brute_occurs(E.points, x, V.points, r, tol / 4)
        if full != quarter or _borderline(E, x, V.points, r, tol):
            res.skipped += 1
            continue
        res.cases += 1
        a = occurs_at(E, x, V, r, tol, path="planar") is not None
        b = occurs_at(E, x, V, r, tol, path="generic") is not None
        if a != b:
            res.failures.append((i, f"planar {a}, generic {b}"))
    return res


ALL = (isometry_equivariance, scale_equivariance, witness_soundness, oracle_equivalence, fast_generic_agreement)
