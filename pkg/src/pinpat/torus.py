"""Arithmetic progressions in Z/NZ and on the circle R/2piZ.

Covers exact maximal AP-free sets, the quantitative Szemeredi bound, and the
avoidance lemma for arc unions on the circle together with its slicing
reduction to cyclic groups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import mpmath
import numpy as np

from pinpat._backend import kernels
from pinpat.errors import (
    BadLength,
    DomainError,
    NotPrime,
    OutOfWindow,
    PinpatError,
    PreconditionViolated,
    TooLarge,
)

TWO_PI = 2.0 * math.pi
EXACT_LIMIT = 40
MEASURE_SLACK = 1e-12


def is_prime(n: int) -> bool:
    """Deterministic trial division."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def next_prime(n: int) -> int:
    """Smallest prime strictly greater than ``n``."""
    p = max(n + 1, 2)
    while not is_prime(p):
        p += 1
    return p


# ----------------------------------------------------------------- cyclic


@dataclass(frozen=True)
class CyclicSet:
    """A subset of Z/NZ stored as a bit mask."""

    modulus: int
    mask: int = 0

    def __post_init__(self):
        if self.modulus < 2:
            raise PinpatError("modulus must be at least 2")
        if self.mask < 0 or self.mask >> self.modulus:
            raise PinpatError("members must lie in {0, ..., N-1}")

    @classmethod
    def from_members(cls, N: int, members: Iterable[int]) -> "CyclicSet":
        mask = 0
        for x in members:
            mask |= 1 << (int(x) % N)
        return cls(N, mask)

    @classmethod
    def full(cls, N: int) -> "CyclicSet":
        return cls(N, (1 << N) - 1)

    def __contains__(self, x: int) -> bool:
        return bool((self.mask >> (x % self.modulus)) & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def members(self) -> list[int]:
        return [i for i in range(self.modulus) if (self.mask >> i) & 1]

    def shift(self, t: int) -> "CyclicSet":
        return CyclicSet.from_members(self.modulus, (x + t for x in self.members()))


@dataclass(frozen=True)
class APWitness:
    """An m-term progression ``base + j * difference``; on the circle the step
    is ``2 pi difference / modulus`` and ``base`` is an angle."""

    base: float
    difference: int
    length: int
    modulus: int
    on_circle: bool = False

    def elements(self) -> list:
        if self.on_circle:
            q = self.modulus
            return [
                math.fmod(self.base + TWO_PI * ((j * self.difference) % q) / q, TWO_PI)
                for j in range(self.length)
            ]
        return [(int(self.base) + j * self.difference) % self.modulus for j in range(self.length)]


def _ap_elements_distinct(a: int, d: int, m: int, N: int) -> bool:
    return N // math.gcd(d, N) >= m


def has_ap(S: CyclicSet, m: int) -> APWitness | None:
    """First m-AP ``(a, d)`` inside S in lexicographic order, or ``None``."""
    if m < 2:
        raise BadLength("progression length must be at least 2")
    N = S.modulus
    if N < m:
        raise BadLength(f"Z/{N}Z has no {m} distinct elements")
    members = S.members()
    for a in members:
        for d in range(1, N):
            if not _ap_elements_distinct(a, d, m, N):
                continue
            if all(((a + j * d) % N) in S for j in range(1, m)):
                return APWitness(a, d, m, N)
    return None


@lru_cache(maxsize=None)
def interval_ap_free_bounds(L: int, m: int) -> tuple[int, ...]:
    """Exact maximal m-AP-free sizes in the integer intervals [0, l), l <= L."""
    if L < 1:
        return (0,)
    prev = interval_ap_free_bounds(L - 1, m)
    if L < m:
        return prev + (L,)
    size, _ = kernels.max_ap_free(L, m, False, list(prev) + [L])
    return prev + (int(size),)


def r_m_exact(N: int, m: int, limit: int = EXACT_LIMIT) -> tuple[int, CyclicSet]:
    """Maximum size of an m-AP-free subset of Z/NZ and a set attaining it.

    Branch and bound over residues in increasing order; translation symmetry
    is removed by forcing 0 into the set, and the tail bound uses exact
    maxima for integer intervals.
    """
    if m < 2:
        raise BadLength("progression length must be at least 2")
    if N < m:
        raise BadLength(f"need N >= m, got N={N}, m={m}")
    if N > limit or N > 63:
        raise TooLarge(f"N={N} exceeds the exact limit {min(limit, 63)}")
    bounds = interval_ap_free_bounds(N, m)
    size, mask = kernels.max_ap_free(N, m, True, list(bounds))
    return int(size), CyclicSet(N, int(mask))


def gowers_bound_log(N: int, m: int) -> mpmath.mpf:
    """``ln`` of the Gowers bound ``N / (ln ln N)^{c_m}`` with ``c_m = 2^(-2^(m+9))``.

    Evaluated at extended precision: ``c_m * ln ln ln N`` is formed as
    ``exp(-2^(m+9) ln 2 + ln ln ln ln N)`` so nothing underflows.
    """
    if m < 3:
        raise DomainError("the Gowers bound is stated for m >= 3")
    with mpmath.workdps(60):
        lnln = mpmath.log(mpmath.log(N))
        if N < 3 or lnln < 1:
            raise DomainError(f"ln ln N = {mpmath.nstr(lnln, 5)} < 1; the bound needs N >= 16")
        lnlnln = mpmath.log(lnln)
        if lnlnln == 0:
            return mpmath.log(N)
        log_c = -(mpmath.mpf(2) ** (m + 9)) * mpmath.log(2)
        correction = mpmath.exp(log_c + mpmath.log(lnlnln))
        return mpmath.log(N) - correction


def gowers_bound(N: int, m: int) -> float:
    """``1`` for m = 2, else ``N / (ln ln N)^{c_m}`` rounded from the log-space value."""
    if m < 2:
        raise BadLength("progression length must be at least 2")
    if m == 2:
        return 1.0
    with mpmath.workdps(60):
        return float(mpmath.exp(gowers_bound_log(N, m)))


# ------------------------------------------------------------------ torus


class TorusSet:
    """A finite union of half-open arcs ``[a, b)`` of R/2piZ.

    Arcs are stored normalized: sorted, disjoint, non-touching and inside
    ``[0, 2pi)``; an arc through the origin is split in two.
    """

    __slots__ = ("starts", "ends")

    def __init__(self, arcs: Iterable[Sequence[float]] = ()):
        arr = np.asarray(list(arcs) if not isinstance(arcs, np.ndarray) else arcs, dtype=float)
        arr = arr.reshape(-1, 2)
        a, length = arr[:, 0], arr[:, 1] - arr[:, 0]
        pos = length > 0
        a, length = a[pos], length[pos]
        if np.any(length >= TWO_PI):
            self.starts = np.array([0.0])
            self.ends = np.array([TWO_PI])
            return
        a0 = np.mod(a, TWO_PI)
        a0[a0 >= TWO_PI] = 0.0
        b0 = a0 + length
        wrap = b0 > TWO_PI
        s = np.concatenate([a0, np.zeros(np.count_nonzero(wrap))])
        e = np.concatenate([np.where(wrap, TWO_PI, b0), b0[wrap] - TWO_PI])
        order = np.lexsort((e, s))
        s, e = s[order], e[order]
        if s.size:
            # a new run starts where the arc begins after every earlier end
            run_end = np.maximum.accumulate(e)
            new_run = np.ones(s.size, dtype=bool)
            new_run[1:] = s[1:] > run_end[:-1]
            heads = np.nonzero(new_run)[0]
            tails = np.append(heads[1:], s.size) - 1
            s, e = s[heads], run_end[tails]
        self.starts = s
        self.ends = e

    @classmethod
    def _raw(cls, starts, ends) -> "TorusSet":
        out = cls.__new__(cls)
        out.starts = np.asarray(starts, dtype=float)
        out.ends = np.asarray(ends, dtype=float)
        return out

    @classmethod
    def full(cls) -> "TorusSet":
        return cls([(0.0, TWO_PI)])

    @property
    def arcs(self) -> list[tuple[float, float]]:
        return list(zip(self.starts.tolist(), self.ends.tolist()))

    def __len__(self) -> int:
        return self.starts.shape[0]

    def __repr__(self) -> str:
        return f"TorusSet({self.arcs!r})"

    def measure(self) -> float:
        return float(np.sum(self.ends - self.starts))

    def is_empty(self) -> bool:
        return self.starts.shape[0] == 0

    def contains(self, theta) -> np.ndarray | bool:
        t = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        idx = np.searchsorted(self.starts, t, side="right") - 1
        ok = idx >= 0
        inside = np.zeros(t.shape, dtype=bool)
        inside[ok] = t[ok] < self.ends[idx[ok]]
        return bool(inside) if inside.ndim == 0 else inside

    def shifted(self, s: float) -> "TorusSet":
        return TorusSet((a + s, b + s) for a, b in self.arcs)

    def union(self, other: "TorusSet") -> "TorusSet":
        return TorusSet(self.arcs + other.arcs)

    def intersection(self, other: "TorusSet") -> "TorusSet":
        out = []
        i = j = 0
        while i < len(self) and j < len(other):
            lo = max(self.starts[i], other.starts[j])
            hi = min(self.ends[i], other.ends[j])
            if lo < hi:
                out.append((lo, hi))
            if self.ends[i] < other.ends[j]:
                i += 1
            else:
                j += 1
        return TorusSet._raw([a for a, _ in out], [b for _, b in out])

    def orbit_core(self, shifts: Sequence[float]) -> "TorusSet":
        """``{t : t + s in E for every s in shifts}`` as an arc union."""
        if self.is_empty():
            return TorusSet()
        s, e = kernels.shifted_intersection(self.starts, self.ends, list(shifts))
        return TorusSet._raw(s, e)


def _check_prime(n: int) -> None:
    if not is_prime(n + 1):
        raise NotPrime(f"n + 1 = {n + 1} is not prime")


def rotation_shifts(i: int, n: int, count: int) -> list[float]:
    """Exact residues ``2 pi ((j i) mod (n+1)) / (n+1)`` for ``j < count``."""
    q = n + 1
    return [TWO_PI * ((j * i) % q) / q for j in range(count)]


def avoids_rotated_aps(E: TorusSet, n: int, k: int) -> APWitness | None:
    """Decide whether E contains ``{x + j 2 pi i/(n+1) : j < k-1}`` for some x, i.

    Containment is decided exactly by intersecting the k-1 rotated copies of
    E for each i. Returns the first witness (smallest i, x the midpoint of the
    longest arc of admissible x), or ``None`` when E avoids every such orbit.
    """
    _check_prime(n)
    if k < 3:
        raise BadLength("k must be at least 3")
    if n < k:
        raise PreconditionViolated(f"need n >= k, got n={n}, k={k}")
    if E.is_empty():
        return None
    hit = kernels.first_rotated_ap(E.starts, E.ends, n, k)
    if hit is None:
        return None
    i, a, b = hit
    w = APWitness(float(0.5 * (a + b)), int(i), k - 1, n + 1, on_circle=True)
    pts = w.elements()
    # n + 1 prime makes the orbit points distinct
    assert len({round(p, 12) for p in pts}) == len(pts)
    return w


def slice_at(E: TorusSet, x: float, n: int, check_window: bool = True) -> CyclicSet:
    """``{tau : x + 2 pi tau/(n+1) in E}`` as a subset of Z/(n+1)Z."""
    q = n + 1
    width = TWO_PI / q
    if check_window and not (0.0 <= x < width):
        raise OutOfWindow(f"x={x} outside [0, 2pi/(n+1))")
    taus = np.arange(q)
    inside = E.contains(x + TWO_PI * taus / q)
    return CyclicSet.from_members(q, taus[inside].tolist())


def _window_pieces(E: TorusSet, n: int) -> np.ndarray:
    """Breakpoints in [0, 2pi/(n+1)] where the slice can change."""
    width = TWO_PI / (n + 1)
    ends = np.concatenate([E.starts, E.ends])
    red = np.mod(ends, width)
    pts = np.unique(np.concatenate([[0.0, width], red[(red > 0) & (red < width)]]))
    return pts


def window_representatives(E: TorusSet, n: int) -> list[float]:
    """One x per constant piece of the slice map (piece midpoints)."""
    pts = _window_pieces(E, n)
    return [0.5 * (a + b) for a, b in zip(pts[:-1], pts[1:]) if b > a]


def slicing_identity_check(E: TorusSet, n: int, quadrature_points: int = 1) -> tuple[float, float]:
    """``(L1(E), integral over the window of #slice(E, x))``.

    The integrand is piecewise constant between arc endpoints reduced modulo
    the window width, so the integral is a finite sum. ``quadrature_points``
    evaluation points are placed inside every piece; all must agree.
    """
    if quadrature_points < 1:
        raise PinpatError("quadrature_points must be >= 1")
    lhs = E.measure()
    pts = _window_pieces(E, n)
    rhs = 0.0
    q = n + 1
    taus = np.arange(q)
    for a, b in zip(pts[:-1], pts[1:]):
        if b <= a:
            continue
        xs = a + (b - a) * (np.arange(quadrature_points) + 0.5) / quadrature_points
        counts = {int(np.count_nonzero(E.contains(x + TWO_PI * taus / q))) for x in xs}
        if len(counts) != 1:
            raise PinpatError("slice count not constant on a piece")
        rhs += (b - a) * counts.pop()
    return lhs, rhs


def measure_bound(n: int, k: int) -> float:
    """Upper bound on the measure of a (k-1)-AP avoiding set of the circle."""
    if k == 3:
        return TWO_PI / (n + 1)
    with mpmath.workdps(60):
        c_log = -(mpmath.mpf(2) ** (k - 1 + 9)) * mpmath.log(2)
        lnln = mpmath.log(mpmath.log(n + 1))
        if lnln <= 0:
            raise DomainError("ln ln(n+1) must be positive")
        log_bound = mpmath.log(TWO_PI) - mpmath.exp(c_log) * mpmath.log(lnln)
        return float(mpmath.exp(log_bound))


@dataclass(frozen=True)
class MeasureCheck:
    measure: float
    bound: float
    ok: bool


def measure_bound_check(E: TorusSet, n: int, k: int) -> MeasureCheck:
    """Compare L1(E) with the avoidance-lemma bound; E must avoid rotated APs."""
    w = avoids_rotated_aps(E, n, k)
    if w is not None:
        raise PreconditionViolated(f"E contains a rotated {k - 1}-AP: {w}")
    mu = E.measure()
    bound = measure_bound(n, k)
    return MeasureCheck(mu, bound, mu <= bound + MEASURE_SLACK)


def random_arc_union(rng: np.random.Generator, max_arcs: int = 8, max_len: float = 1.0) -> TorusSet:
    """A seeded random arc union (used by property tests and the CLI)."""
    count = int(rng.integers(1, max_arcs + 1))
    starts = rng.uniform(0.0, TWO_PI, size=count)
    lengths = rng.uniform(0.0, max_len, size=count)
    return TorusSet(zip(starts, starts + lengths))


@dataclass
class AvoiderSearch:
    """Outcome of :func:`search_avoider`: the best set found and its bookkeeping."""

    best: TorusSet
    iterations: int
    accepted: int
    history: list = None


def search_avoider(
    n: int,
    k: int,
    rng: np.random.Generator,
    iterations: int = 200,
    seeds: int = 4,
    repair_steps: int = 12,
) -> AvoiderSearch:
    """Randomized greedy growth of an arc union avoiding rotated (k-1)-APs.

    Starts from ``seeds`` tiny arcs at random positions (those that already
    clash are dropped). Each iteration picks an arc and a side and proposes a
    random extension; when the extension creates a rotated progression it is
    repaired by bisecting the extension length. The loop is bounded by the
    iteration count only, so a fixed generator state gives a fixed result.
    """
    _check_prime(n)
    width = TWO_PI / (n + 1)
    arcs: list[list[float]] = []
    for _ in range(seeds):
        a = float(rng.uniform(0.0, TWO_PI))
        trial = arcs + [[a, a + 1e-6 * width]]
        if avoids_rotated_aps(TorusSet(trial), n, k) is None:
            arcs = trial
    if not arcs:
        arcs = [[0.0, 1e-6 * width]]
    accepted = 0
    history = []
    for _ in range(iterations):
        j = int(rng.integers(len(arcs)))
        left = bool(rng.integers(2))
        grow = float(rng.uniform(0.0, width))

        def candidate(g):
            trial = [list(a) for a in arcs]
            if left:
                trial[j][0] -= g
            else:
                trial[j][1] += g
            return trial

        ok = None
        if avoids_rotated_aps(TorusSet(candidate(grow)), n, k) is None:
            ok = grow
        else:
            lo, hi = 0.0, grow
            for _ in range(repair_steps):
                mid = 0.5 * (lo + hi)
                if avoids_rotated_aps(TorusSet(candidate(mid)), n, k) is None:
                    lo = mid
                else:
                    hi = mid
            if lo > 0.0:
                ok = lo
        if ok is not None:
            arcs = candidate(ok)
            accepted += 1
        history.append(TorusSet(arcs).measure())
    return AvoiderSearch(TorusSet(arcs), iterations, accepted, history)


def perturb_with_witness(E: TorusSet, n: int, k: int, rng: np.random.Generator) -> TorusSet:
    """Add short arcs so that a full rotated (k-1)-orbit lands inside E.

    Picks a point of E and a step ``i`` at random and covers the remaining
    orbit points ``x + j 2 pi i/(n+1)`` with arcs of width a tenth of the window.
    """
    if E.is_empty():
        raise PreconditionViolated("cannot perturb an empty set")
    width = TWO_PI / (n + 1)
    t = int(rng.integers(len(E)))
    x = float(0.5 * (E.starts[t] + E.ends[t]))
    i = int(rng.integers(1, n + 1))
    eps = 0.05 * width
    extra = [(x + s - eps, x + s + eps) for s in rotation_shifts(i, n, k - 1)[1:]]
    return TorusSet(E.arcs + extra)
