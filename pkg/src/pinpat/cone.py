"""The thin solid cone and the angle bound for distant points inside it.

Threshold derivation (the constant K). For x in the cone and y with
``|y - x| >= M >= |x|``, the angle between ``y - x`` and ``y`` is at most
``asin(|x| / M)``; the angle between ``y`` and ``y'`` is at most ``a'``
because both lie in the cone. Hence

    angle(y - x, y' - x) <= a' + 2 asin(|x| / M),

which is at most ``2^t a'`` as soon as ``M >= M* = |x| / sin((2^t - 1) a' / 2)``.
Writing ``cos a' - cos 2^t a' = 2 sin((2^t + 1) a'/2) sin((2^t - 1) a'/2)``
shows that ``M0 = 2 |x| / (cos a' - cos 2^t a')`` satisfies ``M0 >= M*``, so
K = 2 certifies the closed form. The returned threshold is
``max(M0, M* + |x|)``, which also covers the variant that bounds ``|y|``
instead of ``|y - x|``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import mpmath
import numpy as np

from pinpat.errors import ApexCase, InvalidConeParameters, PinpatError
from pinpat.geometry import (
    DensityND,
    DiscretizedSet,
    _check_radii,
    angle_between,
    angles_between,
    as_point,
    unit_ball_volume,
    upper_density_nd,
)


@dataclass(frozen=True)
class ConeParameters:
    """``alpha_prime = alpha / (2^s d)``; the angle lemma is used with slack ``2^t``."""

    alpha: float
    d: int = 2
    shrink_exponent: int = 11
    slack_exponent: int = 10

    def __post_init__(self):
        if self.d < 2:
            raise InvalidConeParameters("dimension must be at least 2")
        if not 0 < self.alpha <= math.pi:
            raise InvalidConeParameters("alpha must lie in (0, pi]")
        if self.shrink_exponent < 0 or self.slack_exponent < 0:
            raise InvalidConeParameters("exponents must be non-negative")
        bound = self.slack_bound
        if not bound < self.alpha:
            raise InvalidConeParameters(f"2^t alpha' = {bound!r} must be below alpha = {self.alpha!r}")
        if not bound < math.pi:
            raise InvalidConeParameters("2^t alpha' must be below pi")

    @property
    def alpha_prime(self) -> float:
        return self.alpha / (2.0**self.shrink_exponent * self.d)

    @property
    def slack_bound(self) -> float:
        return 2.0**self.slack_exponent * self.alpha_prime

    def cone(self) -> "SolidCone":
        return SolidCone(self.d, self.alpha_prime / 2)


@dataclass(frozen=True)
class SolidCone:
    dim: int
    half_angle: float
    axis: tuple | None = None

    def __post_init__(self):
        if not 0 < self.half_angle <= math.pi:
            raise InvalidConeParameters("half angle must lie in (0, pi]")
        ax = np.zeros(self.dim)
        ax[0] = 1.0
        if self.axis is not None:
            ax = np.asarray(self.axis, dtype=float)
            ax = ax / np.linalg.norm(ax)
        object.__setattr__(self, "axis", tuple(float(a) for a in ax))

    @property
    def aperture(self) -> float:
        """Full opening angle alpha'."""
        return 2.0 * self.half_angle

    @property
    def axis_vector(self) -> np.ndarray:
        return np.array(self.axis)


def cone_contains(C: SolidCone, p) -> bool:
    p = as_point(p, C.dim)
    if not np.any(p):
        return True
    return angle_between(p, C.axis_vector) <= C.half_angle


def cone_contains_many(C: SolidCone, pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    out = np.ones(pts.shape[0], dtype=bool)
    nz = np.any(pts != 0, axis=1)
    if np.any(nz):
        ax = np.broadcast_to(C.axis_vector, pts[nz].shape)
        out[nz] = angles_between(pts[nz], ax) <= C.half_angle
    return out


def cone_volume_fraction(C: SolidCone) -> float:
    """Exact ``L^d(C & B(0, R)) / R^d``."""
    d, b = C.dim, C.half_angle
    if d == 2:
        return b  # sector of angle 2b has area b R^2
    # solid angle fraction of a cap with half angle b via the incomplete beta function
    with mpmath.workdps(30):
        if b <= math.pi / 2:
            frac = mpmath.betainc((d - 1) / 2, 0.5, 0, math.sin(b) ** 2, regularized=True) / 2
        else:
            frac = 1 - mpmath.betainc((d - 1) / 2, 0.5, 0, math.sin(b) ** 2, regularized=True) / 2
        return float(frac) * unit_ball_volume(d)


def cone_grid(C: SolidCone, pitch: float, R_max: float, thickness: float | None = None) -> DiscretizedSet:
    """Points of the lattice ``pitch * Z^d`` inside ``C & B(0, R_max)`` (axis e1)."""
    if C.axis_vector[0] != 1.0:
        raise PinpatError("cone_grid supports the e1 axis only")
    d = C.dim
    h = float(pitch)
    tan_b = math.tan(min(C.half_angle, math.pi / 2 - 1e-12))
    n_max = int(math.floor(R_max / h))
    xs = np.arange(0, n_max + 1) * h
    if d == 2:
        half = np.floor(xs * tan_b / h * (1 + 1e-12)).astype(np.int64)
        counts = 2 * half + 1
        col = np.repeat(np.arange(xs.size), counts)
        start = np.repeat(-half - np.cumsum(counts) + counts, counts)
        j = np.arange(col.size) + start
        pts = np.column_stack([xs[col], j * h])
    else:
        parts = []
        for x in xs:
            m = int(math.floor(x * tan_b / h * (1 + 1e-12)))
            rng = np.arange(-m, m + 1) * h
            mesh = np.stack(np.meshgrid(*([rng] * (d - 1)), indexing="ij"), axis=-1).reshape(-1, d - 1)
            parts.append(np.column_stack([np.full(mesh.shape[0], x), mesh]))
        pts = np.vstack(parts)
    pts = pts[np.linalg.norm(pts, axis=1) <= R_max]
    pts = pts[cone_contains_many(C, pts)]
    return DiscretizedSet(pts, h, thickness)


def cone_density(C: SolidCone, R_list, pitch: float | None = None, c: float | None = None) -> DensityND:
    """Density ratios of the cone: exact in d = 2, grid counted for d >= 3.

    With ``c`` given in d >= 3 every counted ratio must exceed
    ``c * alpha'^{d-1}``.
    """
    R = _check_radii(R_list)
    if C.dim == 2:
        ratio = cone_volume_fraction(C)
        return DensityND(tuple(float(r) for r in R), tuple(ratio for _ in R), ratio, 2)
    if pitch is None:
        pitch = float(R[-1]) / 150
    grid = cone_grid(C, pitch, float(R[-1]))
    dens = upper_density_nd(grid, R)
    if c is not None:
        floor = c * C.aperture ** (C.dim - 1)
        if min(dens.ratios) <= floor:
            raise PinpatError(f"cone density {min(dens.ratios)} not above c alpha'^(d-1) = {floor}")
    return dens


# ------------------------------------------------------------ angle lemma


def sharp_threshold(params: ConeParameters, x) -> float:
    """``M* = |x| / sin((2^t - 1) alpha'/2)`` (see the module docstring)."""
    a = params.alpha_prime
    return float(np.linalg.norm(x)) / math.sin((2.0**params.slack_exponent - 1) * a / 2)


def closed_form_threshold(params: ConeParameters, x, K: float = 2.0) -> float:
    a = params.alpha_prime
    return K * float(np.linalg.norm(x)) / (math.cos(a) - math.cos(params.slack_bound))


def angle_lemma_threshold(params: ConeParameters, x) -> float:
    """Certified M: beyond it, pinned angles in the cone stay below ``2^t alpha'``."""
    C = params.cone()
    x = as_point(x, params.d)
    if not cone_contains(C, x):
        raise PinpatError("the pin must lie in the cone")
    if not np.any(x):
        raise ApexCase(C.aperture)
    return max(closed_form_threshold(params, x), sharp_threshold(params, x) + float(np.linalg.norm(x)))


def scale_cutoff(params: ConeParameters, x) -> float:
    """R(x) = 2 M(x, alpha')."""
    return 2.0 * angle_lemma_threshold(params, x)


def _cone_directions(rng, n, C: SolidCone, boundary_frac: float = 0.5) -> np.ndarray:
    """Unit vectors in the cone; a share of them exactly on its boundary."""
    d = C.dim
    psi = rng.uniform(0.0, C.half_angle, size=n)
    edge = rng.random(n) < boundary_frac
    psi[edge] = C.half_angle
    if d == 2:
        sgn = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        return np.column_stack([np.cos(psi), sgn * np.sin(psi)])
    w = rng.standard_normal((n, d - 1))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return np.column_stack([np.cos(psi), np.sin(psi)[:, None] * w])


def _sample_far(rng, n, C, x, M, spread: float = 50.0):
    """Points y of the cone with ``|y - x| >= M`` (rejection on the norm draw)."""
    out = np.empty((n, C.dim))
    filled = 0
    xn = float(np.linalg.norm(x))
    lo = max(M - xn, 1e-300)
    while filled < n:
        m = n - filled
        dirs = _cone_directions(rng, m, C)
        t = rng.random(m)
        near = rng.random(m) < 0.5
        # half the norms hug the threshold, half are log-uniform out to spread * M
        norms = np.where(near, lo + (2 * xn + 1e-9 * M) * t, lo * np.exp(t * math.log(spread * M / lo)))
        y = dirs * norms[:, None]
        ok = np.linalg.norm(y - x, axis=1) >= M
        k = int(np.count_nonzero(ok))
        out[filled:filled + k] = y[ok]
        filled += k
    return out


@dataclass
class MonteCarloResult:
    samples: int
    violations: int
    max_angle: float
    bound: float
    worst: tuple | None = None

    @property
    def pass_rate(self) -> float:
        return 1.0 - self.violations / self.samples if self.samples else 1.0


def angle_lemma_monte_carlo(
    params: ConeParameters,
    x,
    M: float,
    samples: int,
    seed: int,
    chunk: int = 100_000,
    threads: int = 1,
) -> MonteCarloResult:
    """Check ``angle(y - x, y' - x) <= 2^t alpha'`` on random pairs beyond M.

    Chunks draw from independent child generators spawned from ``seed``, so
    the outcome does not depend on ``threads``.
    """
    C = params.cone()
    x = as_point(x, params.d)
    bound = params.slack_bound
    sizes = [min(chunk, samples - s) for s in range(0, samples, chunk)]
    children = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(args):
        ss, n = args
        rng = np.random.default_rng(ss)
        y = _sample_far(rng, n, C, x, M)
        y2 = _sample_far(rng, n, C, x, M)
        ang = angles_between(y - x, y2 - x)
        bad = np.nonzero(ang > bound)[0]
        worst = None
        if bad.size:
            j = int(bad[np.argmax(ang[bad])])
            worst = (y[j].tolist(), y2[j].tolist(), float(ang[j]))
        return int(bad.size), float(ang.max()), worst

    jobs = list(zip(children, sizes))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            res = list(pool.map(run, jobs))
    else:
        res = [run(j) for j in jobs]
    viol = sum(r[0] for r in res)
    worst = next((r[2] for r in res if r[2] is not None), None)
    return MonteCarloResult(samples, viol, max(r[1] for r in res), bound, worst)


def tighten_threshold(params: ConeParameters, x, samples: int = 20_000, seed: int = 0, steps: int = 30) -> float:
    """Smallest M in ``[0, certified M]`` on which the Monte Carlo falsifier
    finds no violation (binary search; an empirical value, not a certificate)."""
    hi = angle_lemma_threshold(params, x)
    lo = float(np.linalg.norm(x))
    for i in range(steps):
        mid = 0.5 * (lo + hi)
        r = angle_lemma_monte_carlo(params, x, mid, samples, seed + i)
        if r.violations:
            lo = mid
        else:
            hi = mid
    return hi
