"""Points, isometries, patterns, angles and density estimation.

Points are plain ``numpy`` vectors; a point set is an ``(n, d)`` array.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from pinpat.errors import (
    CollinearTriple,
    DimensionMismatch,
    DuplicatePoints,
    EmptyRadiusList,
    PinpatError,
    ZeroVector,
)


@dataclass(frozen=True)
class Tolerances:
    """Every numeric tolerance used by the geometry layer, in one place."""

    orthogonality: float = 1e-10
    collinear: float = 1e-12
    duplicate: float = 1e-12
    distance_preservation: float = 1e-10
    dedup_fraction_of_pitch: float = 0.25


TOL = Tolerances()


def as_point(p, d: int | None = None) -> np.ndarray:
    x = np.asarray(p, dtype=float)
    if x.ndim != 1 or x.shape[0] < 2:
        raise DimensionMismatch(f"a point needs d >= 2 coordinates, got shape {x.shape}")
    if d is not None and x.shape[0] != d:
        raise DimensionMismatch(f"expected a point in R^{d}, got R^{x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise PinpatError("point coordinates must be finite")
    return x


def as_points(pts, d: int | None = None) -> np.ndarray:
    x = np.asarray(pts, dtype=float)
    if x.ndim == 1 and x.size == 0:
        x = x.reshape(0, d or 2)
    if x.ndim != 2:
        raise DimensionMismatch(f"expected an (n, d) array, got shape {x.shape}")
    if d is not None and x.shape[1] != d:
        raise DimensionMismatch(f"expected points in R^{d}, got R^{x.shape[1]}")
    if not np.all(np.isfinite(x)):
        raise PinpatError("point coordinates must be finite")
    return x


# ----------------------------------------------------------------- angles


def _wedge_norm(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """|u ^ v| from the 2x2 minors; no cancellation for nearly parallel vectors."""
    d = u.shape[-1]
    acc = np.zeros(np.broadcast_shapes(u.shape[:-1], v.shape[:-1]))
    for i in range(d):
        for j in range(i + 1, d):
            m = u[..., i] * v[..., j] - u[..., j] * v[..., i]
            acc = acc + m * m
    return np.sqrt(acc)


def angle_between(u, v) -> float:
    """Angle in ``[0, pi]`` between two nonzero vectors, via atan2(|u ^ v|, u . v)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise DimensionMismatch("vectors must have the same dimension")
    if not np.any(u) or not np.any(v):
        raise ZeroVector("angle is undefined for a zero vector")
    # rescale first so that tiny or huge inputs do not under/overflow the minors
    u = u / np.max(np.abs(u))
    v = v / np.max(np.abs(v))
    return float(np.arctan2(_wedge_norm(u, v), np.dot(u, v)))


def angles_between(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Row-wise :func:`angle_between` for ``(n, d)`` arrays (rows must be nonzero)."""
    su = np.max(np.abs(u), axis=-1, keepdims=True)
    sv = np.max(np.abs(v), axis=-1, keepdims=True)
    if np.any(su == 0) or np.any(sv == 0):
        raise ZeroVector("angle is undefined for a zero vector")
    u = u / su
    v = v / sv
    return np.arctan2(_wedge_norm(u, v), np.sum(u * v, axis=-1))


# --------------------------------------------------------------- isometry


@dataclass(frozen=True, eq=False)
class Isometry:
    """A linear isometry of R^d (rotation or reflection about the origin)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"isometry matrix must be square, got {m.shape}")
        err = np.max(np.abs(m.T @ m - np.eye(m.shape[0])))
        if err > TOL.orthogonality:
            raise PinpatError(f"matrix is not orthogonal (max |O^T O - I| = {err:.3g})")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, d: int) -> "Isometry":
        return cls(np.eye(d))

    @classmethod
    def planar_rotation(cls, theta: float, d: int = 2) -> "Isometry":
        """Rotation by ``theta`` in the (e1, e2) plane, identity on the rest."""
        m = np.eye(d)
        c, s = math.cos(theta), math.sin(theta)
        m[0, 0], m[0, 1], m[1, 0], m[1, 1] = c, -s, s, c
        return cls(m)

    def __call__(self, pts):
        return np.asarray(pts, dtype=float) @ self.matrix.T

    def compose(self, other: "Isometry") -> "Isometry":
        """``self`` after ``other``."""
        return Isometry(self.matrix @ other.matrix)

    def inverse(self) -> "Isometry":
        return Isometry(self.matrix.T.copy())

    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    def to_list(self) -> list[list[float]]:
        return self.matrix.tolist()


def random_isometry(d: int, rng: np.random.Generator) -> Isometry:
    """Haar-distributed element of O(d)."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    return Isometry(q)


# ---------------------------------------------------------------- pattern


@dataclass(frozen=True, eq=False)
class Pattern:
    """An ordered k-point pattern in R^d.

    ``catalog`` is ``(i, n + 1)`` for members of the V_i^k family and ``None``
    otherwise; the detector uses it to pick the circle-slicing fast path.
    """

    points: np.ndarray
    normalized: bool = False
    name: str = ""
    catalog: tuple[int, int] | None = None

    def __post_init__(self):
        pts = as_points(self.points)
        if pts.shape[0] < 2:
            raise PinpatError("a pattern needs at least two points")
        _check_distinct(pts)
        object.__setattr__(self, "points", pts)
        if self.normalized:
            if np.any(np.abs(pts[0]) > 1e-12):
                raise PinpatError("normalized pattern must have points[0] at the origin")

    @property
    def k(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def embed(self, d: int) -> "Pattern":
        """Pad with zero coordinates to live in R^d."""
        if d == self.dimension:
            return self
        if d < self.dimension:
            raise DimensionMismatch("cannot embed a pattern into a smaller space")
        pts = np.zeros((self.k, d))
        pts[:, : self.dimension] = self.points
        return Pattern(pts, self.normalized, self.name, self.catalog)

    def min_distance(self) -> float:
        return float(min(np.linalg.norm(a - b) for a, b in itertools.combinations(self.points, 2)))


def _check_distinct(pts: np.ndarray) -> None:
    for i, j in itertools.combinations(range(pts.shape[0]), 2):
        if np.linalg.norm(pts[i] - pts[j]) <= TOL.duplicate:
            raise DuplicatePoints(f"pattern points {i} and {j} coincide")


def normalize_pattern(V: Pattern) -> Pattern:
    """Translate ``points[0]`` to the origin and scale the shortest side to 1."""
    pts = np.asarray(V.points, dtype=float)
    _check_distinct(pts)
    moved = pts - pts[0]
    dmin = min(np.linalg.norm(a - b) for a, b in itertools.combinations(moved, 2))
    out = moved / dmin
    out[0] = 0.0
    return Pattern(out, normalized=True, name=V.name, catalog=V.catalog)


def smallest_angle(V: Pattern) -> float:
    """Minimum over vertices p_j and pairs p_i, p_l of the angle at p_j."""
    pts = V.points
    k = pts.shape[0]
    if k < 3:
        raise PinpatError("smallest_angle needs at least three points")
    best = math.pi
    for j in range(k):
        for i, l in itertools.combinations([t for t in range(k) if t != j], 2):
            a = angle_between(pts[i] - pts[j], pts[l] - pts[j])
            if a <= TOL.collinear or a >= math.pi - TOL.collinear:
                raise CollinearTriple(f"points {i}, {j}, {l} are collinear")
            best = min(best, a)
    return best


def apply_isometry(O: Isometry, V):
    """Apply ``O`` to a Pattern, a single point or an ``(n, d)`` point array."""
    if isinstance(V, Pattern):
        if V.dimension != O.dim:
            raise DimensionMismatch(f"pattern in R^{V.dimension}, isometry on R^{O.dim}")
        return Pattern(O(V.points), V.normalized, V.name, V.catalog)
    x = np.asarray(V, dtype=float)
    if x.shape[-1] != O.dim:
        raise DimensionMismatch(f"point in R^{x.shape[-1]}, isometry on R^{O.dim}")
    return O(x)


def named_pattern(name: str, d: int = 2) -> Pattern:
    """A few fixed, already-normalized test patterns."""
    table = {
        "equilateral": [[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]],
        "right_isosceles": [[0, 0], [1, 0], [0, 1]],
        "segment": [[0, 0], [1, 0]],
        "isosceles_30": [[0, 0], [1, 0], [math.cos(math.pi / 6), math.sin(math.pi / 6)]],
    }
    if name not in table:
        raise PinpatError(f"unknown pattern {name!r}; choose from {sorted(table)}")
    return Pattern(np.array(table[name], dtype=float), normalized=True, name=name).embed(d)


# ---------------------------------------------------------- discretized set


class DiscretizedSet:
    """A finite point cloud standing in for a subset of R^d.

    A point ``p`` belongs to the set when some stored point lies within
    ``thickness`` of it. Neighbourhood queries go through a uniform bucket
    grid with cell edge ``max(pitch, thickness)`` (coarsened for very sparse clouds).
    """

    def __init__(self, points, pitch: float, thickness: float | None = None, d: int | None = None):
        pts = as_points(points, d)
        if pitch <= 0:
            raise PinpatError("grid pitch must be positive")
        self.points = pts
        self.pitch = float(pitch)
        self.thickness = float(pitch / 2 if thickness is None else thickness)
        if self.thickness < 0:
            raise PinpatError("thickness must be non-negative")
        self.dim = pts.shape[1]
        self.norms = np.linalg.norm(pts, axis=1)
        self.bounding_radius = float(self.norms.max()) if len(pts) else 0.0
        self._cell = max(self.pitch, self.thickness)
        self._build_index()
        self._sorted_norms = np.sort(self.norms)

    def __len__(self) -> int:
        return self.points.shape[0]

    def _build_index(self) -> None:
        if len(self) == 0:
            self._lo = np.zeros(self.dim, dtype=np.int64)
            self._ext = np.ones(self.dim, dtype=np.int64)
            self._keys = np.zeros(0, dtype=np.int64)
            self._order = np.zeros(0, dtype=np.int64)
            return
        # a sparse cloud with a tiny pitch would overflow the linear keys;
        # coarser buckets only cost speed, never correctness
        span = self.points.max(axis=0) - self.points.min(axis=0)
        fit = float(np.max(span)) / 2.0 ** (60.0 / self.dim)
        self._cell = max(self._cell, fit)
        cells = np.floor(self.points / self._cell).astype(np.int64)
        self._lo = cells.min(axis=0)
        self._ext = cells.max(axis=0) - self._lo + 1
        if float(np.prod(self._ext.astype(float))) >= 2.0**62:
            raise PinpatError("bucket grid too large for 64-bit cell keys")
        keys = self._linear(cells)
        self._order = np.argsort(keys, kind="stable")
        self._keys = keys[self._order]

    def _linear(self, cells: np.ndarray) -> np.ndarray:
        rel = cells - self._lo
        key = np.zeros(cells.shape[0], dtype=np.int64)
        for i in range(self.dim):
            key = key * self._ext[i] + rel[:, i]
        return key

    def _candidates(self, queries: np.ndarray, radius: float):
        """Pairs (query index, point index) with the point in a nearby bucket."""
        span = int(math.ceil(radius / self._cell)) if radius > 0 else 0
        offs = self._offsets(span)
        qcells = np.floor(queries / self._cell).astype(np.int64)
        q, o = qcells.shape[0], offs.shape[0]
        c = (qcells[:, None, :] + offs[None, :, :]).reshape(q * o, self.dim)
        rel = c - self._lo
        ok = np.all((rel >= 0) & (rel < self._ext), axis=1)
        idx = np.nonzero(ok)[0]
        empty = np.zeros(0, dtype=np.int64)
        if idx.size == 0:
            return empty, empty
        keys = self._linear(c[idx])
        lo = np.searchsorted(self._keys, keys, side="left")
        hi = np.searchsorted(self._keys, keys, side="right")
        cnt = hi - lo
        keep = cnt > 0
        if not np.any(keep):
            return empty, empty
        idx, lo, cnt = idx[keep], lo[keep], cnt[keep]
        rep_q = np.repeat(idx // o, cnt)
        start = np.repeat(lo - np.cumsum(cnt) + cnt, cnt)
        pos = np.arange(rep_q.shape[0]) + start
        return rep_q, self._order[pos]

    def _offsets(self, span: int) -> np.ndarray:
        cache = self.__dict__.setdefault("_offset_cache", {})
        if span not in cache:
            rng = range(-span, span + 1)
            cache[span] = np.array(list(itertools.product(rng, repeat=self.dim)), dtype=np.int64)
        return cache[span]

    def nearest_within(self, queries, radius: float) -> np.ndarray:
        """Distance from each query to the nearest stored point, ``inf`` beyond ``radius``."""
        qs = as_points(np.atleast_2d(queries), self.dim)
        out = np.full(qs.shape[0], np.inf)
        if len(self) == 0:
            return out
        qi, pi = self._candidates(qs, radius)
        if qi.size == 0:
            return out
        dist = np.linalg.norm(self.points[pi] - qs[qi], axis=1)
        near = dist <= radius
        np.minimum.at(out, qi[near], dist[near])
        return out

    def near(self, queries, radius: float) -> np.ndarray:
        return np.isfinite(self.nearest_within(queries, radius))

    def contains(self, p) -> bool | np.ndarray:
        """Membership in the fattened set (within ``thickness`` of a stored point)."""
        arr = np.asarray(p, dtype=float)
        res = self.near(arr, self.thickness)
        return bool(res[0]) if arr.ndim == 1 else res

    def ball_indices(self, center, radius: float) -> np.ndarray:
        """Indices of stored points in the closed ball; small radii use the buckets."""
        c = as_point(center, self.dim)
        if radius <= 8 * self._cell:
            qi, pi = self._candidates(c[None, :], radius)
            dist = np.linalg.norm(self.points[pi] - c, axis=1)
            return np.sort(pi[dist <= radius])
        dist = np.linalg.norm(self.points - c, axis=1)
        return np.nonzero(dist <= radius)[0]

    def pin_view(self, x) -> "PinView":
        return PinView(self, as_point(x, self.dim))

    def transformed(self, O: Isometry | None = None, scale: float = 1.0, shift=None) -> "DiscretizedSet":
        """Image under ``p -> scale * O(p) + shift`` (pitch and thickness scale too)."""
        pts = self.points if O is None else O(self.points)
        pts = pts * scale
        if shift is not None:
            pts = pts + np.asarray(shift, dtype=float)
        return DiscretizedSet(pts, self.pitch * scale, self.thickness * scale)


class PinView:
    """Distances from one pin to every stored point, sorted for shell queries."""

    def __init__(self, E: DiscretizedSet, x: np.ndarray):
        self.set = E
        self.pin = x
        self.offsets = E.points - x
        dist = np.linalg.norm(self.offsets, axis=1)
        self.order = np.argsort(dist, kind="stable")
        self.sorted_dist = dist[self.order]
        self.dist = dist

    def shell(self, lo: float, hi: float) -> np.ndarray:
        """Indices of points whose distance to the pin lies in ``[lo, hi]``."""
        a = np.searchsorted(self.sorted_dist, lo, side="left")
        b = np.searchsorted(self.sorted_dist, hi, side="right")
        return np.sort(self.order[a:b])


# --------------------------------------------------------------- densities


@dataclass(frozen=True)
class Density1D:
    radii: tuple[float, ...]
    ratios: tuple[float, ...]
    sup_ratio: float


@dataclass(frozen=True)
class DensityND:
    radii: tuple[float, ...]
    ratios: tuple[float, ...]
    sup_ratio: float
    dim: int = field(default=2)


def merge_intervals(intervals: Iterable[Sequence[float]]) -> list[tuple[float, float]]:
    """Sort and merge overlapping or touching intervals ``(a, b)`` with ``a < b``."""
    out: list[list[float]] = []
    for a, b in sorted((float(a), float(b)) for a, b in intervals if b > a):
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out]


def _check_radii(R_list) -> np.ndarray:
    R = np.asarray(list(R_list), dtype=float)
    if R.size == 0:
        raise EmptyRadiusList("need at least one radius")
    if np.any(R <= 0) or np.any(np.diff(R) <= 0):
        raise PinpatError("radii must be positive and strictly increasing")
    return R


def upper_density_1d(S, R_list, thickness: float | None = None) -> Density1D:
    """Ratios ``L1(S & [0, R]) / R``.

    ``S`` is either a sequence of ``(a, b)`` intervals, or a 1-d array of
    points when ``thickness`` is given (each point becomes an interval of
    length ``2 * thickness``).
    """
    R = _check_radii(R_list)
    if thickness is not None:
        pts = np.asarray(S, dtype=float).ravel()
        merged = merge_intervals((p - thickness, p + thickness) for p in pts)
    else:
        merged = merge_intervals(S)
    if merged:
        starts = np.array([max(a, 0.0) for a, _ in merged])
        ends = np.array([max(b, 0.0) for _, b in merged])
    else:
        starts = ends = np.zeros(0)
    ratios = []
    for r in R:
        covered = np.clip(np.minimum(ends, r) - starts, 0.0, None).sum()
        ratios.append(float(covered / r))
    return Density1D(tuple(float(r) for r in R), tuple(ratios), max(ratios))


def upper_density_nd(A: DiscretizedSet, R_list) -> DensityND:
    """Ratios ``(count of points in B(0, R)) * h^d / R^d``."""
    R = _check_radii(R_list)
    counts = np.searchsorted(A._sorted_norms, R, side="right")
    ratios = counts * A.pitch**A.dim / R**A.dim
    ratios = tuple(float(r) for r in ratios)
    return DensityND(tuple(float(r) for r in R), ratios, max(ratios), A.dim)


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^{d-1} in R^d."""
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)
