"""Pinned copies of patterns: occurrence tests, pinned scaling sets, distance sets.

Tolerance is a distance in ambient units. A copy ``x + r O(V)`` is accepted
when every one of its points lies within ``tol`` of a stored point of E, and
every returned witness is re-checked against the spatial index.

Two search strategies:

* planar path. For a pattern in the first coordinate plane, the set of
  rotation angles placing pattern point ``p_j`` within ``tol`` of E is an
  exact arc union (one arc per E point in the annulus of radius ``r |p_j|``).
  The admissible rotations are the intersection of those unions shifted by
  the pattern angles, so the search is exact in d = 2. In d >= 3 it runs on
  each meridian circle produced by :func:`pinpat.sphere.slice_sphere`.
* generic path. Seeds on (pin, anchor) pairs in the plane, or on pairs of
  anchors in higher dimension, fits the isometry by orthogonal Procrustes
  (reflections allowed), then verifies; near misses get one least-squares
  refit on their nearest matches.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from pinpat.errors import LengthMismatch, NotCoplanar, PinNotInSet, PinpatError
from pinpat.geometry import (
    Density1D,
    DiscretizedSet,
    Isometry,
    Pattern,
    as_point,
    as_points,
    upper_density_1d,
)
from pinpat.sphere import slice_sphere
from pinpat.torus import TWO_PI, TorusSet

PATHS = ("auto", "planar", "generic")


# ---------------------------------------------------------- distance sets


def pinned_distance_set(A: DiscretizedSet, x, dedup: float | None = None) -> np.ndarray:
    """Sorted distances ``|x - y|`` for y in A; values within ``dedup`` (default
    pitch/4) of the previous kept value are merged into it."""
    x = as_point(x, A.dim)
    if len(A) == 0:
        return np.zeros(0)
    dist = np.sort(np.linalg.norm(A.points - x, axis=1))
    gap = A.pitch / 4 if dedup is None else dedup
    keep = [0]
    for i in range(1, dist.shape[0]):
        if dist[i] - dist[keep[-1]] > gap:
            keep.append(i)
    return dist[keep]


# --------------------------------------------------------- equal-gap match


def _rotation_in_plane(b1: np.ndarray, b2: np.ndarray, delta: float) -> np.ndarray:
    d = b1.shape[0]
    P = np.outer(b1, b1) + np.outer(b2, b2)
    J = np.outer(b2, b1) - np.outer(b1, b2)
    return np.eye(d) + (math.cos(delta) - 1.0) * P + math.sin(delta) * J


def match_equal_gap(U, W, tol: float = 1e-9) -> Isometry | None:
    """Planar rotation taking U onto W when their consecutive angular gaps agree.

    U and W are equally long lists of points on one circle about the origin
    (same radius), in one common 2-plane, each sorted by angle.
    """
    U = as_points(U)
    W = as_points(W, U.shape[1])
    if U.shape[0] != W.shape[0] or U.shape[0] == 0:
        raise LengthMismatch("U and W must have the same positive cardinality")
    norms = np.linalg.norm(np.vstack([U, W]), axis=1)
    ell = float(norms[0])
    if np.any(np.abs(norms - ell) > tol * max(ell, 1.0)):
        raise LengthMismatch("all points must have the same norm")
    d = U.shape[1]
    if d == 2:
        b1, b2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    else:
        _, s, vt = np.linalg.svd(np.vstack([U, W]))
        if s.shape[0] > 2 and s[2] > tol * max(ell, 1.0):
            raise NotCoplanar("points do not lie in one plane through the origin")
        b1 = vt[0]
        b2 = vt[1] if s.shape[0] > 1 and s[1] > tol * max(ell, 1.0) else None
        if b2 is None:
            # one direction only: any unit vector orthogonal to it will do
            e = np.zeros(d)
            e[int(np.argmin(np.abs(b1)))] = 1.0
            b2 = e - np.dot(e, b1) * b1
            b2 /= np.linalg.norm(b2)
    a = np.arctan2(U @ b2, U @ b1)
    b = np.arctan2(W @ b2, W @ b1)
    ga = np.mod(np.diff(a), TWO_PI)
    gb = np.mod(np.diff(b), TWO_PI)
    diff = np.abs(ga - gb)
    diff = np.minimum(diff, TWO_PI - diff)
    if np.any(diff > tol):
        return None
    delta = float(b[0] - a[0])
    O = Isometry(_rotation_in_plane(b1, b2, delta))
    if np.max(np.linalg.norm(O(U) - W, axis=1)) > tol * max(ell, 1.0):
        return None
    return O


# ---------------------------------------------------------- planar search


def _arcs_for_shell(offsets_2d: np.ndarray, R: float, tol_eff: np.ndarray) -> TorusSet:
    """Angles t with ``|R (cos t, sin t) - q| <= tol_eff`` for some row q."""
    if offsets_2d.shape[0] == 0:
        return TorusSet()
    s = np.hypot(offsets_2d[:, 0], offsets_2d[:, 1])
    phi = np.arctan2(offsets_2d[:, 1], offsets_2d[:, 0])
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (R * R + s * s - tol_eff * tol_eff) / (2.0 * R * s)
    full = (s == 0) & (R <= tol_eff)
    c = np.where(s == 0, np.where(full, -2.0, 2.0), c)
    ok = c <= 1.0
    delta = np.arccos(np.clip(c[ok], -1.0, 1.0))
    delta = np.where(c[ok] <= -1.0, math.pi, delta)
    centers = phi[ok]
    return TorusSet(np.column_stack([centers - delta, centers + delta]))


def _shifted_core(sets: list[TorusSet], angles: np.ndarray, sign: float) -> TorusSet:
    """``{t : t + sign * angles[j] in sets[j] for all j}``."""
    if len(sets) == 1 or all(s is sets[0] for s in sets):
        shifts = np.mod(sign * angles, TWO_PI)
        return sets[0].orbit_core(shifts.tolist())
    core = TorusSet.full()
    for S, a in zip(sets, angles):
        core = core.intersection(S.shifted(-sign * a))
        if core.is_empty():
            break
    return core


@dataclass(frozen=True)
class _PlanarPattern:
    radii: np.ndarray        # distinct norms of non-pin points
    which: np.ndarray        # radius index per non-pin point
    angles: np.ndarray       # polar angle per non-pin point


def _planar_form(P: np.ndarray) -> _PlanarPattern | None:
    """Polar data if every pattern point lies in span(e1, e2), else ``None``."""
    Q = P[1:]
    scale = max(1.0, float(np.max(np.abs(Q))))
    if Q.shape[1] > 2 and np.any(np.abs(Q[:, 2:]) > 1e-12 * scale):
        return None
    rho = np.hypot(Q[:, 0], Q[:, 1])
    ang = np.arctan2(Q[:, 1], Q[:, 0])
    radii: list[float] = []
    which = []
    for r in rho:
        for t, r0 in enumerate(radii):
            if abs(r - r0) <= 1e-12 * max(r0, 1.0):
                which.append(t)
                break
        else:
            radii.append(float(r))
            which.append(len(radii) - 1)
    return _PlanarPattern(np.array(radii), np.array(which), ang)


def _verify(E: DiscretizedSet, x: np.ndarray, P: np.ndarray, r: float, O: np.ndarray, tol: float) -> bool:
    img = x + r * (P @ O.T)
    return bool(np.all(np.isfinite(E.nearest_within(img, tol))))


def _rot2(t: float) -> np.ndarray:
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s], [s, c]])


_FLIP = np.diag([1.0, -1.0])


def _planar_on_plane(E, x, P, form, r, tol, offsets, basis, witness_tries=4):
    """Exact rotation search for one plane through x with orthonormal ``basis``.

    ``offsets`` are the E points near the relevant shells, relative to x.
    Returns a d x d orthogonal matrix or ``None``.
    """
    d = P.shape[1]
    u, v = basis[:, 0], basis[:, 1]
    a = offsets @ u
    b = offsets @ v
    if d > 2:
        z2 = np.maximum(np.einsum("ij,ij->i", offsets, offsets) - a * a - b * b, 0.0)
        keep = z2 < tol * tol
        a, b, z2 = a[keep], b[keep], z2[keep]
        tol_eff = np.sqrt(tol * tol - z2)
    else:
        tol_eff = np.full(a.shape, tol)
    xy = np.column_stack([a, b])
    sets = []
    for rho in form.radii:
        R = r * rho
        s = np.hypot(a, b)
        near = np.abs(s - R) <= tol_eff
        sets.append(_arcs_for_shell(xy[near], R, tol_eff[near]))
        if sets[-1].is_empty():
            return None
    per_point = [sets[t] for t in form.which]
    for sign, F in ((1.0, np.eye(2)), (-1.0, _FLIP)):
        core = _shifted_core(per_point, form.angles, sign)
        if core.is_empty():
            continue
        lengths = core.ends - core.starts
        for t in np.argsort(-lengths, kind="stable")[:witness_tries]:
            theta = 0.5 * (core.starts[t] + core.ends[t])
            M = np.eye(d)
            M[:2, :2] = _rot2(theta) @ F
            O = basis @ M
            if _verify(E, x, P, r, O, tol):
                return O
    return None


def _planar_search(E, view, x, P, form, r, tol, angle_grid=None):
    d = P.shape[1]
    lo = r * float(form.radii.min()) - tol
    hi = r * float(form.radii.max()) + tol
    idx = view.shell(max(lo, 0.0), hi)
    if idx.shape[0] == 0:
        return None
    offsets = view.offsets[idx]
    if d == 2:
        return _planar_on_plane(E, x, P, form, r, tol, offsets, np.eye(2))
    if angle_grid is None:
        angle_grid = default_angle_grid(hi, E.thickness if E.thickness > 0 else E.pitch)
    for sl in slice_sphere(1.0, d, angle_grid):
        O = _planar_on_plane(E, x, P, form, r, tol, offsets, sl.basis)
        if O is not None:
            return O
    return None


def default_angle_grid(radius: float, eta: float) -> int:
    """Grid size making neighbouring meridian circles at most ``eta`` apart."""
    return max(1, int(math.ceil(math.pi * radius / max(eta, 1e-300))))


# --------------------------------------------------------- generic search


def procrustes(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Orthogonal O (determinant free) minimizing ``sum |O a_i - b_i|^2``."""
    M = B.T @ A
    U, _, Vt = np.linalg.svd(M)
    return U @ Vt


def _anchors(Q: np.ndarray, max_anchors: int) -> list[int]:
    """Indices of well-spread pattern vectors: largest first, then largest residuals."""
    scale = float(np.max(np.linalg.norm(Q, axis=1)))
    chosen = [int(np.argmax(np.linalg.norm(Q, axis=1)))]
    while len(chosen) < max_anchors:
        B = Q[chosen]
        coef, *_ = np.linalg.lstsq(B.T, Q.T, rcond=None)
        resid = np.linalg.norm(Q - (B.T @ coef).T, axis=1)
        j = int(np.argmax(resid))
        if resid[j] <= 1e-9 * scale:
            break
        chosen.append(j)
    return chosen


def _check_batch(E, x, P, r, tol, Os) -> int | None:
    """Index of the first candidate in ``Os`` (n, d, d) whose image verifies."""
    if Os.shape[0] == 0:
        return None
    img = x + r * np.einsum("nij,kj->nki", Os, P)
    n, k, d = img.shape
    dist = E.nearest_within(img.reshape(n * k, d), tol).reshape(n, k)
    ok = np.all(np.isfinite(dist), axis=1)
    hits = np.nonzero(ok)[0]
    return int(hits[0]) if hits.size else None


def _refine(E, x, P, r, tol, Os) -> np.ndarray | None:
    """One least-squares refit for candidates whose points all sit within 2 tol."""
    if Os.shape[0] == 0:
        return None
    img = x + r * np.einsum("nij,kj->nki", Os, P)
    n, k, d = img.shape
    flat = img.reshape(n * k, d)
    dist = E.nearest_within(flat, 2 * tol).reshape(n, k)
    close = np.nonzero(np.all(np.isfinite(dist), axis=1))[0]
    for c in close:
        qi, pi = E._candidates(img[c], 2 * tol)
        dd = np.linalg.norm(E.points[pi] - img[c][qi], axis=1)
        match = np.empty((k, d))
        for j in range(k):
            sel = qi == j
            match[j] = E.points[pi[sel][np.argmin(dd[sel])]]
        O = procrustes(r * P[1:], match[1:] - x)
        if _verify(E, x, P, r, O, tol):
            return O
    return None


def _generic_search(E, view, x, P, r, tol, chunk: int = 4096):
    d = P.shape[1]
    Q = P[1:]
    anchors = _anchors(Q, 1 if d == 2 else min(2, d))
    rho = np.linalg.norm(Q, axis=1)
    a1 = anchors[0]
    c1 = view.shell(max(r * rho[a1] - tol, 0.0), r * rho[a1] + tol)
    if c1.size == 0:
        return None
    off1 = view.offsets[c1]
    if d == 2 or len(anchors) == 1:
        # the pin and one anchor fix the map up to a reflection
        p = Q[a1] / rho[a1]
        cand = []
        for F in (np.eye(d), None):
            for w in off1:
                nw = np.linalg.norm(w)
                if nw == 0:
                    continue
                if d == 2:
                    t = math.atan2(w[1], w[0]) - math.atan2(p[1], p[0])
                    Rt = _rot2(t)
                    if F is None:
                        # reflect across the anchor direction first
                        H = 2 * np.outer(p, p) - np.eye(2)
                        cand.append(Rt @ H)
                    else:
                        cand.append(Rt)
                else:
                    if F is None:
                        continue
                    cand.append(procrustes(p[None, :], (w / nw)[None, :]))
        Os = np.array(cand) if cand else np.zeros((0, d, d))
    else:
        a2 = anchors[1]
        c2 = view.shell(max(r * rho[a2] - tol, 0.0), r * rho[a2] + tol)
        if c2.size == 0:
            return None
        off2 = view.offsets[c2]
        target = r * np.linalg.norm(Q[a1] - Q[a2])
        src = np.vstack([Q[a1], Q[a2]]) * r
        cand = []
        for w1 in off1:
            gap = np.linalg.norm(off2 - w1, axis=1)
            for w2 in off2[np.abs(gap - target) <= 2 * tol]:
                cand.append(procrustes(src, np.vstack([w1, w2])))
        Os = np.array(cand) if cand else np.zeros((0, d, d))
    for start in range(0, Os.shape[0], chunk):
        batch = Os[start:start + chunk]
        hit = _check_batch(E, x, P, r, tol, batch)
        if hit is not None:
            return batch[hit]
    for start in range(0, Os.shape[0], chunk):
        O = _refine(E, x, P, r, tol, Os[start:start + chunk])
        if O is not None:
            return O
    return None


# ------------------------------------------------------------- front door


def _pattern_array(V: Pattern, d: int) -> np.ndarray:
    if V.dimension > d:
        raise PinpatError(f"pattern lives in R^{V.dimension}, set in R^{d}")
    P = V.embed(d).points
    if np.any(np.abs(P[0]) > 1e-12):
        raise PinpatError("the pattern's first point (the pin) must be the origin")
    return P


def _check_pin(E: DiscretizedSet, x: np.ndarray, tol: float) -> None:
    if len(E) == 0 or not np.isfinite(E.nearest_within(x, tol)[0]):
        raise PinNotInSet(f"pin {x.tolist()} is not within {tol} of the set")


def _choose_path(V: Pattern, form, d: int, path: str) -> str:
    if path not in PATHS:
        raise PinpatError(f"path must be one of {PATHS}")
    if path == "planar" and form is None:
        raise PinpatError("planar path needs a pattern inside the first coordinate plane")
    if path != "auto":
        return path
    if form is None:
        return "generic"
    if d == 2 or V.catalog is not None:
        return "planar"
    return "generic"


def occurs_at(
    E: DiscretizedSet,
    x,
    V: Pattern,
    r: float,
    tol: float,
    path: str = "auto",
    angle_grid: int | None = None,
    view=None,
) -> Isometry | None:
    """Witness O with ``x + r O(V)`` inside E up to ``tol``, or ``None``.

    ``V.points[0]`` is the pin and must be the origin. ``path`` selects the
    planar or generic strategy (``auto``: planar whenever the pattern lies in
    the first coordinate plane and either d = 2 or V is a catalog pattern).
    """
    x = as_point(x, E.dim)
    if r <= 0 or tol < 0:
        raise PinpatError("need r > 0 and tol >= 0")
    _check_pin(E, x, tol)
    P = _pattern_array(V, E.dim)
    form = _planar_form(P)
    mode = _choose_path(V, form, E.dim, path)
    view = view if view is not None else E.pin_view(x)
    if mode == "planar":
        O = _planar_search(E, view, x, P, form, r, tol, angle_grid)
    else:
        O = _generic_search(E, view, x, P, r, tol)
    if O is None:
        return None
    W = Isometry(O)
    # soundness: never hand out an unverified witness
    assert _verify(E, x, P, r, W.matrix, tol)
    return W


# ---------------------------------------------------------- scaling sets


@dataclass
class ScalingFactorSet:
    pin: np.ndarray
    pattern: str
    scales: list = field(default_factory=list)     # [(r, Isometry)]
    r_grid: tuple = ()
    tol: float = 0.0
    path: str = "auto"
    grid_pitch: float = 0.0
    density: Density1D | None = None

    @property
    def radii(self) -> list[float]:
        return [r for r, _ in self.scales]

    def __len__(self) -> int:
        return len(self.scales)

    @property
    def window_fraction(self) -> float:
        return len(self.scales) / len(self.r_grid) if self.r_grid else 0.0

    def intervals(self) -> list[tuple[float, float]]:
        h = self.grid_pitch / 2
        return [(r - h, r + h) for r in self.radii]


def grid_pitch(r_grid: Sequence[float]) -> float:
    g = np.asarray(r_grid, dtype=float)
    if g.size < 2:
        return float(g[0]) if g.size else 0.0
    return float(np.median(np.diff(g)))


def witness_angle(O: Isometry) -> float:
    """Polar angle of ``O e1`` in the first coordinate plane, in ``[0, 2 pi)``."""
    col = O.matrix[:, 0]
    return float(math.atan2(col[1], col[0]) % TWO_PI)


def pinned_scaling_set(
    E: DiscretizedSet,
    x,
    V: Pattern,
    r_grid: Sequence[float],
    tol: float,
    path: str = "auto",
    threads: int = 1,
    angle_grid: int | None = None,
) -> ScalingFactorSet:
    grid = np.asarray(list(r_grid), dtype=float)
    if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise PinpatError("r_grid must be non-empty, positive and strictly increasing")
    x = as_point(x, E.dim)
    _check_pin(E, x, tol)
    view = E.pin_view(x)

    def one(r):
        return occurs_at(E, x, V, float(r), tol, path, angle_grid, view)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            found = list(pool.map(one, grid))
    else:
        found = [one(r) for r in grid]
    scales = [(float(r), O) for r, O in zip(grid, found) if O is not None]
    pitch = grid_pitch(grid)
    dens = upper_density_1d([r for r, _ in scales], grid, thickness=pitch / 2)
    return ScalingFactorSet(x, V.name, scales, tuple(float(g) for g in grid), tol, path, pitch, dens)
