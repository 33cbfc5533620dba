"""Repeated polar coordinates: circle slices of spheres and measure checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from pinpat.errors import BadDimension
from pinpat.geometry import DiscretizedSet, sphere_area, unit_ball_volume, merge_intervals


def polar_point(angles, d: int) -> np.ndarray:
    """Unit vector of S^{d-1} from repeated polar angles ``(t_1, ..., t_{d-1})``.

    ``w_1 = cos t_1``, ``w_j = sin t_1 ... sin t_{j-1} cos t_j`` and the last
    coordinate ends in ``sin t_{d-1}``.
    """
    angles = np.asarray(angles, dtype=float)
    if angles.shape[-1] != d - 1:
        raise BadDimension(f"need {d - 1} angles for S^{d - 1}")
    out = np.ones(angles.shape[:-1] + (d,))
    s = np.ones(angles.shape[:-1])
    for j in range(d - 1):
        out[..., j] = s * np.cos(angles[..., j])
        s = s * np.sin(angles[..., j])
    out[..., d - 1] = s
    return out


@dataclass(frozen=True, eq=False)
class SphereSlice:
    """The circle ``{r (cos t u + sin t v)}`` with ``u = e1`` and ``v = (0, beta)``."""

    radius: float
    angles: tuple
    u: np.ndarray
    v: np.ndarray
    basis: np.ndarray = field(repr=False)

    def points(self, thetas) -> np.ndarray:
        t = np.asarray(thetas, dtype=float)[..., None]
        return self.radius * (np.cos(t) * self.u + np.sin(t) * self.v)

    @property
    def alignment(self) -> np.ndarray:
        """Orthogonal matrix taking the slice plane to the first coordinate plane."""
        return self.basis.T


def complete_basis(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Orthogonal matrix whose first two columns are ``u`` and ``v``."""
    d = u.shape[0]
    M = np.column_stack([u, v, np.eye(d)])
    Q, R = np.linalg.qr(M)
    Q = Q[:, :d] * np.sign(np.where(np.diag(R)[:d] == 0, 1.0, np.diag(R)[:d]))
    Q[:, 0] = u
    Q[:, 1] = v
    return Q


def _beta_directions(d: int, m: int) -> list[tuple[tuple, np.ndarray]]:
    """Grid over half of S^{d-2}: every angle takes the values j pi/m, j < m."""
    steps = np.arange(m) * math.pi / m
    if d == 3:
        grids = [(float(phi),) for phi in steps]
    else:
        mesh = np.meshgrid(*([steps] * (d - 2)), indexing="ij")
        grids = [tuple(float(a) for a in row) for row in np.stack([g.ravel() for g in mesh], axis=1)]
    seen = set()
    out = []
    for ang in grids:
        beta = polar_point(np.array(ang), d - 1)
        key = tuple(np.round(beta, 12) + 0.0)
        neg = tuple(np.round(-beta, 12) + 0.0)
        if key in seen or neg in seen:
            continue
        seen.add(key)
        out.append((ang, beta))
    return out


def slice_sphere(r: float, d: int, angle_grid: int = 16) -> list[SphereSlice]:
    """Meridian circles of the sphere of radius ``r`` in R^d, ``d >= 3``.

    ``angle_grid`` is the number of grid values per fixed angle; circles whose
    ``beta`` vectors coincide (or are opposite, which is the same circle) are
    emitted once.
    """
    if d < 3:
        raise BadDimension("slice_sphere needs d >= 3")
    m = max(1, int(angle_grid))
    u = np.zeros(d)
    u[0] = 1.0
    out = []
    for ang, beta in _beta_directions(d, m):
        v = np.zeros(d)
        v[1:] = beta
        v /= np.linalg.norm(v)
        out.append(SphereSlice(float(r), ang, u, v, complete_basis(u, v)))
    return out


# ------------------------------------------------------------ measure checks


@lru_cache(maxsize=None)
def _gauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def _gl(a: float, b: float, n: int):
    x, w = _gauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def jacobian_sphere_area(d: int, nodes: int = 48) -> float:
    """Integral of ``|prod_j sin^{d-j-1} t_j|`` over the angle box.

    ``t_1`` ranges over ``(0, 2 pi)`` (split at ``pi`` so each piece is smooth),
    the middle angles and the last angle ``phi`` over ``(0, pi)``.
    """
    if d < 2:
        raise BadDimension("d must be at least 2")
    if d == 2:
        x, w = _gl(0.0, 2 * math.pi, nodes)
        return float(np.sum(w))
    total = 1.0
    for j in range(1, d - 1):
        p = d - j - 1
        if j == 1:
            xa, wa = _gl(0.0, math.pi, nodes)
            xb, wb = _gl(math.pi, 2 * math.pi, nodes)
            x = np.concatenate([xa, xb])
            w = np.concatenate([wa, wb])
        else:
            x, w = _gl(0.0, math.pi, nodes)
        total *= float(np.sum(w * np.abs(np.sin(x)) ** p))
    x, w = _gl(0.0, math.pi, nodes)
    total *= float(np.sum(w))
    return total


def coarea_ball_volume(d: int, R: float = 1.0, nodes: int = 48) -> float:
    """``int_0^R sigma(r S^{d-1}) dr`` with the area from :func:`jacobian_sphere_area`."""
    area = jacobian_sphere_area(d, nodes)
    x, w = _gl(0.0, R, nodes)
    return float(np.sum(w * area * x ** (d - 1)))


@dataclass
class SphereReport:
    d: int
    area: float
    area_exact: float
    area_rel_error: float
    volume: float
    volume_exact: float
    volume_rel_error: float
    split: dict | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def coarea_split(A: DiscretizedSet, R: float, intervals) -> dict:
    """Split ``L^d(A & B(0, R))`` by whether ``|y|`` lies in the union of ``intervals``.

    Each stored point stands for a cell of volume ``h^d``; ``I1`` collects
    the points whose norm falls in the union, ``I2`` the rest.
    """
    merged = merge_intervals(intervals)
    norms = A.norms[A.norms <= R]
    cell = A.pitch**A.dim
    if merged:
        starts = np.array([a for a, _ in merged])
        ends = np.array([b for _, b in merged])
        idx = np.searchsorted(starts, norms, side="right") - 1
        inside = (idx >= 0) & (norms <= ends[np.clip(idx, 0, None)])
    else:
        inside = np.zeros(norms.shape, dtype=bool)
    i1 = float(np.count_nonzero(inside) * cell)
    i2 = float(np.count_nonzero(~inside) * cell)
    return {"R": float(R), "I1": i1, "I2": i2, "total": i1 + i2}


def sphere_measure_checks(d: int, nodes: int = 48, R: float = 1.0, A=None, intervals=None) -> SphereReport:
    area = jacobian_sphere_area(d, nodes)
    exact = sphere_area(d)
    vol = coarea_ball_volume(d, R, nodes)
    vexact = unit_ball_volume(d) * R**d
    split = None
    if A is not None:
        split = coarea_split(A, R, intervals or [])
    return SphereReport(
        d, area, exact, abs(area - exact) / exact, vol, vexact, abs(vol - vexact) / vexact, split
    )
