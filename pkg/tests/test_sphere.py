import math

import numpy as np
import pytest

from pinpat.errors import BadDimension
from pinpat.geometry import DiscretizedSet, sphere_area, unit_ball_volume
from pinpat.sphere import (
    coarea_ball_volume,
    coarea_split,
    complete_basis,
    jacobian_sphere_area,
    polar_point,
    slice_sphere,
    sphere_measure_checks,
)


def test_polar_point_unit():
    rng = np.random.default_rng(0)
    for d in (2, 3, 4, 5):
        ang = rng.uniform(0, math.pi, size=(100, d - 1))
        assert np.allclose(np.linalg.norm(polar_point(ang, d), axis=1), 1.0)


def test_equatorial_slice():
    sl = [s for s in slice_sphere(2.0, 3) if s.angles == (0.0,)][0]
    t = np.linspace(0, 2 * math.pi, 17)
    assert np.allclose(sl.points(t), 2.0 * np.column_stack([np.cos(t), np.sin(t), np.zeros_like(t)]))


@pytest.mark.parametrize("d", [3, 4, 5])
def test_slice_bases(d):
    for s in slice_sphere(1.5, d, angle_grid=6):
        assert abs(np.linalg.norm(s.u) - 1) < 1e-12 and abs(np.linalg.norm(s.v) - 1) < 1e-12
        assert abs(s.u @ s.v) < 1e-12
        assert np.allclose(s.basis.T @ s.basis, np.eye(d), atol=1e-12)
        # the alignment rotation sends the circle into the first coordinate plane
        pts = s.points(np.linspace(0, 6, 11)) @ s.alignment.T
        assert np.allclose(pts[:, 2:], 0, atol=1e-12)


def test_slice_points_on_sphere_d4():
    rng = np.random.default_rng(1)
    for s in slice_sphere(3.0, 4, angle_grid=8):
        pts = s.points(rng.uniform(0, 2 * math.pi, 50))
        assert np.allclose(np.linalg.norm(pts, axis=1), 3.0, atol=1e-12)


def test_distinct_slices_meet_in_at_most_two_points():
    slices = slice_sphere(1.0, 3, angle_grid=6)
    t = np.linspace(0, 2 * math.pi, 7200, endpoint=False)
    for i, a in enumerate(slices):
        A = a.points(t)
        for b in slices[i + 1:]:
            # distance from circle A's samples to circle b (a great circle of normal n)
            n = np.cross(b.u, b.v)
            close = np.abs(A @ n) < 1e-3
            runs = np.count_nonzero(close & ~np.roll(close, 1))
            assert runs <= 2


def test_slice_sphere_rejects_plane():
    with pytest.raises(BadDimension):
        slice_sphere(1.0, 2)


def test_complete_basis_orthogonal():
    u = np.array([1.0, 0, 0, 0])
    v = np.array([0, 0.6, 0.8, 0])
    Q = complete_basis(u, v)
    assert np.allclose(Q.T @ Q, np.eye(4), atol=1e-12)
    assert np.array_equal(Q[:, 0], u) and np.array_equal(Q[:, 1], v)


@pytest.mark.parametrize("d, tol", [(2, 1e-6), (3, 1e-6), (4, 1e-5), (5, 1e-5)])
def test_jacobian_areas(d, tol):
    assert jacobian_sphere_area(d) == pytest.approx(sphere_area(d), rel=tol)
    assert coarea_ball_volume(d, R=2.0) == pytest.approx(unit_ball_volume(d) * 2.0**d, rel=1e-4)


def test_measure_report_and_split():
    h = 0.05
    g = np.arange(-40, 41) * h
    X, Y, Z = np.meshgrid(g, g, g, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    A = DiscretizedSet(pts, pitch=h)
    rep = sphere_measure_checks(3, R=1.5, A=A, intervals=[(0.5, 1.0)])
    assert rep.area_rel_error < 1e-6 and rep.volume_rel_error < 1e-4
    split = rep.split
    assert split["I1"] + split["I2"] == pytest.approx(split["total"])
    assert split["total"] == pytest.approx(4 / 3 * math.pi * 1.5**3, rel=0.02)
    assert split["I1"] == pytest.approx(4 / 3 * math.pi * (1 - 0.125), rel=0.05)


def test_coarea_split_empty_intervals():
    A = DiscretizedSet(np.array([[0.1, 0.0], [2.0, 0.0]]), pitch=0.1)
    s = coarea_split(A, 1.0, [])
    assert s["I1"] == 0 and s["I2"] == pytest.approx(0.01)
