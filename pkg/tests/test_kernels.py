"""Compiled and pure-Python kernels must agree bit for bit."""

import os
import subprocess
import sys

import numpy as np
import pytest

from pinpat import _pykernels as py
from pinpat._backend import BACKEND
from pinpat.torus import TorusSet, interval_ap_free_bounds, random_arc_union, rotation_shifts

cc = pytest.importorskip("pinpat._ckernels")


def test_default_backend_is_compiled():
    if os.environ.get("PINPAT_PURE", "") in ("", "0"):
        assert BACKEND == "compiled"


def test_pure_env_forces_python():
    code = "from pinpat._backend import BACKEND; print(BACKEND)"
    env = dict(os.environ, PINPAT_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_shifted_intersection_parity():
    rng = np.random.default_rng(0)
    for _ in range(300):
        E = random_arc_union(rng, max_arcs=12, max_len=0.8)
        q = int(rng.choice([5, 7, 11, 101]))
        shifts = rotation_shifts(int(rng.integers(1, q)), q - 1, int(rng.integers(1, 5)))
        s, e = E.starts.tolist(), E.ends.tolist()
        assert py.shifted_intersection(s, e, shifts) == cc.shifted_intersection(s, e, shifts)


def test_first_rotated_ap_parity():
    rng = np.random.default_rng(1)
    for _ in range(300):
        E = random_arc_union(rng, max_arcs=6, max_len=0.3)
        q = int(rng.choice([5, 7, 11, 13, 101]))
        k = int(rng.integers(3, 6))
        if q - 1 < k:
            continue
        s, e = E.starts.tolist(), E.ends.tolist()
        assert py.first_rotated_ap(s, e, q - 1, k) == cc.first_rotated_ap(s, e, q - 1, k)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_max_ap_free_parity(m):
    for N in range(m, 23):
        b = list(interval_ap_free_bounds(N, m))
        assert py.max_ap_free(N, m, True, b) == cc.max_ap_free(N, m, True, b)


def test_pure_backend_end_to_end():
    code = (
        "from pinpat.torus import r_m_exact, TorusSet, avoids_rotated_aps;"
        "print(r_m_exact(20, 3)[0], avoids_rotated_aps(TorusSet([(0.0, 3.2)]), 10, 4))"
    )
    outs = []
    for pure in ("1", "0"):
        env = dict(os.environ, PINPAT_PURE=pure)
        outs.append(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                                   text=True, check=True).stdout)
    assert outs[0] == outs[1]
