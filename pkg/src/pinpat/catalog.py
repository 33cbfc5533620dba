"""The rotated-progression patterns V_i^k, prime selection and theorem constants."""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from pinpat.errors import PinpatError, PreconditionViolated, WindowEmpty
from pinpat.geometry import Pattern
from pinpat.torus import is_prime, next_prime

FEASIBILITY_CAP = 10**7


@dataclass(frozen=True)
class CatalogSpec:
    k: int
    d: int
    n: int
    C_d: float
    epsilon0: float = 1.0

    def __post_init__(self):
        if self.k < 3:
            raise PinpatError("catalog patterns need k >= 3")
        if self.d < 2:
            raise PinpatError("dimension must be at least 2")
        if not is_prime(self.n + 1):
            raise PinpatError(f"n + 1 = {self.n + 1} must be prime")
        if self.n < self.k:
            raise PreconditionViolated(f"need n >= k, got n={self.n}, k={self.k}")
        if not self.C_d > 0:
            raise PinpatError("C_d must be positive")
        if not 0 < self.epsilon0 <= 1:
            raise PinpatError("epsilon0 must lie in (0, 1]")


def catalog_pattern(i: int, k: int, n: int, d: int = 2) -> Pattern:
    """V_i^k: the origin, e1 and the unit vectors at angles j 2 pi i/(n+1), j = 1..k-2."""
    q = n + 1
    pts = np.zeros((k, d))
    for j in range(k - 1):
        # exact residue keeps the angle in [0, 2 pi) without drift
        ang = 2.0 * math.pi * ((j * i) % q) / q
        pts[j + 1, 0] = math.cos(ang)
        pts[j + 1, 1] = math.sin(ang)
    return Pattern(pts, normalized=False, name=f"V_{i}^{k}", catalog=(i, q))


def build_catalog(spec: CatalogSpec) -> list[Pattern]:
    return [catalog_pattern(i, spec.k, spec.n, spec.d) for i in range(1, spec.n + 1)]


@dataclass(frozen=True)
class PrimeChoice:
    """Result of :func:`select_prime`. ``n_plus_1`` is the prime itself."""

    n_plus_1: int
    window: tuple
    in_theory_window: bool
    demo_scale: bool = False
    reason: str = ""

    @property
    def n(self) -> int:
        return self.n_plus_1 - 1


def _check_inputs(epsilon0: float, C_d: float) -> None:
    if not 0 < epsilon0 <= 1:
        raise PinpatError("epsilon0 must lie in (0, 1]")
    if not C_d > 0:
        raise PinpatError("C_d must be positive")


def _log_c(m: int) -> mpmath.mpf:
    """ln c_m with c_m = 2^(-2^(m+9))."""
    return -(mpmath.mpf(2) ** (m + 9)) * mpmath.log(2)


def select_prime(
    k: int,
    d: int,
    epsilon0: float,
    C_d: float,
    floor: int | None = None,
    cap: int = FEASIBILITY_CAP,
) -> PrimeChoice:
    """Smallest prime in the theory window for n+1.

    k = 3 uses the window ``(20 pi C/eps0, 60 pi C/eps0)``. For k >= 4 the
    window ``(e^{e^L}/3, e^{e^L})`` with ``L = (20 C pi/eps0)^{1/c_{k-1}}`` is
    tested against ``cap`` in log space; when it is out of reach the result is
    the smallest prime above ``floor`` flagged as demo scale.
    """
    _check_inputs(epsilon0, C_d)
    if k < 3:
        raise PinpatError("k must be at least 3")
    if k == 3:
        lo = 20 * math.pi * C_d / epsilon0
        hi = 3 * lo
        p = next_prime(math.floor(lo))
        if not p < hi:
            raise WindowEmpty(f"no prime in ({lo}, {hi})")
        return PrimeChoice(p, (lo, hi), True)
    with mpmath.workdps(50):
        # upper = exp(exp(B^(1/c))), B = 20 C pi/eps0, so
        # ln ln ln upper = ln ln B - ln c = ln ln B + 2^(m+9) ln 2
        lnB = mpmath.log(20 * C_d * mpmath.pi / epsilon0)
        if lnB <= 0:
            lnlnln_upper = mpmath.mpf("-inf")
        else:
            lnlnln_upper = mpmath.log(lnB) - _log_c(k - 1)
        if lnlnln_upper <= mpmath.log(mpmath.log(mpmath.log(cap))):
            upper = float(mpmath.exp(mpmath.exp(mpmath.exp(lnlnln_upper))))
            lo = upper / 3
            p = next_prime(math.floor(lo))
            if p < upper:
                return PrimeChoice(p, (lo, upper), True)
        tag = mpmath.nstr(lnlnln_upper, 12)
        window = (f"exp(exp(exp({tag})))/3", f"exp(exp(exp({tag})))")
    start = max(k, floor if floor is not None else k)
    p = next_prime(start)
    return PrimeChoice(
        p, window, False, demo_scale=True,
        reason=f"theory window exceeds the feasibility cap {cap}; using the smallest prime above {start}",
    )


@dataclass(frozen=True)
class TheoremConstants:
    """epsilon, M_d and epsilon_tilde = epsilon/M_d.

    ``log_epsilon`` is exact (mpmath) when finite; for k >= 4 epsilon is far
    below any float and is described by ``lnln_neg_log_epsilon``, the value of
    ``ln ln(-ln epsilon)``.
    """

    k: int
    epsilon0: float
    C_d: float
    M_d: float
    c_exponent_m_plus_9: int | None
    log_epsilon: mpmath.mpf | None
    lnln_neg_log_epsilon: mpmath.mpf | None

    @property
    def epsilon(self) -> float:
        if self.log_epsilon is None:
            return 0.0
        return float(mpmath.exp(self.log_epsilon))

    @property
    def log_epsilon_tilde(self):
        if self.log_epsilon is None:
            return None
        return self.log_epsilon - mpmath.log(self.M_d)

    @property
    def epsilon_tilde(self) -> float:
        v = self.log_epsilon_tilde
        return 0.0 if v is None else float(mpmath.exp(v))

    def as_dict(self) -> dict:
        out = {
            "k": self.k,
            "epsilon0": self.epsilon0,
            "C_d": self.C_d,
            "M_d": self.M_d,
            "epsilon": self.epsilon,
            "epsilon_tilde": self.epsilon_tilde,
        }
        if self.log_epsilon is not None:
            out["ln_epsilon"] = float(self.log_epsilon)
        if self.lnln_neg_log_epsilon is not None:
            out["epsilon_symbolic"] = {
                "sign": -1,
                "lnln_neg_ln_epsilon": mpmath.nstr(self.lnln_neg_log_epsilon, 15),
                "c_exponent": f"2^-(2^{self.c_exponent_m_plus_9})",
            }
        return out


def theorem_constants(k: int, d: int, epsilon0: float, C_d: float) -> TheoremConstants:
    _check_inputs(epsilon0, C_d)
    if k < 3:
        raise PinpatError("k must be at least 3")
    with mpmath.workdps(50):
        if k == 3:
            return TheoremConstants(
                k, epsilon0, C_d, 1e10 * math.pi * C_d**2, None,
                2 * mpmath.log(epsilon0), None,
            )
        # epsilon = exp(-exp(B^{1/c})) with B = 20 C pi/eps0
        # ln ln(-ln eps) = ln(B)/c = 2^(2^(m+9)) ln B, m = k-1
        m9 = k - 1 + 9
        lnB = mpmath.log(20 * C_d * mpmath.pi / epsilon0)
        lnln = mpmath.exp(-_log_c(k - 1)) * lnB
        return TheoremConstants(k, epsilon0, C_d, 10.0 * C_d, m9, None, lnln)
