"""Pure-Python reference versions of the hot kernels.

Every function here has a twin with the same signature in ``_ckernels.pyx``.
Arc unions are passed as two parallel sequences ``starts``/``ends`` of sorted,
disjoint half-open arcs inside ``[0, 2*pi)``.
"""

from __future__ import annotations

import math

TWO_PI = 2.0 * math.pi


def _rotate(starts, ends, shift):
    """Return the arcs of ``E - shift`` (mod 2*pi), sorted and merged."""
    pieces = []
    for a, b in zip(starts, ends):
        a2 = a - shift
        b2 = b - shift
        if a2 < 0.0:
            a2 += TWO_PI
            b2 += TWO_PI
        if a2 >= TWO_PI:
            a2 -= TWO_PI
            b2 -= TWO_PI
        if b2 > TWO_PI:
            pieces.append((a2, TWO_PI))
            pieces.append((0.0, b2 - TWO_PI))
        else:
            pieces.append((a2, b2))
    pieces.sort()
    out_s, out_e = [], []
    for a, b in pieces:
        if b <= a:
            continue
        if out_s and a <= out_e[-1]:
            if b > out_e[-1]:
                out_e[-1] = b
        else:
            out_s.append(a)
            out_e.append(b)
    return out_s, out_e


def _intersect(s1, e1, s2, e2):
    out_s, out_e = [], []
    i = j = 0
    n1, n2 = len(s1), len(s2)
    while i < n1 and j < n2:
        lo = s1[i] if s1[i] > s2[j] else s2[j]
        hi = e1[i] if e1[i] < e2[j] else e2[j]
        if lo < hi:
            out_s.append(lo)
            out_e.append(hi)
        if e1[i] < e2[j]:
            i += 1
        else:
            j += 1
    return out_s, out_e


def shifted_intersection(starts, ends, shifts):
    """Arcs of ``{t : t + s in E for every s in shifts}``."""
    cur_s, cur_e = list(starts), list(ends)
    for s in shifts:
        if not cur_s:
            break
        if s == 0.0:
            continue
        rs, re_ = _rotate(starts, ends, s)
        cur_s, cur_e = _intersect(cur_s, cur_e, rs, re_)
    return cur_s, cur_e


def first_rotated_ap(starts, ends, n, k):
    """First ``(i, a, b)`` such that the orbit ``t + j*2*pi*i/(n+1)``, j < k-1,
    lies in E for every t in the arc ``[a, b)``; ``None`` if E avoids them all."""
    q = n + 1
    for i in range(1, n + 1):
        shifts = [TWO_PI * ((j * i) % q) / q for j in range(k - 1)]
        s, e = shifted_intersection(starts, ends, shifts)
        if s:
            best = max(range(len(s)), key=lambda t: e[t] - s[t])
            return i, s[best], e[best]
    return None


def _ap_masks(N, m, cyclic):
    """All m-term APs of Z/NZ (or of the integer interval [0, N)) as bitmasks."""
    seen = set()
    if cyclic:
        for d in range(1, N):
            if N // math.gcd(d, N) < m:
                continue
            for a in range(N):
                mask = 0
                for j in range(m):
                    mask |= 1 << ((a + j * d) % N)
                seen.add(mask)
    else:
        for d in range(1, N):
            for a in range(N - (m - 1) * d):
                mask = 0
                for j in range(m):
                    mask |= 1 << (a + j * d)
                seen.add(mask)
    return sorted(seen)


def max_ap_free(N, m, cyclic, interval_bounds):
    """Largest m-AP-free subset containing 0, by depth-first branch and bound.

    ``interval_bounds[L]`` must upper-bound the size of an m-AP-free subset of
    an integer interval of length ``L`` (for ``L < N`` at least).
    Returns ``(size, mask)``.
    """
    full = (1 << N) - 1
    aps = _ap_masks(N, m, cyclic)
    by_elem = [[] for _ in range(N)]
    for mask in aps:
        x = mask
        while x:
            low = x & -x
            by_elem[low.bit_length() - 1].append(mask)
            x ^= low
    best = [0, 0]

    def add(x, S, F):
        S2 = S | (1 << x)
        F2 = F
        for ap in by_elem[x]:
            missing = ap & ~S2
            if missing and missing & (missing - 1) == 0 and missing >> (x + 1):
                F2 |= missing
        return S2, F2

    def rec(pos, size, S, F):
        if size > best[0]:
            best[0] = size
            best[1] = S
        cand = full & ~S & ~F & ~((1 << pos) - 1)
        cnt = bin(cand).count("1")
        rem = N - pos
        bound = cnt if cnt < interval_bounds[rem] else interval_bounds[rem]
        if size + bound <= best[0]:
            return
        if not cand:
            return
        c = (cand & -cand).bit_length() - 1
        S2, F2 = add(c, S, F)
        rec(c + 1, size + 1, S2, F2)
        # exclude c: it stays out of S, later elements never revisit it
        rec(c + 1, size, S, F | (1 << c))

    S0, F0 = add(0, 0, 0)
    if N >= 1:
        best[0], best[1] = 1, S0
        rec(1, 1, S0, F0)
    return best[0], best[1]
