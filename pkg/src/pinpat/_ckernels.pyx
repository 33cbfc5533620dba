# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; see ``_pykernels`` for the contract."""

from libc.stdint cimport uint64_t
from libc.stdlib cimport malloc, free, qsort
from libc.math cimport M_PI

import numpy as np

cdef double TWO_PI = 2.0 * M_PI

ctypedef struct arc_t:
    double a
    double b


cdef int _cmp_arc(const void* p, const void* q) noexcept nogil:
    cdef double x = (<arc_t*>p).a
    cdef double y = (<arc_t*>q).a
    if x < y:
        return -1
    if x > y:
        return 1
    return 0


cdef int _rotate(const double* s, const double* e, int n, double shift,
                 arc_t* out) noexcept nogil:
    """Write sorted, merged arcs of E - shift into out; return their count."""
    cdef int i, cnt = 0, m = 0
    cdef double a2, b2
    for i in range(n):
        a2 = s[i] - shift
        b2 = e[i] - shift
        if a2 < 0.0:
            a2 += TWO_PI
            b2 += TWO_PI
        if a2 >= TWO_PI:
            a2 -= TWO_PI
            b2 -= TWO_PI
        if b2 > TWO_PI:
            out[cnt].a = a2
            out[cnt].b = TWO_PI
            cnt += 1
            out[cnt].a = 0.0
            out[cnt].b = b2 - TWO_PI
            cnt += 1
        else:
            out[cnt].a = a2
            out[cnt].b = b2
            cnt += 1
    qsort(out, cnt, sizeof(arc_t), _cmp_arc)
    for i in range(cnt):
        if out[i].b <= out[i].a:
            continue
        if m > 0 and out[i].a <= out[m - 1].b:
            if out[i].b > out[m - 1].b:
                out[m - 1].b = out[i].b
        else:
            out[m] = out[i]
            m += 1
    return m


cdef int _intersect(const arc_t* x, int nx, const arc_t* y, int ny,
                    arc_t* out) noexcept nogil:
    cdef int i = 0, j = 0, cnt = 0
    cdef double lo, hi
    while i < nx and j < ny:
        lo = x[i].a if x[i].a > y[j].a else y[j].a
        hi = x[i].b if x[i].b < y[j].b else y[j].b
        if lo < hi:
            out[cnt].a = lo
            out[cnt].b = hi
            cnt += 1
        if x[i].b < y[j].b:
            i += 1
        else:
            j += 1
    return cnt


cdef int _chain(const double* s, const double* e, int n, const double* shifts,
                int ns, arc_t* cur, arc_t* rot, arc_t* tmp) noexcept nogil:
    """cur <- intersection over shifts of (E - shift); returns arc count."""
    cdef int i, j, ncur = n, nrot
    for i in range(n):
        cur[i].a = s[i]
        cur[i].b = e[i]
    for i in range(ns):
        if ncur == 0:
            break
        if shifts[i] == 0.0:
            continue
        nrot = _rotate(s, e, n, shifts[i], rot)
        ncur = _intersect(cur, ncur, rot, nrot, tmp)
        for j in range(ncur):
            cur[j] = tmp[j]
    return ncur


def shifted_intersection(starts, ends, shifts):
    cdef double[::1] s = np.ascontiguousarray(starts, dtype=np.float64)
    cdef double[::1] e = np.ascontiguousarray(ends, dtype=np.float64)
    cdef double[::1] sh = np.ascontiguousarray(shifts, dtype=np.float64)
    cdef int n = s.shape[0]
    cdef int ns = sh.shape[0]
    cdef int cap = (ns + 2) * (2 * n + 2) + 4
    cdef arc_t* cur = <arc_t*>malloc(cap * sizeof(arc_t))
    cdef arc_t* rot = <arc_t*>malloc(cap * sizeof(arc_t))
    cdef arc_t* tmp = <arc_t*>malloc(cap * sizeof(arc_t))
    cdef int i, cnt
    try:
        if n == 0:
            return [], []
        if ns == 0:
            return list(starts), list(ends)
        cnt = _chain(&s[0], &e[0], n, &sh[0], ns, cur, rot, tmp)
        return [cur[i].a for i in range(cnt)], [cur[i].b for i in range(cnt)]
    finally:
        free(cur)
        free(rot)
        free(tmp)


def first_rotated_ap(starts, ends, long n, int k):
    cdef double[::1] s = np.ascontiguousarray(starts, dtype=np.float64)
    cdef double[::1] e = np.ascontiguousarray(ends, dtype=np.float64)
    cdef int na = s.shape[0]
    cdef int cap = (k + 1) * (2 * na + 2) + 4
    cdef long q = n + 1
    cdef long i, j
    cdef int cnt, t, best
    cdef double* shifts = <double*>malloc((k - 1) * sizeof(double))
    cdef arc_t* cur = <arc_t*>malloc(cap * sizeof(arc_t))
    cdef arc_t* rot = <arc_t*>malloc(cap * sizeof(arc_t))
    cdef arc_t* tmp = <arc_t*>malloc(cap * sizeof(arc_t))
    try:
        if na == 0:
            return None
        for i in range(1, n + 1):
            for j in range(k - 1):
                shifts[j] = TWO_PI * <double>((j * i) % q) / <double>q
            cnt = _chain(&s[0], &e[0], na, shifts, k - 1, cur, rot, tmp)
            if cnt > 0:
                best = 0
                for t in range(1, cnt):
                    if cur[t].b - cur[t].a > cur[best].b - cur[best].a:
                        best = t
                return int(i), cur[best].a, cur[best].b
        return None
    finally:
        free(shifts)
        free(cur)
        free(rot)
        free(tmp)


# ---------------------------------------------------------------- AP search

cdef struct search_t:
    int N
    uint64_t full
    uint64_t* aps       # flat list of AP masks
    int* start          # by-element offsets into idx
    int* idx            # AP indices per element
    long* bounds
    int best
    uint64_t best_mask


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil
    int __builtin_ctzll(unsigned long long) nogil


cdef inline int _popcount(uint64_t x) noexcept nogil:
    return __builtin_popcountll(x)


cdef uint64_t _forbid(search_t* st, int x, uint64_t S2) noexcept nogil:
    cdef uint64_t F = 0, missing, ap
    cdef int t
    for t in range(st.start[x], st.start[x + 1]):
        ap = st.aps[st.idx[t]]
        missing = ap & ~S2
        if missing != 0 and (missing & (missing - 1)) == 0 and (missing >> (x + 1)) != 0:
            F |= missing
    return F


cdef void _rec(search_t* st, int pos, int size, uint64_t S, uint64_t F) noexcept nogil:
    cdef uint64_t cand, S2, F2, low_mask
    cdef int cnt, rem, bound, c
    if size > st.best:
        st.best = size
        st.best_mask = S
    if pos >= st.N:
        return
    low_mask = ((<uint64_t>1) << pos) - 1
    cand = st.full & ~S & ~F & ~low_mask
    cnt = _popcount(cand)
    rem = st.N - pos
    bound = cnt if cnt < st.bounds[rem] else <int>st.bounds[rem]
    if size + bound <= st.best:
        return
    if cand == 0:
        return
    c = __builtin_ctzll(cand)
    S2 = S | ((<uint64_t>1) << c)
    F2 = F | _forbid(st, c, S2)
    _rec(st, c + 1, size + 1, S2, F2)
    _rec(st, c + 1, size, S, F | ((<uint64_t>1) << c))


def max_ap_free(int N, int m, bint cyclic, interval_bounds):
    if N > 63:
        raise ValueError("compiled AP search supports N <= 63")
    from pinpat._pykernels import _ap_masks
    aps_py = _ap_masks(N, m, cyclic)
    cdef int napa = len(aps_py)
    cdef search_t st
    cdef int i, x, t
    cdef uint64_t mask
    st.N = N
    st.full = (((<uint64_t>1) << N) - 1) if N < 64 else <uint64_t>0xFFFFFFFFFFFFFFFF
    st.aps = <uint64_t*>malloc((napa + 1) * sizeof(uint64_t))
    st.start = <int*>malloc((N + 1) * sizeof(int))
    st.idx = <int*>malloc((napa * m + 1) * sizeof(int))
    st.bounds = <long*>malloc((N + 1) * sizeof(long))
    counts = [0] * (N + 1)
    try:
        for i in range(napa):
            st.aps[i] = <uint64_t>aps_py[i]
            for x in range(N):
                if (aps_py[i] >> x) & 1:
                    counts[x + 1] += 1
        for x in range(N):
            counts[x + 1] += counts[x]
        for x in range(N + 1):
            st.start[x] = counts[x]
        fill = list(counts[:N])
        for i in range(napa):
            for x in range(N):
                if (aps_py[i] >> x) & 1:
                    st.idx[fill[x]] = i
                    fill[x] += 1
        for i in range(N + 1):
            st.bounds[i] = interval_bounds[i] if i < len(interval_bounds) else i
        S = (<uint64_t>1)
        F = _forbid(&st, 0, S)
        st.best = 1
        st.best_mask = S
        with nogil:
            _rec(&st, 1, 1, S, F)
        return st.best, int(st.best_mask)
    finally:
        free(st.aps)
        free(st.start)
        free(st.idx)
        free(st.bounds)
