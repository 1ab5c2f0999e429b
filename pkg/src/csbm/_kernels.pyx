# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled search kernels; contracts mirror ``csbm._pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef struct ExState:
    int n
    const unsigned char* a
    const unsigned char* b
    long* remaining
    long* perm
    long* best_perm
    char* used
    long best
    long count


cdef void _ex_dfs(ExState* st, int d, long cur) noexcept nogil:
    cdef int n = st.n
    cdef int v, j
    cdef long gain
    if cur + st.remaining[d] < st.best:
        return
    if d == n:
        if cur > st.best:
            st.best = cur
            st.count = 1
            for j in range(n):
                st.best_perm[j] = st.perm[j]
        else:
            st.count += 1
        return
    for v in range(n):
        if st.used[v]:
            continue
        gain = 0
        for j in range(d):
            if st.a[d * n + j] and st.b[v * n + st.perm[j]]:
                gain += 1
        st.used[v] = 1
        st.perm[d] = v
        _ex_dfs(st, d + 1, cur + gain)
        st.used[v] = 0


def exhaustive_argmax(A, B):
    cdef const cnp.uint8_t[:, ::1] a = np.ascontiguousarray(A, dtype=np.uint8)
    cdef const cnp.uint8_t[:, ::1] b = np.ascontiguousarray(B, dtype=np.uint8)
    cdef int n = a.shape[0]
    cdef int d, j
    cdef ExState st
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0, 1
    out = np.zeros(n, dtype=np.int64)
    cdef long[::1] outv = out
    st.n = n
    st.a = &a[0, 0]
    st.b = &b[0, 0]
    st.remaining = <long*> malloc((n + 1) * sizeof(long))
    st.perm = <long*> malloc(n * sizeof(long))
    st.best_perm = <long*> malloc(n * sizeof(long))
    st.used = <char*> malloc(n * sizeof(char))
    try:
        st.remaining[n] = 0
        for d in range(n - 1, -1, -1):
            st.remaining[d] = st.remaining[d + 1]
            for j in range(d):
                st.remaining[d] += a[d, j]
        for d in range(n):
            st.used[d] = 0
            st.perm[d] = 0
        st.best = -1
        st.count = 0
        with nogil:
            _ex_dfs(&st, 0, 0)
        for d in range(n):
            outv[d] = st.best_perm[d]
        return out, int(st.best), int(st.count)
    finally:
        free(st.remaining)
        free(st.perm)
        free(st.best_perm)
        free(st.used)


cdef struct MapState:
    int n
    const unsigned char* a
    const unsigned char* b
    const unsigned char* same
    long* perm
    char* used
    long row
    long* perms_out
    long* stats_out


cdef void _map_dfs(MapState* st, int d, long mp, long mm, long np_, long nm) noexcept nogil:
    cdef int n = st.n
    cdef int v, j
    cdef long dmp, dmm, dnp, dnm, bb
    if d == n:
        for j in range(n):
            st.perms_out[st.row * n + j] = st.perm[j]
        st.stats_out[st.row * 4 + 0] = mp
        st.stats_out[st.row * 4 + 1] = mm
        st.stats_out[st.row * 4 + 2] = np_
        st.stats_out[st.row * 4 + 3] = nm
        st.row += 1
        return
    for v in range(n):
        if st.used[v]:
            continue
        dmp = 0
        dmm = 0
        dnp = 0
        dnm = 0
        for j in range(d):
            bb = st.b[v * n + st.perm[j]]
            if st.same[d * n + j]:
                dnp += bb
                dmp += st.a[d * n + j] & bb
            else:
                dnm += bb
                dmm += st.a[d * n + j] & bb
        st.used[v] = 1
        st.perm[d] = v
        _map_dfs(st, d + 1, mp + dmp, mm + dmm, np_ + dnp, nm + dnm)
        st.used[v] = 0


def enumerate_map_stats(A, B, same):
    cdef const cnp.uint8_t[:, ::1] a = np.ascontiguousarray(A, dtype=np.uint8)
    cdef const cnp.uint8_t[:, ::1] b = np.ascontiguousarray(B, dtype=np.uint8)
    cdef const cnp.uint8_t[:, ::1] sm = np.ascontiguousarray(same, dtype=np.uint8)
    cdef int n = a.shape[0]
    cdef long total = 1
    cdef int d
    cdef MapState st
    for d in range(2, n + 1):
        total *= d
    perms = np.zeros((total, n), dtype=np.int64)
    stats = np.zeros((total, 4), dtype=np.int64)
    if n == 0:
        return perms, stats
    cdef long[:, ::1] pv = perms
    cdef long[:, ::1] sv = stats
    st.n = n
    st.a = &a[0, 0]
    st.b = &b[0, 0]
    st.same = &sm[0, 0]
    st.row = 0
    st.perms_out = &pv[0, 0]
    st.stats_out = &sv[0, 0]
    st.perm = <long*> malloc(n * sizeof(long))
    st.used = <char*> malloc(n * sizeof(char))
    try:
        for d in range(n):
            st.used[d] = 0
            st.perm[d] = 0
        with nogil:
            _map_dfs(&st, 0, 0, 0, 0, 0)
        return perms, stats
    finally:
        free(st.perm)
        free(st.used)


cdef inline long _swap_delta(const unsigned char[:, ::1] a, const unsigned char[:, ::1] b,
                             long[::1] p, int u, int v) noexcept nogil:
    cdef int n = p.shape[0]
    cdef int j
    cdef long pu = p[u], pv = p[v], pj, da, delta = 0
    for j in range(n):
        if j == u or j == v:
            continue
        da = <long> a[u, j] - <long> a[v, j]
        if da != 0:
            pj = p[j]
            delta += da * (<long> b[pv, pj] - <long> b[pu, pj])
    return delta


def local_search(A, B, perm, long max_moves):
    cdef const unsigned char[:, ::1] a = np.ascontiguousarray(A, dtype=np.uint8)
    cdef const unsigned char[:, ::1] b = np.ascontiguousarray(B, dtype=np.uint8)
    cdef long[::1] p = perm
    cdef int n = p.shape[0]
    cdef int u, v
    cdef long evals = 0, swaps = 0, tmp
    cdef bint improved = True
    with nogil:
        while improved and evals < max_moves:
            improved = False
            for u in range(n - 1):
                for v in range(u + 1, n):
                    if evals >= max_moves:
                        break
                    evals += 1
                    if _swap_delta(a, b, p, u, v) > 0:
                        tmp = p[u]
                        p[u] = p[v]
                        p[v] = tmp
                        swaps += 1
                        improved = True
    return int(evals), int(swaps)
