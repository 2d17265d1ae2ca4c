# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels in ``_pykernels``.

Same signatures and identical outputs (including BFS tie-breaking).
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef long long _fact[13]
_fact[0] = 1
for _i in range(1, 13):
    _fact[_i] = _fact[_i - 1] * _i


cdef inline long long _rank(int* a, int n) noexcept nogil:
    cdef long long r = 0
    cdef int i, j, c
    for i in range(n - 1):
        c = 0
        for j in range(i + 1, n):
            if a[j] < a[i]:
                c += 1
        r += c * _fact[n - 1 - i]
    return r


cdef inline void _unrank(long long r, int n, int* out) noexcept nogil:
    cdef int items[16]
    cdef int i, k, j
    cdef long long f
    for i in range(n):
        items[i] = i
    for i in range(n):
        f = _fact[n - 1 - i]
        k = <int>(r // f)
        r = r % f
        out[i] = items[k]
        for j in range(k, n - 1 - i):
            items[j] = items[j + 1]


def perm_bfs(moves):
    cdef cnp.int64_t[:, :] mv = np.ascontiguousarray(moves, dtype=np.int64)
    cdef int n_moves = mv.shape[0]
    cdef int n = mv.shape[1]
    if n > 12:
        raise ValueError("perm_bfs supports at most 12 cells")
    cdef long long total = _fact[n]
    dist_arr = np.full(total, -1, dtype=np.int8)
    parent_arr = np.full(total, -1, dtype=np.int8)
    queue_arr = np.empty(total, dtype=np.int64)
    cdef cnp.int8_t[:] dist = dist_arr
    cdef cnp.int8_t[:] parent = parent_arr
    cdef cnp.int64_t[:] queue = queue_arr
    cdef int state[16]
    cdef int child[16]
    cdef long long head = 0, tail = 0, r, cr
    cdef int m, c, d
    with nogil:
        for c in range(n):
            state[c] = c
        r = _rank(state, n)
        dist[r] = 0
        queue[tail] = r
        tail += 1
        while head < tail:
            r = queue[head]
            head += 1
            _unrank(r, n, state)
            d = dist[r]
            for m in range(n_moves):
                for c in range(n):
                    child[mv[m, c]] = state[c]
                cr = _rank(child, n)
                if dist[cr] < 0:
                    dist[cr] = d + 1
                    parent[cr] = m
                    queue[tail] = cr
                    tail += 1
    return dist_arr, parent_arr


def plan_conflicts(ids):
    cdef cnp.int64_t[:, :] a = np.ascontiguousarray(ids, dtype=np.int64)
    cdef Py_ssize_t steps = a.shape[0]
    cdef Py_ssize_t n = a.shape[1]
    out = []
    if n < 2 or steps == 0:
        return out
    cdef long long span = 0
    cdef Py_ssize_t t, i, j
    for t in range(steps):
        for i in range(n):
            if a[t, i] + 1 > span:
                span = a[t, i] + 1
    head_arr = np.full(span, -1, dtype=np.int64)
    tail_arr = np.full(span, -1, dtype=np.int64)
    stamp_arr = np.full(span, -1, dtype=np.int64)
    nxt_arr = np.full(n, -1, dtype=np.int64)
    cdef cnp.int64_t[:] head = head_arr
    cdef cnp.int64_t[:] tail = tail_arr
    cdef cnp.int64_t[:] stamp = stamp_arr
    cdef cnp.int64_t[:] nxt = nxt_arr
    cdef long long v, u
    for t in range(steps):
        # per-vertex chains of agents at time t, in increasing id order
        for i in range(n):
            v = a[t, i]
            nxt[i] = -1
            if stamp[v] == t:
                j = head[v]
                while j >= 0:
                    out.append(("vertex", t, j, i))
                    j = nxt[j]
                nxt[tail[v]] = i
            else:
                stamp[v] = t
                head[v] = i
            tail[v] = i
        if t + 1 < steps:
            for i in range(n):
                u = a[t, i]
                v = a[t + 1, i]
                if u == v or stamp[v] != t:
                    continue
                j = head[v]
                while j >= 0:
                    if j > i and a[t + 1, j] == u:
                        out.append(("swap", t, i, j))
                    j = nxt[j]
    out.sort(key=lambda r: (r[1], r[0], r[2], r[3]))
    return out
