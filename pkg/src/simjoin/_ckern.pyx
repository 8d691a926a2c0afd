# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend: thin wrappers over the C similarity kernels.

All heavy loops release the GIL so row ranges and tiles can run on
Python threads in parallel.
"""

from libc.stdint cimport uint64_t

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef extern from "_kernelcore.h":
    uint64_t sj_fnv1a64(const unsigned char* data, long n) nogil
    void sj_synthetic_fill(uint64_t stream_seed, long dim, float* out) nogil
    long sj_normalize_rows(float* m, long n, long dim) nogil
    void sj_row_norms(const float* m, long n, long dim, float* out) nogil
    float sj_dot_seq(const float* a, const float* b, long dim) nogil
    void sj_dots_vm(const float* a, const float* m, long n, long dim, float* out) nogil
    void sj_pack_transpose(const float* src, long n, long dim, float* dst) nogil
    void sj_tile_dot(const float* left, long lda, const float* bt, long ldb,
                     long nl, long nr, long dim, float* out, long ldo) nogil
    long sj_scan_count(const float* buf, long nelem, float theta) nogil
    long sj_scan_fill(const float* buf, long nl, long nr, float theta,
                      uint64_t left0, uint64_t right0,
                      uint64_t* lefts, uint64_t* rights, float* sims) nogil
    long sj_nlj_row(const float* a, const float* rows, long ns, long dim,
                    float theta, float band, uint64_t* out_j, float* out_s) nogil
    long sj_nlj_rows(const float* left, long i0, long i1,
                     const float* rows, long ns, long dim,
                     float theta, float band,
                     uint64_t* out_i, uint64_t* out_j, float* out_s,
                     long cap, long* next_row) nogil

NAME = "compiled"


def fnv1a64(data: bytes) -> int:
    cdef const unsigned char[::1] view = data
    if len(data) == 0:
        return int(sj_fnv1a64(NULL, 0))
    return int(sj_fnv1a64(&view[0], view.shape[0]))


def synthetic_fill(stream_seed, float[::1] out):
    cdef uint64_t seed = stream_seed
    cdef long dim = out.shape[0]
    if dim == 0:
        return
    with nogil:
        sj_synthetic_fill(seed, dim, &out[0])


def synthetic_fill_many(const uint64_t[::1] seeds, float[:, ::1] out):
    cdef long n = out.shape[0]
    cdef long dim = out.shape[1]
    cdef long i
    if n == 0 or dim == 0:
        return
    with nogil:
        for i in range(n):
            sj_synthetic_fill(seeds[i], dim, &out[i, 0])


def normalize_rows_inplace(float[:, ::1] m) -> int:
    cdef long n = m.shape[0]
    cdef long dim = m.shape[1]
    cdef long repaired
    if n == 0 or dim == 0:
        return 0
    with nogil:
        repaired = sj_normalize_rows(&m[0, 0], n, dim)
    return repaired


def row_norms(const float[:, ::1] m):
    cdef long n = m.shape[0]
    cdef long dim = m.shape[1]
    out = np.empty(n, dtype=np.float32)
    cdef float[::1] ov = out
    if n == 0:
        return out
    if dim == 0:
        out[:] = 0.0
        return out
    with nogil:
        sj_row_norms(&m[0, 0], n, dim, &ov[0])
    return out


def dot_seq(const float[::1] a, const float[::1] b) -> float:
    cdef long dim = a.shape[0]
    cdef float r
    if dim == 0:
        return 0.0
    with nogil:
        r = sj_dot_seq(&a[0], &b[0], dim)
    return r


def dots_vm(const float[::1] a, const float[:, ::1] m):
    cdef long n = m.shape[0]
    cdef long dim = m.shape[1]
    out = np.empty(n, dtype=np.float32)
    cdef float[::1] ov = out
    if n == 0:
        return out
    if dim == 0:
        out[:] = 0.0
        return out
    with nogil:
        sj_dots_vm(&a[0], &m[0, 0], n, dim, &ov[0])
    return out


def pack_transpose(const float[:, ::1] m):
    cdef long n = m.shape[0]
    cdef long dim = m.shape[1]
    out = np.empty((dim, n), dtype=np.float32)
    cdef float[:, ::1] ov = out
    if n == 0 or dim == 0:
        return out
    with nogil:
        sj_pack_transpose(&m[0, 0], n, dim, &ov[0, 0])
    return out


def tile_dot(const float[:, ::1] left, const float[:, :] bt, float[:, ::1] out):
    """out[i, j] = canonical dot(left[i], bt[:, j]).

    `bt` is a packed transpose; its rows may be strided (a column slice of
    a wider packed matrix) but must be contiguous within a row.
    """
    cdef long nl = left.shape[0]
    cdef long dim = left.shape[1]
    cdef long nr = bt.shape[1]
    cdef long lda = dim
    cdef long ldb
    cdef long ldo = out.shape[1]
    if nl == 0 or nr == 0:
        return
    if bt.strides[1] != sizeof(float):
        raise ValueError("packed right matrix must be row-contiguous")
    ldb = bt.strides[0] // sizeof(float)
    with nogil:
        sj_tile_dot(&left[0, 0], lda, &bt[0, 0], ldb, nl, nr, dim,
                    &out[0, 0], ldo)


def scan_hits(const float[:, ::1] buf, float theta, left0, right0):
    """Collect (left, right, sim) for every cell >= theta, row-major order."""
    cdef long nl = buf.shape[0]
    cdef long nr = buf.shape[1]
    cdef long k
    cdef uint64_t l0 = left0
    cdef uint64_t r0 = right0
    empty = (np.empty(0, dtype=np.uint64), np.empty(0, dtype=np.uint64),
             np.empty(0, dtype=np.float32))
    if nl == 0 or nr == 0:
        return empty
    with nogil:
        k = sj_scan_count(&buf[0, 0], nl * nr, theta)
    if k == 0:
        return empty
    lefts = np.empty(k, dtype=np.uint64)
    rights = np.empty(k, dtype=np.uint64)
    sims = np.empty(k, dtype=np.float32)
    cdef uint64_t[::1] lv = lefts
    cdef uint64_t[::1] rv = rights
    cdef float[::1] sv = sims
    with nogil:
        sj_scan_fill(&buf[0, 0], nl, nr, theta, l0, r0, &lv[0], &rv[0], &sv[0])
    return lefts, rights, sims


def nlj_rows(const float[:, ::1] left, long i0, long i1,
             const float[:, ::1] right, float theta, float band):
    """Row-at-a-time join over left rows [i0, i1).

    Returns [(outer_offsets, inner_offsets, sims)] chunks; similarities
    are canonical.  The row loop runs without the GIL, surfacing only
    when the hit buffer fills.
    """
    cdef long ns = right.shape[0]
    cdef long dim = left.shape[1]
    cdef long k, nxt
    cdef long cap
    chunks = []
    if ns == 0 or i0 >= i1:
        return chunks
    cap = 4 * ns if 4 * ns > 32768 else 32768
    out_i = np.empty(cap, dtype=np.uint64)
    out_j = np.empty(cap, dtype=np.uint64)
    out_s = np.empty(cap, dtype=np.float32)
    cdef uint64_t[::1] iv = out_i
    cdef uint64_t[::1] jv = out_j
    cdef float[::1] sv = out_s
    cdef long row = i0
    while row < i1:
        with nogil:
            k = sj_nlj_rows(&left[0, 0], row, i1, &right[0, 0], ns, dim,
                            theta, band, &iv[0], &jv[0], &sv[0], cap, &nxt)
        if k > 0:
            chunks.append((out_i[:k].copy(), out_j[:k].copy(),
                           out_s[:k].copy()))
        if nxt == row:
            raise MemoryError("hit buffer smaller than one row")
        row = nxt
    return chunks
