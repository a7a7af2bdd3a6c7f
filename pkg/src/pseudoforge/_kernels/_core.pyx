# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Mirrors _fallback.py operation for operation; arithmetic is ordered
identically so both backends return bit-identical arrays.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"


def distance_field(boundary):
    """Exact Euclidean distance of every pixel to the nearest True pixel."""
    b = np.ascontiguousarray(boundary, dtype=np.uint8)
    cdef const cnp.uint8_t[:, ::1] bm = b
    cdef Py_ssize_t h = bm.shape[0]
    cdef Py_ssize_t w = bm.shape[1]
    cdef cnp.int64_t inf = h + w

    d1_arr = np.empty((h, w), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] d1 = d1_arr
    cdef Py_ssize_t i, j, q, k
    cdef cnp.int64_t cand

    for j in range(w):
        d1[0, j] = 0 if bm[0, j] else inf
    for i in range(1, h):
        for j in range(w):
            if bm[i, j]:
                d1[i, j] = 0
            else:
                cand = d1[i - 1, j] + 1
                d1[i, j] = cand if cand < inf else inf
    for i in range(h - 2, -1, -1):
        for j in range(w):
            cand = d1[i + 1, j] + 1
            if cand < d1[i, j]:
                d1[i, j] = cand

    d2_arr = np.empty((h, w), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] d2 = d2_arr
    v_arr = np.zeros(w, dtype=np.int64)
    z_arr = np.zeros(w + 1, dtype=np.float64)
    fsq_arr = np.zeros(w, dtype=np.int64)
    cdef cnp.int64_t[::1] v = v_arr
    cdef cnp.float64_t[::1] z = z_arr
    cdef cnp.int64_t[::1] fsq = fsq_arr
    cdef cnp.int64_t fq, dj
    cdef double s
    cdef double pos_inf = float("inf")

    for i in range(h):
        for j in range(w):
            fsq[j] = d1[i, j] * d1[i, j]
        k = 0
        v[0] = 0
        z[0] = -pos_inf
        z[1] = pos_inf
        for q in range(1, w):
            fq = fsq[q] + q * q
            s = <double>(fq - fsq[v[k]] - v[k] * v[k]) / <double>(2 * (q - v[k]))
            while s <= z[k]:
                k -= 1
                s = <double>(fq - fsq[v[k]] - v[k] * v[k]) / <double>(2 * (q - v[k]))
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = pos_inf
        k = 0
        for j in range(w):
            while z[k + 1] < j:
                k += 1
            dj = j - v[k]
            d2[i, j] = dj * dj + fsq[v[k]]
    return np.sqrt(d2_arr.astype(np.float64))


def laplacian5(values):
    """5-point Laplacian with replicate padding at the image border."""
    p = np.ascontiguousarray(values, dtype=np.float64)
    cdef const cnp.float64_t[:, ::1] pv = p
    cdef Py_ssize_t h = pv.shape[0]
    cdef Py_ssize_t w = pv.shape[1]
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef cnp.float64_t[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, iu, id_, jl, jr

    for i in range(h):
        iu = i - 1 if i > 0 else 0
        id_ = i + 1 if i < h - 1 else h - 1
        for j in range(w):
            jl = j - 1 if j > 0 else 0
            jr = j + 1 if j < w - 1 else w - 1
            out[i, j] = (
                pv[iu, j] + pv[id_, j] + pv[i, jl] + pv[i, jr]
                - 4.0 * pv[i, j]
            )
    return out_arr


def rle_encode(bits):
    """Column-major run lengths, alternating and starting with background."""
    b = np.ascontiguousarray(bits, dtype=np.uint8)
    cdef const cnp.uint8_t[:, ::1] bm = b
    cdef Py_ssize_t h = bm.shape[0]
    cdef Py_ssize_t w = bm.shape[1]
    counts_arr = np.empty(h * w + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef Py_ssize_t i, j, n = 0
    cdef cnp.uint8_t cur = 0, val
    cdef cnp.int64_t run = 0

    for j in range(w):
        for i in range(h):
            val = 1 if bm[i, j] else 0
            if val == cur:
                run += 1
            else:
                counts[n] = run
                n += 1
                cur = val
                run = 1
    counts[n] = run
    n += 1
    return counts_arr[:n].copy()


def rle_decode(counts, height, width):
    """Inverse of rle_encode; counts must sum to height * width."""
    c = np.ascontiguousarray(counts, dtype=np.int64)
    cdef const cnp.int64_t[::1] cv = c
    cdef Py_ssize_t h = height
    cdef Py_ssize_t w = width
    out_arr = np.zeros((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    cdef Py_ssize_t n = cv.shape[0]
    cdef Py_ssize_t r, pos = 0
    cdef cnp.int64_t t
    cdef cnp.uint8_t val

    for r in range(n):
        val = 1 if r % 2 == 1 else 0
        if val:
            for t in range(cv[r]):
                out[(pos + t) % h, (pos + t) // h] = 1
        pos += cv[r]
    return out_arr.astype(bool)
