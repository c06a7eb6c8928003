# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see _kernels_py for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

ctypedef fused scalar_t:
    double
    double complex


cdef cnp.int64_t[:] _offsets(int n, int d, cnp.int64_t[:] sites):
    cdef Py_ssize_t m = sites.shape[0], size = 1, i, j, k, idx
    cdef cnp.int64_t stride, dig
    for i in range(m):
        size *= d
    out = np.zeros(size, dtype=np.int64)
    cdef cnp.int64_t[:] o = out
    for idx in range(size):
        k = idx
        for j in range(m - 1, -1, -1):
            dig = k % d
            k //= d
            stride = 1
            for i in range(n - 1 - sites[j]):
                stride *= d
            o[idx] += dig * stride
    return o


def embed_coo(int n, int d, support, scalar_t[:, :] mat):
    sup = np.asarray(support, dtype=np.int64)
    comp = np.setdiff1d(np.arange(n, dtype=np.int64), sup)
    cdef cnp.int64_t[:] off = _offsets(n, d, sup)
    cdef cnp.int64_t[:] base = _offsets(n, d, comp)
    cdef Py_ssize_t dl = mat.shape[0], nb = base.shape[0]
    cdef Py_ssize_t a, b, r, p, nnz = 0
    for a in range(dl):
        for b in range(dl):
            if mat[a, b] != 0:
                nnz += 1
    ia = np.empty(nnz, dtype=np.int64)
    ib = np.empty(nnz, dtype=np.int64)
    cdef cnp.int64_t[:] va = ia, vb = ib
    p = 0
    for a in range(dl):
        for b in range(dl):
            if mat[a, b] != 0:
                va[p] = a
                vb[p] = b
                p += 1
    rows = np.empty(nb * nnz, dtype=np.int64)
    cols = np.empty(nb * nnz, dtype=np.int64)
    vals = np.empty(nb * nnz, dtype=np.asarray(mat).dtype)
    cdef cnp.int64_t[:] rv = rows, cv = cols
    cdef scalar_t[:] vv = vals
    cdef cnp.int64_t bs
    for r in range(nb):
        bs = base[r]
        for p in range(nnz):
            rv[r * nnz + p] = bs + off[va[p]]
            cv[r * nnz + p] = bs + off[vb[p]]
            vv[r * nnz + p] = mat[va[p], vb[p]]
    return rows, cols, vals


def fourier_sums(t, omega, coeff, bint odd):
    cdef double[:] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef double[:] wv = np.ascontiguousarray(omega, dtype=np.float64)
    cdef double[:] cv = np.ascontiguousarray(coeff, dtype=np.float64)
    out = np.zeros(tv.shape[0])
    cdef double[:] ov = out
    cdef Py_ssize_t j, k
    cdef double acc, tj
    for j in range(tv.shape[0]):
        tj = tv[j]
        acc = 0.0
        if odd:
            for k in range(wv.shape[0]):
                acc += cv[k] * sin(wv[k] * tj)
        else:
            for k in range(wv.shape[0]):
                acc += cv[k] * cos(wv[k] * tj)
        ov[j] = acc
    return out
