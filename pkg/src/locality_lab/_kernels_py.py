"""Pure numpy implementations of the hot kernels.

Used when the compiled extension is unavailable or when
``LOCALITY_LAB_PURE_PYTHON=1`` is set.
"""
import numpy as np


def _site_offsets(n, d, sites):
    """Full-basis index offsets of every configuration on ``sites``."""
    off = np.zeros(1, dtype=np.int64)
    for s in sites:
        stride = d ** (n - 1 - s)
        off = (off[:, None] + stride * np.arange(d, dtype=np.int64)[None, :]).ravel()
    return off


def embed_coo(n, d, support, mat):
    """COO triplets of ``mat`` on ``support`` tensored with identity elsewhere.

    Site 0 is the most significant digit of the basis index.
    """
    support = np.asarray(support, dtype=np.int64)
    mat = np.asarray(mat)
    comp = np.setdiff1d(np.arange(n, dtype=np.int64), support)
    off = _site_offsets(n, d, support)
    base = _site_offsets(n, d, comp)
    a, b = np.nonzero(mat)
    vals = mat[a, b]
    rows = (base[:, None] + off[a][None, :]).ravel()
    cols = (base[:, None] + off[b][None, :]).ravel()
    return rows, cols, np.tile(vals, base.size)


def fourier_sums(t, omega, coeff, odd):
    """Return sum_k coeff[k] * trig(omega[k] * t[j]) for every j.

    ``trig`` is sin when ``odd`` else cos.
    """
    t = np.ascontiguousarray(t, dtype=np.float64)
    omega = np.ascontiguousarray(omega, dtype=np.float64)
    coeff = np.ascontiguousarray(coeff, dtype=np.float64)
    out = np.empty(t.size)
    trig = np.sin if odd else np.cos
    chunk = max(1, 2 ** 22 // max(omega.size, 1))
    for i in range(0, t.size, chunk):
        out[i:i + chunk] = trig(np.outer(t[i:i + chunk], omega)) @ coeff
    return out
