"""Compiled and pure-Python kernels must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from locality_lab import _kernels_py, kernels

try:
    from locality_lab import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

needs_compiled = pytest.mark.skipif(_compiled is None, reason="compiled extension not built")


def _coo_dense(n, d, rows, cols, vals):
    m = np.zeros((d ** n, d ** n), dtype=np.result_type(vals, float))
    np.add.at(m, (rows, cols), vals)
    return m


@needs_compiled
@given(st.integers(1, 6), st.data())
def test_embed_coo_backends_agree(n, data):
    k = data.draw(st.integers(1, min(n, 3)))
    support = data.draw(st.permutations(range(n)))[:k]
    seed = data.draw(st.integers(0, 2 ** 31 - 1))
    rng = np.random.default_rng(seed)
    mat = rng.standard_normal((2 ** k, 2 ** k)) + 1j * rng.standard_normal((2 ** k, 2 ** k))
    mat[rng.random(mat.shape) < 0.3] = 0
    sup = np.asarray(support, dtype=np.int64)
    a = _kernels_py.embed_coo(n, 2, sup, np.ascontiguousarray(mat))
    b = _compiled.embed_coo(n, 2, sup, np.ascontiguousarray(mat))
    assert np.allclose(_coo_dense(n, 2, *a), _coo_dense(n, 2, *b))


@needs_compiled
def test_embed_coo_real_and_qutrit():
    rng = np.random.default_rng(0)
    mat = rng.standard_normal((9, 9))
    sup = np.array([2, 0], dtype=np.int64)
    a = _kernels_py.embed_coo(3, 3, sup, mat)
    b = _compiled.embed_coo(3, 3, sup, mat)
    assert np.allclose(_coo_dense(3, 3, *a), _coo_dense(3, 3, *b))


@needs_compiled
@pytest.mark.parametrize("odd", [False, True])
def test_fourier_sums_backends_agree(odd):
    rng = np.random.default_rng(3)
    t = rng.uniform(-50, 50, 300)
    w = rng.uniform(0, 1, 200)
    c = rng.standard_normal(200)
    a = _kernels_py.fourier_sums(t, w, c, odd)
    b = _compiled.fourier_sums(t, w, c, odd)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)
    trig = np.sin if odd else np.cos
    assert np.allclose(a, trig(np.outer(t, w)) @ c)


def test_dispatch_reports_backend():
    assert kernels.BACKEND in ("cython", "python")
    if _compiled is not None and os.environ.get("LOCALITY_LAB_PURE_PYTHON", "") in ("", "0"):
        assert kernels.BACKEND == "cython"


def test_env_var_forces_fallback():
    env = dict(os.environ, LOCALITY_LAB_PURE_PYTHON="1")
    code = ("from locality_lab import kernels, models, spectral;"
            "h = models.build_tfim(6, 1.0, 1.5);"
            "print(kernels.BACKEND, repr(spectral.diagonalize(h, cache=None).gap))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    assert out[0] == "python"
    from locality_lab import models, spectral
    gap = spectral.diagonalize(models.build_tfim(6, 1.0, 1.5), cache=None).gap
    assert float(out[1]) == pytest.approx(gap, rel=1e-12)
