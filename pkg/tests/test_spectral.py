import warnings

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.stats import unitary_group

from conftest import random_hermitian
from locality_lab import models as md
from locality_lab.errors import CapacityError, DomainError, UnsupportedError
from locality_lab.operators import SZ, LocalOperator, embed, translation_operator
from locality_lab.spectral import (EigenCache, canonical_ground_basis, diagonalize,
                                   ground_projector, lanczos_lowest, positive_energy_part,
                                   project_to_ground_space, step_theta)


def test_lanczos_matches_dense(rng):
    h = random_hermitian(rng, 200)
    vals, vecs, res = lanczos_lowest(sp.csr_matrix(h), 4, rtol=1e-10)
    ref = np.linalg.eigvalsh(h)[:4]
    assert np.allclose(vals, ref, atol=1e-8)
    assert np.allclose(vecs.conj().T @ vecs, np.eye(4), atol=1e-10)
    assert np.all(res <= 1e-10 * np.abs(ref).max() * 10)


def test_lanczos_resolves_exact_degeneracy():
    h = md.build_toric_code(2, 2).matrix("sparse")
    vals, vecs, _ = lanczos_lowest(h, 5, rtol=1e-10)
    assert np.allclose(vals[:4], -8.0, atol=1e-8)
    assert vals[4] == pytest.approx(-4.0, abs=1e-8)


def test_sparse_path_agrees_with_dense():
    h = md.build_tfim(10, 1.0, 1.5)
    dense = diagonalize(h, cache=None)
    sparse = diagonalize(h, k=3, method="sparse", cache=None)
    assert not sparse.full
    assert sparse.e0 == pytest.approx(dense.e0, abs=1e-9)
    assert sparse.gap == pytest.approx(dense.gap, abs=1e-8)
    ov = abs(np.vdot(sparse.ground_states[:, 0], dense.ground_states[:, 0]))
    assert ov == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(UnsupportedError):
        positive_energy_part(sparse, np.eye(h.dim))


def test_sparse_path_grows_k_for_degeneracy():
    sd = diagonalize(md.build_toric_code(2, 2), k=2, method="sparse", cache=None)
    assert sd.k == 4
    assert sd.gap == pytest.approx(4.0, abs=1e-7)


def test_diagonalize_validation():
    with pytest.raises(DomainError):
        diagonalize(md.build_tfim(4), k=1)
    with pytest.raises(CapacityError):
        diagonalize(md.build_tfim(13), method="dense")


def test_n_ground_override():
    h = md.build_tfim(6, 1.0, 0.2)
    assert diagonalize(h, cache=None).k == 1  # finite-size splitting
    sd = diagonalize(h, n_ground=2, cache=None)
    assert sd.k == 2
    assert sd.gap > 0.1


def test_cache_round_trip(tmp_path, monkeypatch):
    monkeypatch.setenv("LOCALITY_LAB_CACHE", str(tmp_path))
    h = md.build_tfim(6, 1.0, 1.3)
    a = diagonalize(h)
    entries = list(tmp_path.iterdir())
    assert len(entries) == 1
    assert (entries[0] / "manifest.json").exists()
    b = diagonalize(h)
    assert np.array_equal(a.energies, b.energies)
    assert np.array_equal(a.states, b.states)
    cache = EigenCache(tmp_path)
    assert cache.load("missing") is None


def test_ground_projection_deviation():
    sd = diagonalize(md.build_toric_code(2, 2), cache=None)
    ident = project_to_ground_space(sd, np.eye(sd.dim))
    dev, z = ident.deviation()
    assert dev < 1e-12 and z == pytest.approx(1.0)
    with pytest.raises(DomainError):
        project_to_ground_space(sd, np.eye(4))
    p = ground_projector(sd)
    assert np.allclose(p @ p, p)
    assert np.trace(p).real == pytest.approx(4)


def test_step_theta():
    assert np.array_equal(step_theta([-1, -1e-12, 0, 1e-12, 1], 1e-9), [0, 0.5, 0.5, 0.5, 1])


def test_positive_energy_part():
    h = md.build_tfim(6, 1.0, 1.5)
    sd = diagonalize(h, cache=None)
    b = embed(LocalOperator((2,), 2 * SZ), 6)
    bp = positive_energy_part(sd, b)
    bm = bp.conj().T
    # B+ + (B+)^dagger = B for Hermitian B (theta(x) + theta(-x) = 1)
    assert np.allclose(bp + bm, b, atol=1e-12)
    # B+ only raises energy: <i|B+|j> = 0 for E_i < E_j
    be = sd.to_energy_basis(bp)
    e = sd.energies
    assert np.abs(be[e[:, None] < e[None, :] - 1e-9]).max() < 1e-12
    psi = sd.ground_states[:, 0]
    p0 = np.outer(psi, psi.conj())
    ref = (np.eye(sd.dim) - p0) @ b @ psi + 0.5 * p0 @ b @ psi
    assert np.allclose(bp @ psi, ref, atol=1e-12)


def test_canonical_basis_is_rotation_invariant():
    h = md.build_majumdar_ghosh(8)
    sd = diagonalize(h, cache=None)
    t = translation_operator(8)
    ref = canonical_ground_basis(sd, {"T": t})
    u = unitary_group.rvs(2, random_state=5)
    rotated = sd.states.astype(complex).copy()
    rotated[:, :2] = sd.ground_states @ u
    from dataclasses import replace
    other = canonical_ground_basis(replace(sd, states=rotated), {"T": t})
    assert np.allclose(ref.ground_states, other.ground_states, atol=1e-10)
    assert np.allclose(sorted(ref.labels["T"].real), [-1, 1], atol=1e-10)


def test_canonical_basis_warns_when_unresolved():
    sd = diagonalize(md.build_toric_code(2, 2), cache=None)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        canonical_ground_basis(sd, {"I": sp.identity(sd.dim, format="csr")})
    assert any("do not fully resolve" in str(w.message) for w in rec)
