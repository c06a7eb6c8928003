import numpy as np
import pytest

from locality_lab import lattice as lt
from locality_lab import models as md
from locality_lab.errors import CapacityError, DomainError
from locality_lab.operators import (PAULI, SX, SZ, LocalOperator, embed, embed_sum, kron_all,
                                    translation_operator)
from locality_lab.spectral import diagonalize, project_to_ground_space


def test_tfim_structure():
    h = md.build_tfim(6, j=1.0, b=2.0)
    assert len(h.terms) == 5 + 6
    hp = md.build_tfim(6, periodic=True)
    assert len(hp.terms) == 6 + 6
    assert h.is_real
    with pytest.raises(DomainError):
        md.build_tfim(1)


def test_tfim_limits():
    # J = 0: decoupled spins in a field B S^x, E0 = -nB/2 and gap B
    sd = diagonalize(md.build_tfim(5, j=0.0, b=1.2), cache=None)
    assert sd.e0 == pytest.approx(-5 * 0.6)
    assert sd.gap == pytest.approx(1.2)
    # B = 0: two ferromagnetic states at -J(n-1)/4
    sd = diagonalize(md.build_tfim(5, j=1.0, b=0.0), cache=None)
    assert sd.k == 2
    assert sd.e0 == pytest.approx(-1.0)


def test_tfim_large_field_unique_gap():
    sd = diagonalize(md.build_tfim(8, j=1.0, b=2.0), cache=None)
    assert sd.k == 1
    # gap of the free-fermion chain lies near B - J/2 for B >> J
    assert 1.0 < sd.gap < 2.0


def test_decay_constants_tfim():
    h = md.build_tfim(8, j=1.0, b=1.0)
    dc = md.decay_constants(h, mu=1.0)
    # interior site: two bonds of norm 1/4 (|X| = 2, diam 1) and a field of norm 1/2
    assert dc.s == pytest.approx(np.e + 0.5)
    assert dc.per_site[0] == pytest.approx(np.e / 2 + 0.5)
    assert md.decay_constants(h, 2.0).s == pytest.approx(np.e ** 2 + 0.5)
    with pytest.raises(DomainError):
        md.decay_constants(h, 0.0)


def test_decay_constants_groups_terms():
    lat = lt.chain_open(2)
    terms = [LocalOperator((0, 1), np.kron(SZ, SZ)), LocalOperator((1, 0), np.kron(SZ, SZ))]
    h = md.HamiltonianSpec(lat, terms)
    # both terms share one support; their sum has norm 1/2
    assert md.decay_constants(h).s == pytest.approx(0.5 * 2 * np.e)


def test_heisenberg_ring():
    h = md.build_heisenberg_ring(4)
    assert diagonalize(h, cache=None).e0 == pytest.approx(-2.0)
    rep = h.validate_charge(q_max=1)
    assert rep["ok"] and rep["integer_spectrum"] and rep["q_max"] == 1.0
    for bad in (3, 2):
        with pytest.raises(DomainError):
            md.build_heisenberg_ring(bad)


def test_heisenberg_translation_invariant():
    h = md.build_heisenberg_ring(6)
    t = translation_operator(6)
    hm = h.matrix("sparse")
    assert abs(t @ hm @ t.T - hm).max() < 1e-14


def test_majumdar_ghosh_dimers():
    n = 8
    h = md.build_majumdar_ghosh(n)
    sd = diagonalize(h, cache=None)
    assert sd.k == 2
    assert sd.e0 == pytest.approx(-3 * n / 8)
    hm = h.matrix()
    for off in (0, 1):
        d = md.dimer_state(n, off)
        assert np.linalg.norm(d) == pytest.approx(1.0)
        assert np.allclose(hm @ d, sd.e0 * d, atol=1e-12)
    # away from j2 = 1/2 the two dimer states split
    sd2 = diagonalize(md.build_majumdar_ghosh(n, 0.45), cache=None)
    assert sd2.k == 1


def test_dimer_state_singlet():
    d = md.dimer_state(2)
    assert np.allclose(d, [0, 1 / np.sqrt(2), -1 / np.sqrt(2), 0])
    with pytest.raises(DomainError):
        md.dimer_state(3)


def test_xxz_charge_and_ising_limit():
    h = md.build_xxz_chain(6, delta=2.0)
    assert h.validate_charge()["ok"]
    sd = diagonalize(md.build_xxz_chain(4, delta=1.0, jxy=0.0), cache=None)
    assert sd.e0 == pytest.approx(-3 / 4)  # Neel states
    assert sd.k == 2


def test_toric_code():
    h = md.build_toric_code(2, 2)
    sd = diagonalize(h, cache=None)
    assert sd.k == 4
    assert sd.e0 == pytest.approx(-8.0)
    assert sd.gap == pytest.approx(4.0)
    stars, plaqs = md.toric_stabilizers(2, 2)
    n = h.n
    prod_a = np.eye(2 ** n)
    for s in stars:
        prod_a = prod_a @ embed(s, n)
    assert np.allclose(prod_a, np.eye(2 ** n))
    for s in stars:
        for p in plaqs:
            a, b = embed(s, n, "sparse"), embed(p, n, "sparse")
            assert abs(a @ b - b @ a).max() == 0
    with pytest.raises(CapacityError):
        md.build_toric_code(3, 4)


def test_toric_star_touches_four_edges():
    star = md.toric_star(3, 3, 1, 1)
    assert len(set(star)) == 4
    plaq = md.toric_plaquette(3, 3, 1, 1)
    assert len(set(star) & set(plaq)) == 2


def test_single_site():
    h = md.build_single_site(np.diag([0.0, 2.0]))
    sd = diagonalize(h, cache=None)
    assert sd.gap == pytest.approx(2.0)
    with pytest.raises(DomainError):
        md.build_single_site(np.array([[0, 1], [0, 0]]))


def test_term_file(tmp_path):
    p = tmp_path / "terms.txt"
    p.write_text("# ising pair\n0 1 : ZZ : -1\n0 : Sx : 0.5\n1 : Sx : 0.5\n")
    h = md.read_term_file(p, lt.chain_open(2))
    ref = -np.kron(PAULI["Z"], PAULI["Z"]) + 0.5 * (np.kron(SX, np.eye(2)) + np.kron(np.eye(2), SX))
    assert np.allclose(h.matrix(), ref)
    p.write_text("0 1 : ZZ\n")
    with pytest.raises(DomainError):
        md.read_term_file(p, lt.chain_open(2))
    with pytest.raises(DomainError):
        md.parse_matrix_name("ZQ", 2)
    with pytest.raises(DomainError):
        md.parse_matrix_name("Z", 2)
    assert np.allclose(md.parse_matrix_name("Sx*Sz", 2), np.kron(SX, SZ))


def test_fingerprint_and_composition():
    a, b = md.build_tfim(6, 1.0, 1.0), md.build_tfim(6, 1.0, 1.0)
    assert a.fingerprint() == b.fingerprint()
    assert a.fingerprint() != md.build_tfim(6, 1.0, 1.1).fingerprint()
    v = md.single_site_field(a.lattice, SZ, 1.0, "v")
    c = a.plus(v, scale=0.3)
    assert np.allclose(c.matrix(), a.matrix() + 0.3 * embed_sum(v, 6))
    with pytest.raises(ValueError):
        a.matrix()[0, 0] = 1.0  # cached matrix is read-only


def test_charge_missing():
    with pytest.raises(DomainError):
        md.build_tfim(4).charge_operator()


def test_avoided_crossing_toy():
    """Longitudinal field inside the ferromagnetic ground doublet of the TFIM.

    Off-diagonal element in the symmetric/antisymmetric basis against |H| m N,
    with m the exact infinite-chain magnetization (1/2)(1 - g^2)^(1/8), g = 2B/J.
    """
    n, j, b, hf = 8, 1.0, 0.2, 0.05
    h = md.build_tfim(n, j, b)
    sd = diagonalize(h, n_ground=2, cache=None)
    field = embed_sum(md.single_site_field(h.lattice, SZ, hf), n)
    m2 = project_to_ground_space(sd, field).matrix
    g = 2 * b / j
    m_inf = 0.5 * (1 - g ** 2) ** 0.125
    assert abs(m2[0, 1]) == pytest.approx(abs(hf) * m_inf * n, rel=0.05)
    assert abs(m2[0, 0]) < 1e-9 and abs(m2[1, 1]) < 1e-9
    # the 2x2 block [[t, HmN], [HmN, -t]] reproduces the two lowest levels to first order
    t = 0.5 * (sd.energies[1] - sd.energies[0])
    block = np.array([[-t, m2[0, 1]], [m2[1, 0], t]])
    full = np.linalg.eigvalsh(h.matrix() + field)[:2] - 0.5 * (sd.energies[0] + sd.energies[1])
    assert np.allclose(np.linalg.eigvalsh(block), full, atol=5e-3)


def test_spin_op():
    op = md.spin_op("Sz", 3)
    assert op.support == (3,) and np.allclose(op.matrix, SZ)
    assert np.allclose(md.spin_op("Sp", 0).matrix, kron_all([md.SP]))
