import numpy as np
import pytest
import scipy.linalg as la
from hypothesis import given, settings, strategies as st
from scipy.stats import unitary_group

from locality_lab import lattice as lt
from locality_lab import models as md
from locality_lab.errors import DomainError
from locality_lab.operators import PAULI, SZ, LocalOperator, embed, translation_operator
from locality_lab.protocols import (correlation_decay_check, correlation_scan, flux_flow_experiment,
                                    flux_insertion, goldstone_check, lsm_size_scan,
                                    lsm_twist_state, pauli_family, stability_bound_check,
                                    string_operator_signature, topo_order_metric,
                                    topo_order_under_evolution)
from locality_lab.protocols import correlation as corr
from locality_lab.protocols import flux as fx
from locality_lab.protocols import lsm
from locality_lab.protocols import topo
from locality_lab.spectral import diagonalize


@pytest.fixture(scope="module")
def heis6():
    h = md.build_heisenberg_ring(6)
    return h, diagonalize(h, cache=None)


@pytest.fixture(scope="module")
def toric():
    h = md.build_toric_code(2, 2)
    return h, diagonalize(h, cache=None)


# ---------------------------------------------------------------- lsm

def test_twist_matches_diagonal_phases():
    n = 4
    h = md.build_heisenberg_ring(n)
    rng = np.random.default_rng(0)
    psi = rng.standard_normal(2 ** n) + 1j * rng.standard_normal(2 ** n)
    # basis digit 0 is spin up, which carries charge 1
    bits = (np.arange(2 ** n)[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    charge = 1 - bits
    phase = np.exp(2j * np.pi * (charge * (np.arange(n) + 1)).sum(axis=1) / n)
    assert np.allclose(lsm.twist(h, psi), phase * psi)


def test_lsm_heisenberg(heis6):
    h, sd = heis6
    psi, rep = lsm_twist_state(h, sd)
    assert rep["rho"] == pytest.approx(0.5)
    assert rep["hypothesis_met"] and rep["passed"]
    assert abs(rep["t_eigenvalue"] + rep["z"]) <= 1e-8
    assert rep["overlap"] <= 1e-8
    assert 0 < rep["energy_excess"] < sd.gap * 3
    assert np.linalg.norm(psi) == pytest.approx(1.0)


def test_charge_twist_algebra(heis6):
    """exp(2 pi i Q / N) psi0 = exp(2 pi i rho) psi0 for a Q eigenvector."""
    h, sd = heis6
    psi0 = sd.ground_states[:, 0]
    q = h.charge_operator()
    rho = np.vdot(psi0, q @ psi0).real / h.n
    u = la.expm(2j * np.pi * q / h.n)
    assert np.allclose(u @ psi0, np.exp(2j * np.pi * rho) * psi0, atol=1e-10)


def test_lsm_integer_filling_skips_orthogonality():
    h = md.build_heisenberg_ring(4)
    up = np.zeros(16)
    up[0] = 1.0  # all up: Q = N, rho = 1
    _, rep = lsm_twist_state(h, psi0=up)
    assert not rep["hypothesis_met"]
    assert "orthogonal" not in rep["checks"]
    assert rep["overlap"] == pytest.approx(1.0)
    assert rep["energy_excess"] == pytest.approx(0.0, abs=1e-12)


def test_lsm_errors(heis6):
    h, _ = heis6
    with pytest.raises(DomainError):
        lsm_twist_state(md.build_tfim(4, periodic=True))
    with pytest.raises(DomainError):
        lsm_twist_state(md.build_xxz_chain(4))
    rng = np.random.default_rng(1)
    with pytest.raises(DomainError, match="eigenvector"):
        lsm_twist_state(h, psi0=rng.standard_normal(h.dim))


def test_lsm_size_scan_term_exponent():
    scan = lsm_size_scan(md.build_heisenberg_ring, [6, 8, 10])
    assert 1.7 <= scan["term_exponent"] <= 2.3
    assert scan["spread"] < 0.2
    assert all(r["passed"] for r in scan["rows"])


def test_mg_exercise_momenta():
    r = lsm.mg_exercise(md.build_majumdar_ghosh(8))
    assert r["ground_degeneracy"] == 2
    assert r["t_sym"] == pytest.approx(1.0, abs=1e-8)
    assert r["t_anti"] == pytest.approx(-1.0, abs=1e-8)
    assert r["t_lsm"] == pytest.approx(-1.0, abs=1e-8)
    assert 0 <= r["distance"] <= np.sqrt(2)
    with pytest.raises(DomainError):
        lsm.mg_exercise(md.build_majumdar_ghosh(8, 0.3))


# ---------------------------------------------------------------- flux

def test_half_region_and_assignment():
    h = md.build_heisenberg_ring(8)
    assert fx.half_region(h) == (1, 2, 3, 4)
    assign = fx.boundary_assignment(h)
    labels = {h.terms[k].label: v for k, v in assign.items() if v}
    assert labels == {"ss0,1": 1, "ss4,5": 2}


def test_flux_zero_is_identity(heis6):
    h, _ = heis6
    assert np.allclose(flux_insertion(h, 0.0, 0.0).matrix(), h.matrix())


@settings(max_examples=15)
@given(st.floats(0, 2 * np.pi))
def test_flux_spectrum_invariant(theta):
    h = md.build_heisenberg_ring(6)
    e0 = np.linalg.eigvalsh(h.matrix())
    e = np.linalg.eigvalsh(flux_insertion(h, theta, -theta).matrix())
    assert np.allclose(e, e0, atol=1e-9)


def test_flux_is_gauge_equivalent():
    """H(theta, -theta) = U H U^dagger with U = exp(i theta Q_X) for a ring."""
    h = md.build_heisenberg_ring(6)
    th = 0.77
    qx = h.charge_operator("dense", fx.half_region(h))
    u = la.expm(1j * th * qx)
    assert np.allclose(flux_insertion(h, th, -th).matrix(), u @ h.matrix() @ u.conj().T, atol=1e-12)


def test_flux_periodicity_and_derivative():
    h = md.build_heisenberg_ring(6)
    assert np.allclose(flux_insertion(h, 2 * np.pi, -2 * np.pi).matrix(), h.matrix(), atol=1e-12)
    th, eps = 0.4, 1e-6
    for which, args in ((1, lambda x: (x, 0.0)), (2, lambda x: (0.0, x))):
        fd = (flux_insertion(h, *args(th + eps)).matrix()
              - flux_insertion(h, *args(th - eps)).matrix()) / (2 * eps)
        exact = sum(embed(t, h.n) for t in fx._twisted_terms(h, *args(th), derivative=which))
        assert np.allclose(exact, fd, atol=1e-8)


def test_flux_needs_charge():
    with pytest.raises(DomainError):
        flux_insertion(md.build_tfim(4, periodic=True), 0.1, 0.1)


def test_flux_flow_phase(filter_F):
    r = flux_flow_experiment(md.build_heisenberg_ring(6), filter_F, n_steps=16)
    assert r["ground_degeneracy"] == 1
    assert r["w_amplitude"] > 0.99
    assert r["phase_error"] < 1e-6


# ---------------------------------------------------------------- topological order

def test_pauli_family_counts():
    lat = lt.chain_open(4)
    ops, trunc, total = pauli_family(lat, 1, "single_site")
    assert total == 12 and not trunc
    ops, trunc, total = pauli_family(lat, 1, "connected")
    assert total == 4 * 3 + 3 * 9
    assert len(topo.connected_sets(lat, 2)) == 4 + 3 + 2
    ops_a, trunc, total = pauli_family(lt.chain_open(8), 3, cap=50, seed=3)
    ops_b, _, _ = pauli_family(lt.chain_open(8), 3, cap=50, seed=3)
    assert trunc and len(ops_a) == 50 and total > 50
    assert [o.label for o in ops_a] == [o.label for o in ops_b]
    with pytest.raises(DomainError):
        pauli_family(lat, 1, "nonsense")


def test_toric_single_site_order(toric):
    h, sd = toric
    rep = topo_order_metric(sd, 1, h.lattice, "single_site")
    assert rep.epsilon <= 1e-9
    assert rep.family_size == 3 * h.n


def test_toric_connected_family_sees_logical_loop(toric):
    h, sd = toric
    rep = topo_order_metric(sd, 1, h.lattice, "connected")
    # on the 2x2 torus two adjacent edges already close a noncontractible loop
    assert rep.epsilon == pytest.approx(1.0)


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_topo_metric_basis_invariant(seed):
    h = md.build_toric_code(2, 2)
    sd = diagonalize(h, cache=None)
    u = unitary_group.rvs(4, random_state=seed)
    rotated = sd.ground_states @ u
    for kind in ("single_site", "connected"):
        a = topo_order_metric(sd.ground_states, 1, h.lattice, kind)
        b = topo_order_metric(rotated, 1, h.lattice, kind)
        assert abs(a.epsilon - b.epsilon) < 1e-9


def test_ferromagnet_not_topological():
    h = md.build_tfim(8, 1.0, 0.2)
    sd = diagonalize(h, n_ground=2, cache=None)
    family = [LocalOperator((i,), SZ, f"Sz{i}") for i in range(8)]
    rep = topo_order_metric(sd, 0, h.lattice, family=family)
    assert rep.epsilon >= 0.3


def test_product_pair_deviation_half():
    n = 4
    g = topo.product_pair(n)
    family = [LocalOperator((i,), SZ, f"Sz{i}") for i in range(n)]
    rep = topo_order_metric(g, 2, lt.chain_open(n), family=family)
    assert rep.epsilon == pytest.approx(0.5)


def test_evolution_t0_identical(toric):
    h, sd = toric
    before = topo_order_metric(sd.ground_states.astype(complex), 0, h.lattice, "single_site")
    after = topo_order_under_evolution(sd.ground_states, h, 0.0, 1, 1, kind="single_site")
    assert after.epsilon == before.epsilon
    assert [r[2] for r in after.per_operator] == [r[2] for r in before.per_operator]
    with pytest.raises(DomainError):
        topo_order_under_evolution(sd.ground_states, h, 0.1, 1, 2)


def test_product_pair_evolution_oracle():
    """Evolved deviation against an expm-based recomputation."""
    n = 4
    h = md.build_tfim(n, 1.0, 0.3)
    g = topo.product_pair(n)
    rep = topo_order_under_evolution(g, h, 0.6, 1, 1, kind="single_site")
    u = la.expm(-1j * 0.6 * h.matrix())
    g1 = u @ g
    worst = 0.0
    for i in range(n):
        for p in "XYZ":
            m = g1.conj().T @ embed(LocalOperator((i,), PAULI[p]), n) @ g1
            worst = max(worst, np.linalg.norm(m - np.trace(m) / 2 * np.eye(2), 2))
    assert rep.epsilon == pytest.approx(worst, abs=1e-10)
    assert rep.epsilon > 0.3  # still no topological order
    assert rep.extra["passed"]


def test_toric_weak_field_evolution():
    h0 = md.build_toric_code(2, 2)
    g = diagonalize(h0, cache=None).ground_states
    h = h0.plus(md.single_site_field(h0.lattice, md.SX, 0.1))
    rep = topo_order_under_evolution(g, h, 0.5, 1, 1, kind="single_site")
    assert rep.epsilon < 0.05
    assert rep.extra["passed"]


def test_string_signature(toric):
    h, sd = toric
    r = string_operator_signature(h, sd)
    assert r["passed"]
    assert r["E"] == pytest.approx(1) and r["M"] == pytest.approx(1)
    assert r["E1ME2"] == pytest.approx(-1)
    with pytest.raises(DomainError):
        string_operator_signature(md.build_tfim(4), diagonalize(md.build_tfim(4)))


def test_toric_loops_algebra():
    loops = topo.toric_loops(2, 2)
    n = 8
    e1, m = embed(loops["E1"], n), embed(loops["M"], n)
    e, wy = embed(loops["E"], n), embed(loops["Wy"], n)
    assert np.allclose(e1 @ m, -m @ e1)
    assert np.allclose(e @ m, m @ e)
    assert np.allclose(e @ wy, wy @ e)
    assert np.allclose(embed(loops["E2"], n) @ e1, e)


# ---------------------------------------------------------------- goldstone

def test_goldstone_xxz():
    h = md.build_xxz_chain(8, delta=2.0)
    r = goldstone_check(h, site_x=1, separations=[1, 2, 4, 6])
    assert r["vector_error"] < 1e-14
    assert all(err <= max(bound, 1e-12) for _, err, bound in r["derivative_rows"])
    vals = [v for _, v in r["rows"]]
    assert vals[0] > vals[-1]


def test_goldstone_rotation_identity():
    from locality_lab.protocols.goldstone import rotation, vector_check
    h = md.build_xxz_chain(4)
    assert all(m is None for m in rotation(h, {0, 1}, 0.0))
    assert vector_check(h, LocalOperator((0,), md.SP), -1) < 1e-15
    assert vector_check(h, LocalOperator((0,), md.SP), +1) > 0.5
    with pytest.raises(DomainError):
        goldstone_check(h, phi=md.SP, phibar=md.SP)
    with pytest.raises(DomainError):
        goldstone_check(md.build_tfim(4))


# ---------------------------------------------------------------- stability

def test_stability_tfim():
    h = md.build_tfim(6, 1.0, 2.0)
    v = md.single_site_field(h.lattice, SZ, 1.0)
    r = stability_bound_check(h, v, n_points=11)
    assert r["passed"]
    assert r["v_norm"] == pytest.approx(3.0)
    assert r["s0"] == pytest.approx(r["gap0"] / 12)
    s, g, lo = r["rows"][0]
    assert s == 0 and g == pytest.approx(lo)


def test_stability_zero_perturbation():
    h = md.build_tfim(5, 1.0, 2.0)
    r = stability_bound_check(h, [], s_grid=[0.0, 0.5, 1.0])
    assert r["v_norm"] == 0 and np.isinf(r["s0"])
    gaps = [row[1] for row in r["rows"]]
    assert np.allclose(gaps, gaps[0])


# ---------------------------------------------------------------- correlations

@pytest.fixture(scope="module")
def tfim8():
    h = md.build_tfim(8, 1.0, 2.0)
    return h, diagonalize(h, cache=None)


def test_correlation_scan(tfim8):
    h, sd = tfim8
    rep = correlation_scan(h, 1, [2, 3, 4, 5], sd=sd)
    assert rep.monotone and rep.passed
    assert rep.pairs[0][3] == pytest.approx(rep.pairs[0][4])
    z = PAULI["Z"]
    psi = sd.ground_states[:, 0]
    a, b = embed(LocalOperator((1,), z), 8), embed(LocalOperator((4,), z), 8)
    ref = np.vdot(psi, a @ b @ psi) - np.vdot(psi, a @ psi) * np.vdot(psi, b @ psi)
    assert rep.pairs[1][3] == pytest.approx(abs(ref), abs=1e-12)


def test_correlation_errors(tfim8):
    h, sd = tfim8
    a = LocalOperator((1,), PAULI["Z"])
    with pytest.raises(DomainError):
        correlation_decay_check(h, a, a, sd=sd)
    with pytest.raises(DomainError):
        correlation_decay_check(h, a, LocalOperator((3,), PAULI["Z"]), sd=sd, variant="other")
    ferro = md.build_tfim(6, 1.0, 0.2)
    sdf = diagonalize(ferro, n_ground=2, cache=None)
    with pytest.raises(DomainError):
        correlation_decay_check(ferro, a, LocalOperator((4,), PAULI["Z"]), sd=sdf)
    out = correlation_decay_check(ferro, a, LocalOperator((4,), PAULI["X"]), sd=sdf,
                                  variant="projector")
    assert "window_error" not in out


def test_bound_shape_formula(tfim8):
    h, sd = tfim8
    v = 4 * md.decay_constants(h).s
    ref = np.exp(-3 * sd.gap / (2 * v)) + np.exp(-3.0)
    assert corr.bound_shape(h, (1,), (4,), sd.gap) == pytest.approx(ref)


def test_window_error_decreases_with_q(tfim8):
    h, sd = tfim8
    b = embed(LocalOperator((6,), PAULI["Z"]), 8)
    psi = sd.ground_states[:, 0]
    b = b - np.vdot(psi, b @ psi) * np.eye(b.shape[0])
    errs = [corr.window_error(sd, b, q) for q in (1.0, 4.0, 9.0, 16.0)]
    assert all(y < x for x, y in zip(errs, errs[1:]))
    ws = corr.window_scaling(h, LocalOperator((6,), PAULI["Z"]), sd=sd)
    assert ws["passed"]


def test_light_cone_split_small():
    h = md.build_tfim(6, 1.0, 2.0)
    r = corr.light_cone_split(h, LocalOperator((0,), PAULI["Z"]), LocalOperator((4,), PAULI["Z"]),
                              4.0, nodes=8)
    assert r["passed"]
    assert r["inner"] >= 0 and r["outer"] >= 0
