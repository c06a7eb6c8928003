"""Twisted variational states on periodic chains with a U(1) charge."""
from __future__ import annotations

import numpy as np

from ..errors import DomainError
from ..models import HamiltonianSpec, dimer_state
from ..operators import embed, translation_operator
from ..spectral import SpectralData, canonical_ground_basis, diagonalize
from ._util import apply_site_unitaries, eigen_phase, require_periodic_chain, site_phases


def twist(h: HamiltonianSpec, psi):
    """prod_j exp(2 pi i (j+1)/N q_j) psi, with 0-based site j."""
    n = h.n
    angles = 2 * np.pi * (np.arange(n) + 1) / n
    return apply_site_unitaries(psi, site_phases(h.charge, angles), n, h.local_dim)


def _ground_state(h, sd):
    if sd.k == 1:
        return sd.ground_states[:, 0]
    tr = translation_operator(h.n, h.local_dim)
    sd = canonical_ground_basis(sd, {"T": tr, "Q": h.charge_operator("sparse")})
    return sd.ground_states[:, 0]


def lsm_twist_state(h: HamiltonianSpec, sd: SpectralData | None = None, psi0=None, tol=1e-8):
    """Build the twisted state and report its energy, momentum and overlap.

    Parameters
    ----------
    h : HamiltonianSpec
        Periodic chain with a charge.
    sd : SpectralData, optional
    psi0 : ndarray, optional
        Reference state; must be an eigenvector of T and Q.  Defaults to the
        ground state (resolved by T and Q when degenerate).
    tol : float
        Eigenvector and assertion tolerance.

    Returns
    -------
    psi_lsm : ndarray
    report : dict
    """
    require_periodic_chain(h)
    if sd is None:
        sd = diagonalize(h)
    if psi0 is None:
        psi0 = _ground_state(h, sd)
    psi0 = np.asarray(psi0, dtype=complex)
    psi0 = psi0 / np.linalg.norm(psi0)
    n = h.n
    tr = translation_operator(n, h.local_dim)
    qop = h.charge_operator("sparse")
    z, t_res = eigen_phase(tr, psi0, tol, "T")
    qval, q_res = eigen_phase(qop, psi0, tol, "Q")
    rho = qval.real / n
    integer_rho = abs(rho - round(rho)) < 1e-9

    psi = twist(h, psi0)
    zl = complex(np.vdot(psi, tr @ psi))
    tl_res = float(np.linalg.norm(tr @ psi - zl * psi))
    expected = z * np.exp(2j * np.pi * rho)
    overlap = abs(np.vdot(psi0, psi))

    hm = h.matrix("sparse")
    e_ref = np.vdot(psi0, hm @ psi0).real
    excess = float(np.vdot(psi, hm @ psi).real - e_ref)
    per_term = []
    for supp, term in sorted(h.grouped_terms().items()):
        m = embed(term, n, "sparse")
        per_term.append((term.label, float(np.vdot(psi, m @ psi).real - np.vdot(psi0, m @ psi0).real)))

    report = {
        "n": n, "rho": float(rho), "z": z, "t_residual": t_res, "q_residual": q_res,
        "t_eigenvalue": zl, "t_eigen_residual": tl_res, "expected_eigenvalue": complex(expected),
        "overlap": float(overlap), "energy_excess": excess,
        "n_times_excess": n * excess, "per_term_excess": per_term,
        "max_term_excess": max(v for _, v in per_term),
        "hypothesis_met": not integer_rho,
    }
    checks = {"t_eigenvalue": abs(zl - expected) <= tol and tl_res <= tol}
    if not integer_rho:
        checks["orthogonal"] = overlap <= tol
    report["checks"] = checks
    report["passed"] = all(checks.values())
    return psi, report


def lsm_size_scan(builder, sizes, tol=1e-8):
    """Twist reports over ring sizes with the N * excess spread and the per-term exponent.

    ``spread`` is (max - min) / min of N * excess; ``term_exponent`` is minus the
    slope of log(max per-term excess) against log N.
    """
    rows = []
    for n in sizes:
        h = builder(n)
        _, rep = lsm_twist_state(h, tol=tol)
        rows.append(rep)
    ne = np.array([r["n_times_excess"] for r in rows])
    spread = float((ne.max() - ne.min()) / ne.min()) if ne.min() > 0 else float("inf")
    terms = np.array([r["max_term_excess"] for r in rows])
    exponent = float("nan")
    if len(sizes) >= 2 and np.all(terms > 0):
        exponent = float(-np.polyfit(np.log(sizes), np.log(terms), 1)[0])
    return {"rows": rows, "spread": spread, "term_exponent": exponent}


def mg_exercise(h: HamiltonianSpec, sd: SpectralData | None = None, tol=1e-8):
    """Twist the symmetric dimer combination and compare with the antisymmetric one.

    Returns the phase-optimal vector distance ``sqrt(2 - 2 |<a, psi_lsm>|)``
    and the T-eigenvalues of the symmetric, antisymmetric and twisted states.
    """
    require_periodic_chain(h)
    n = h.n
    if sd is None:
        sd = diagonalize(h)
    d0, d1 = dimer_state(n, 0), dimer_state(n, 1)
    sym = (d0 + d1) / np.linalg.norm(d0 + d1)
    anti = (d0 - d1) / np.linalg.norm(d0 - d1)
    hm = h.matrix("sparse")
    resid = max(float(np.linalg.norm(hm @ v - sd.e0 * v)) for v in (d0, d1))
    if resid > 1e-8 * max(1.0, sd.h_norm):
        raise DomainError(f"dimer states are not ground states (residual {resid:.2e})")
    tr = translation_operator(n, h.local_dim)
    psi, rep = lsm_twist_state(h, sd, psi0=sym, tol=tol)
    z_anti, _ = eigen_phase(tr, anti, tol, "T")
    dist = float(np.sqrt(max(0.0, 2 - 2 * abs(np.vdot(anti, psi)))))
    return {
        "ground_degeneracy": sd.k, "gap": sd.gap, "distance": dist, "threshold": 1.0 / n,
        "t_sym": rep["z"], "t_anti": z_anti, "t_lsm": rep["t_eigenvalue"],
        "lsm_report": rep,
    }
