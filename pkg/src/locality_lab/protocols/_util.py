"""Small state-manipulation helpers shared by the protocols."""
from __future__ import annotations

import numpy as np
import scipy.linalg as la

from ..errors import DomainError


def apply_site_unitaries(psi, mats, n, d=2):
    """Apply a product of single-site matrices ``mats[j]`` (site j) to ``psi``."""
    t = np.asarray(psi).reshape([d] * n)
    for j, m in enumerate(mats):
        if m is None:
            continue
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [j])), 0, j)
    return t.reshape(-1)


def site_phases(charges, angles):
    """Single-site unitaries exp(i angle_j q_j)."""
    return [la.expm(1j * a * np.asarray(q)) if a != 0 else None for q, a in zip(charges, angles)]


def expectation(o, psi):
    return complex(np.vdot(psi, o @ psi))


def eigen_phase(u, psi, tol, what):
    """<psi, u psi> after checking that psi is an eigenvector of u."""
    up = u @ psi
    z = np.vdot(psi, up)
    resid = float(np.linalg.norm(up - z * psi))
    if resid > tol:
        raise DomainError(f"state is not an eigenvector of {what} (residual {resid:.2e})")
    return complex(z), resid


def require_periodic_chain(h):
    if h.lattice.geometry_tag != "chain_periodic":
        raise DomainError(f"needs a periodic chain, got {h.lattice.geometry_tag!r}")
    if h.charge is None:
        raise DomainError(f"model {h.name!r} has no conserved charge")
