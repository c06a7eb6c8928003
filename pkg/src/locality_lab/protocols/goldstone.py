"""Charged-operator correlations in gapped U(1)-symmetric ground sectors."""
from __future__ import annotations

import numpy as np

from .. import lattice as lt
from ..errors import DomainError
from ..models import HamiltonianSpec
from ..operators import SM, SP, LocalOperator, embed
from ..spectral import SpectralData, diagonalize
from ._util import apply_site_unitaries, site_phases


def rotation(h: HamiltonianSpec, region, theta):
    """Single-site factors of R(theta, X) = prod_{i in X} exp(i q_i theta)."""
    angles = [theta if i in region else 0.0 for i in range(h.n)]
    return site_phases(h.charge, angles)


def vector_check(h: HamiltonianSpec, op: LocalOperator, charge_sign, thetas=(np.pi / 4, np.pi)):
    """max |R(-theta) phi R(theta) - exp(i sign theta) phi| over ``thetas`` (local algebra)."""
    from scipy.linalg import expm
    qloc = [h.charge[s] for s in op.support]
    err = 0.0
    for th in thetas:
        r = np.array([[1.0]])
        for q in qloc:
            r = np.kron(r, expm(1j * th * q))
        lhs = r.conj().T @ op.matrix @ r
        err = max(err, float(np.abs(lhs - np.exp(1j * charge_sign * th) * op.matrix).max()))
    return err


def _sector_expectation(g, m):
    k = g.shape[1]
    return complex(np.trace(g.conj().T @ (m @ g)) / k)


def goldstone_check(h: HamiltonianSpec, site_x=1, separations=None, phi=None, phibar=None,
                    sd: SpectralData | None = None, dtheta=1e-3, decay_factor=5.0):
    """Vector property, the theta-derivative identity and the decay of <phi_X phibar_Y>.

    phi lowers q_i = S^z + 1/2 by one, so R(-theta) phi R(theta) = exp(i theta) phi;
    phibar is its adjoint.  Expectations are sector averages tr(P0 .)/k.
    """
    if h.charge is None:
        raise DomainError(f"model {h.name!r} has no conserved charge")
    phi = SM if phi is None else phi
    phibar = SP if phibar is None else phibar
    lat = h.lattice
    if separations is None:
        separations = [l for l in range(1, h.n) if site_x + l < h.n]
    if sd is None:
        sd = diagonalize(h)
    g = sd.ground_states
    a = LocalOperator((site_x,), phi, "phi")
    vec_err = max(vector_check(h, a, +1),
                  vector_check(h, LocalOperator((site_x,), phibar, "phibar"), -1))
    if vec_err > 1e-12:
        raise DomainError(f"phi does not transform as a charge-lowering vector ({vec_err:.2e})")
    am = embed(a, h.n, "sparse")
    rows, deriv = [], []
    for l in separations:
        y = site_x + l
        bm = embed(LocalOperator((y,), phibar, "phibar"), h.n, "sparse")
        c = _sector_expectation(g, am @ bm)
        rows.append((int(l), abs(c)))
        # X' = sites within dist(X, Y)/2 of X
        region = set(lt.ball(lat, (site_x,), lt.set_distance(lat, (site_x,), (y,)) / 2))
        vals = []
        for s in (+dtheta, -dtheta):
            gs = np.stack([apply_site_unitaries(g[:, k], rotation(h, region, s), h.n, h.local_dim)
                           for k in range(g.shape[1])], axis=1)
            vals.append(_sector_expectation(gs, am @ bm))
        d = (vals[0] - vals[1]) / (2 * dtheta)
        deriv.append((int(l), float(abs(d - 1j * c)), float(abs(c) * dtheta ** 2)))
    first, last = rows[0][1], rows[-1][1]
    ratio = first / last if last > 0 else float("inf")
    return {"rows": rows, "derivative_rows": deriv, "vector_error": vec_err,
            "decay_ratio": float(ratio), "ground_degeneracy": sd.k, "gap": sd.gap,
            "passed": ratio >= decay_factor
            and all(err <= max(tol_, 1e-12) for _, err, tol_ in deriv)}
