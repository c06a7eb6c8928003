"""Twisted boundary conditions and the quasi-adiabatic flux-insertion flows."""
from __future__ import annotations

import numpy as np
import scipy.linalg as la

from ..errors import DomainError
from ..filters import FilterFunction
from ..models import HamiltonianSpec
from ..operators import LocalOperator, check_capacity, translation_operator
from ..qac import ParamPath, flow_unitary
from ..spectral import diagonalize


def half_region(h: HamiltonianSpec):
    """Sites with 1 <= x <= L/2 along the periodic coordinate (column 0)."""
    lat = h.lattice
    if lat.coords is None or lat.coords.shape[0] != lat.site_count or not lat.extent:
        raise DomainError("flux insertion needs site coordinates along a periodic direction")
    x = lat.coords[:, 0]
    length = lat.extent[0]
    return tuple(int(i) for i in np.flatnonzero((x >= 1) & (x <= length / 2)))


def _cut_distance(x, cut, length):
    d = np.abs(np.asarray(x) - cut) % length
    return np.minimum(d, length - d)


def boundary_assignment(h: HamiltonianSpec):
    """Map term index -> 1 (cut near x = 0), 2 (cut near x = L/2) or 0.

    A term is twisted when its support straddles the region X; it goes to
    whichever cut its sites are closest to.
    """
    xset = set(half_region(h))
    x = h.lattice.coords[:, 0]
    length = h.lattice.extent[0]
    cut1, cut2 = 0.5, length / 2 + 0.5
    out = {}
    for k, t in enumerate(h.terms):
        inside = [s in xset for s in t.support]
        if all(inside) or not any(inside):
            out[k] = 0
            continue
        xs = x[list(t.support)]
        d1 = _cut_distance(xs, cut1, length).min()
        d2 = _cut_distance(xs, cut2, length).min()
        out[k] = 1 if d1 <= d2 else 2
    return out


def _local_charge(h, support, region):
    d = h.local_dim
    m = np.zeros((d ** len(support),) * 2, dtype=complex)
    for pos, s in enumerate(support):
        if s in region:
            ops = [np.eye(d)] * len(support)
            ops[pos] = h.charge[s]
            acc = ops[0]
            for o in ops[1:]:
                acc = np.kron(acc, o)
            m += acc
    return m


def _twisted_terms(h, theta1, theta2, derivative=None):
    """Terms of H(theta1, theta2) or, with ``derivative``, of its partial derivative."""
    region = set(half_region(h))
    assign = boundary_assignment(h)
    out = []
    for k, t in enumerate(h.terms):
        cut = assign[k]
        if cut == 0:
            if derivative is None:
                out.append(t)
            continue
        angle = theta1 if cut == 1 else -theta2
        qz = _local_charge(h, t.support, region)
        u = la.expm(1j * angle * qz)
        m = u @ t.matrix @ u.conj().T
        if derivative is None:
            out.append(LocalOperator(t.support, m, t.label + "~", h.local_dim))
        elif derivative == cut:
            dm = 1j * (qz @ m - m @ qz) * (1 if cut == 1 else -1)
            out.append(LocalOperator(t.support, dm, "d" + t.label, h.local_dim))
    return out


def flux_insertion(h: HamiltonianSpec, theta1: float, theta2: float) -> HamiltonianSpec:
    """H(theta1, theta2): boundary terms conjugated by exp(+-i theta Q_X).

    Terms straddling the cut near x = 0 become exp(i theta1 Q_X) H_Z exp(-i theta1 Q_X);
    terms at the cut near x = L/2 become exp(-i theta2 Q_X) H_Z exp(i theta2 Q_X).
    """
    if h.charge is None:
        raise DomainError(f"model {h.name!r} has no conserved charge")
    terms = _twisted_terms(h, theta1, theta2)
    return h.with_terms(terms, name=h.name + "_twisted", theta1=float(theta1), theta2=float(theta2))


def flux_spectrum_check(h: HamiltonianSpec, thetas, tol=1e-9):
    """max |eig H(theta, -theta) - eig H| per theta and the 2 pi periodicity error."""
    e0 = np.linalg.eigvalsh(h.matrix())
    rows = []
    for th in thetas:
        e = np.linalg.eigvalsh(flux_insertion(h, th, -th).matrix())
        rows.append((float(th), float(np.abs(e - e0).max())))
    period = float(np.abs(flux_insertion(h, 2 * np.pi, -2 * np.pi).matrix()
                          - flux_insertion(h, 0.0, 0.0).matrix()).max())
    return {"rows": rows, "periodicity_error": period,
            "passed": all(r[1] <= tol for r in rows) and period <= tol}


def _path(h, which, n_steps, gap_floor):
    def builder(s):
        th = 2 * np.pi * s
        return flux_insertion(h, *{1: (th, 0.0), 2: (0.0, -th), 3: (th, -th)}[which])

    def derivative(s):
        th = 2 * np.pi * s
        args = {1: (th, 0.0), 2: (0.0, -th), 3: (th, -th)}[which]
        if which == 1:
            return [t.scaled(2 * np.pi) for t in _twisted_terms(h, *args, derivative=1)]
        if which == 2:
            return [t.scaled(-2 * np.pi) for t in _twisted_terms(h, *args, derivative=2)]
        return ([t.scaled(2 * np.pi) for t in _twisted_terms(h, *args, derivative=1)]
                + [t.scaled(-2 * np.pi) for t in _twisted_terms(h, *args, derivative=2)])

    return ParamPath(builder, np.linspace(0.0, 1.0, n_steps + 1), gap_floor=gap_floor,
                     derivative=derivative)


def flux_flow_experiment(h: HamiltonianSpec, filt: FilterFunction, gap_floor=None, n_steps=64):
    """Flows W1, W2, W around the flux circle and their diagnostics.

    ``phase_error`` compares <psi0, W psi0> with exp(-2 pi i <Q_X>), the phase of
    parallel transport of exp(i theta Q_X) psi0 around the loop.
    """
    check_capacity(h.n, h.local_dim, "dense")
    if h.charge is None:
        raise DomainError(f"model {h.name!r} has no conserved charge")
    sd = diagonalize(h)
    if gap_floor is None:
        gap_floor = sd.gap
    ws = {k: flow_unitary(_path(h, k, n_steps, gap_floor), filt) for k in (1, 2, 3)}
    w1, w2, w = ws[1], ws[2], ws[3]
    g = sd.ground_states
    psi0 = g[:, 0]
    qx = h.charge_operator("dense", half_region(h))
    qx_mean = float(np.vdot(psi0, qx @ psi0).real)
    amp = complex(np.vdot(psi0, w @ psi0))
    target = np.exp(-2j * np.pi * qx_mean)
    phase_error = float(abs(np.angle(amp / target))) if abs(amp) > 0 else float("inf")
    hm = h.matrix()
    phi = w1 @ psi0
    excess = float(np.vdot(phi, hm @ phi).real - sd.e0)
    tr = translation_operator(h.n, h.local_dim)
    t_phase = complex(np.vdot(phi, tr @ phi))
    in_ground = float(np.linalg.norm(g.conj().T @ phi))
    return {
        "n": h.n, "gap": sd.gap, "ground_degeneracy": sd.k, "gap_floor": float(gap_floor),
        "commutation_error": float(np.linalg.norm(w1 @ w2 - w, 2)),
        "w_amplitude": abs(amp), "w_phase": float(np.angle(amp)), "qx_mean": qx_mean,
        "phase_error": phase_error, "w1_energy_excess": excess,
        "w1_ground_weight": in_ground, "w1_t_expectation": t_phase,
        "n_steps": n_steps,
    }
