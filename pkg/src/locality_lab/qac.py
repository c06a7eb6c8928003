"""Exact quasi-adiabatic continuation: the generator D_s and its flows.

Convention: ``d/ds psi = i D_s psi``, with
``i D = int F(dE t) exp(iHt) (dH/ds) exp(-iHt) dt``, so that in the energy
basis ``(iD)_ij = (dH/ds)_ij F~((E_i - E_j)/dE) / dE``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as la

from . import lattice as lt
from .errors import ConvergenceError, DomainError
from .filters import FilterFunction, _gl_nodes
from .models import HamiltonianSpec
from .operators import LocalOperator, embed, embed_sum, haar_localize, operator_norm
from .spectral import SpectralData, diagonalize, ground_projector

FD_STEP = 1e-5


@dataclass
class ParamPath:
    """A family of Hamiltonians H(s) on a grid.

    Attributes
    ----------
    builder : callable
        s -> HamiltonianSpec.  Term supports must not depend on s.
    s_grid : ndarray
    gap_floor : float, optional
        Energy scale dE fed to the filter.  Defaults to the gap at s_grid[0].
    derivative : callable, optional
        s -> HamiltonianSpec (or list of LocalOperator) holding the exact dH_Z/ds.
    n_ground : int, optional
        Size of the transported ground sector (default: detected degeneracy).
    """

    builder: Callable[[float], HamiltonianSpec]
    s_grid: np.ndarray
    gap_floor: float | None = None
    derivative: Callable[[float], HamiltonianSpec] | None = None
    n_ground: int | None = None
    _sd_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.s_grid = np.asarray(self.s_grid, dtype=float)
        if self.s_grid.size == 0 or np.any(np.diff(self.s_grid) <= 0):
            raise DomainError("s_grid must be nonempty and increasing")

    def hamiltonian(self, s) -> HamiltonianSpec:
        return self.builder(float(s))

    def spectrum(self, s) -> SpectralData:
        key = float(s)
        if key not in self._sd_cache:
            self._sd_cache[key] = diagonalize(self.hamiltonian(key), n_ground=self.n_ground, cache=None)
        return self._sd_cache[key]

    def derivative_terms(self, s):
        """dH_Z/ds per term: exact when supplied, else centered differences."""
        if self.derivative is not None:
            d = self.derivative(float(s))
            return list(getattr(d, "terms", d))
        hp, hm = self.hamiltonian(s + FD_STEP).terms, self.hamiltonian(s - FD_STEP).terms
        if len(hp) != len(hm) or any(a.support != b.support for a, b in zip(hp, hm)):
            raise DomainError("term supports change along the path")
        return [LocalOperator(a.support, (a.matrix - b.matrix) / (2 * FD_STEP), a.label, a.local_dim)
                for a, b in zip(hp, hm)]

    def d_hamiltonian(self, s):
        h = self.hamiltonian(s)
        return embed_sum(self.derivative_terms(s), h.n)

    def resolved_gap_floor(self):
        if self.gap_floor is None:
            self.gap_floor = self.spectrum(self.s_grid[0]).gap
        return self.gap_floor


@dataclass
class QacOperator:
    """Hermitian generator D with the energy scale and filter used."""

    matrix: np.ndarray
    delta_e_used: float
    filter: FilterFunction
    notes: list = field(default_factory=list)


def qac_operator_spectral(sd: SpectralData, o, filt: FilterFunction, delta_e: float) -> QacOperator:
    """D from energy-basis matrix elements of ``o``."""
    sd.require_full("the spectral quasi-adiabatic operator")
    if delta_e <= 0:
        raise DomainError("delta_e must be positive")
    notes = []
    if delta_e > sd.gap * (1 + 1e-9):
        msg = f"delta_e {delta_e:.6g} exceeds the computed gap {sd.gap:.6g}"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    oe = sd.to_energy_basis(o)
    e = sd.energies
    idm = oe * (filt.fourier((e[:, None] - e[None, :]) / delta_e) / delta_e)
    d = sd.from_energy_basis(-1j * idm)
    d = (d + d.conj().T) / 2
    return QacOperator(d, delta_e, filt, notes)


def qac_operator_time(h: HamiltonianSpec, o, filt: FilterFunction, delta_e: float,
                      t_max: float | None = None, nodes_per_panel: int = 16) -> QacOperator:
    """D by quadrature of the time integral, with exp(iHt) from expm.

    Uses the oddness of F: D = int_0^T G(dE t) (O(t) - O(-t)) dt where
    F(t) = i sign(t) G(|t|).
    """
    if filt.kind != "F":
        raise DomainError("time-domain construction needs the odd filter F")
    hm = np.asarray(h.matrix("dense"), dtype=complex)
    o = np.asarray(o, dtype=complex)
    t_end = filt.t_max / delta_e if t_max is None else float(t_max)
    span = 2 * operator_norm(hm)
    width = min(1.0 / delta_e, 8.0 / max(span, 1e-12))
    n_panels = int(np.ceil(t_end / width))
    edges = np.linspace(0.0, n_panels * width, n_panels + 1)
    nodes, weights = _gl_nodes(edges[:2], nodes_per_panel)
    taus, wts = nodes[0], weights[0]
    u_nodes = [la.expm(1j * hm * tau) for tau in taus]
    u_step = la.expm(1j * hm * width)
    g_of = filt.diagnostics.get("series")
    if g_of is None:
        raise DomainError("filter F lacks its tail evaluator")
    acc = np.zeros_like(o)
    op_p, op_m = o.copy(), o.copy()  # O(a), O(-a) at panel start a
    for p in range(n_panels):
        a = edges[p]
        gw = wts * g_of.tail(delta_e * (a + taus))
        for u, w in zip(u_nodes, gw):
            ud = u.conj().T
            acc += w * (u @ op_p @ ud - ud @ op_m @ u)
        op_p = u_step @ op_p @ u_step.conj().T
        op_m = u_step.conj().T @ op_m @ u_step
    d = (acc + acc.conj().T) / 2
    return QacOperator(d, delta_e, filt, [f"t_max={t_end:.6g}", f"panels={n_panels}"])


def _d_at(path, s, filt, delta_e):
    # gap closing below the floor is reported once per path via "gap_open"
    sd = path.spectrum(s)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        d = qac_operator_spectral(sd, path.d_hamiltonian(s), filt, delta_e).matrix
    return d, sd


def projector_flow_check(path: ParamPath, filt: FilterFunction):
    """|dP0/ds - i[D_s, P0]| at interior grid points (centered differences).

    Returns a dict with per-point rows (s, residual, gap) and the maximum.
    """
    de = path.resolved_gap_floor()
    s = path.s_grid
    rows = []
    for k in range(1, s.size - 1):
        h = s[k + 1] - s[k]
        if not np.isclose(s[k] - s[k - 1], h):
            raise DomainError("projector flow check needs a uniform grid")
        pp = ground_projector(path.spectrum(s[k + 1]))
        pm = ground_projector(path.spectrum(s[k - 1]))
        d, sd = _d_at(path, s[k], filt, de)
        p0 = ground_projector(sd)
        dp = (pp - pm) / (2 * h)
        resid = operator_norm(dp - 1j * (d @ p0 - p0 @ d))
        rows.append((float(s[k]), float(resid), float(sd.gap)))
    gaps = [r[2] for r in rows]
    return {"rows": rows, "max_residual": max((r[1] for r in rows), default=0.0),
            "min_gap": min(gaps, default=float("nan")), "delta_e": de,
            "gap_open": bool(min(gaps, default=np.inf) >= de * (1 - 1e-9))}


def _expi(d, ds):
    w, v = la.eigh(d)
    return (v * np.exp(1j * ds * w)) @ v.conj().T


def flow_unitary(path: ParamPath, filt: FilterFunction):
    """Ordered product of exp(i D(s_mid) ds) over the grid, later steps on the left."""
    de = path.resolved_gap_floor()
    s = path.s_grid
    dim = path.hamiltonian(s[0]).dim
    w = np.eye(dim, dtype=complex)
    for k in range(s.size - 1):
        mid = 0.5 * (s[k] + s[k + 1])
        d, _ = _d_at(path, mid, filt, de)
        w = _expi(d, s[k + 1] - s[k]) @ w
    return w


def flow_convergence(builder_path: Callable[[np.ndarray], ParamPath], filt, n_steps=(8, 16, 32, 64)):
    """Successive differences |W_h - W_{h/2}| and the fitted convergence order."""
    ws = [flow_unitary(builder_path(np.linspace(0, 1, n + 1)), filt) for n in n_steps]
    diffs = [operator_norm(ws[i] - ws[i + 1]) for i in range(len(ws) - 1)]
    orders = [float(np.log2(diffs[i] / diffs[i + 1])) for i in range(len(diffs) - 1)
              if diffs[i + 1] > 0]
    return {"n_steps": list(n_steps), "differences": diffs, "orders": orders,
            "order": float(np.min(orders)) if orders else float("inf"), "unitary": ws[-1]}


def ground_state_derivative_check(path: ParamPath, s: float, filt, h: float = 1e-4):
    """max_i |<psi_i, (iD - d/ds) psi_0>| over i != 0 (unique ground state).

    d/ds psi_0 by centered differences of phase-aligned dense ground states.
    """
    sd = path.spectrum(s)
    if sd.k != 1:
        raise DomainError("derivative check needs a unique ground state")
    d, _ = _d_at(path, s, filt, path.resolved_gap_floor())
    psi = sd.states[:, 0]

    def aligned(x):
        v = diagonalize(path.hamiltonian(x), cache=None).states[:, 0]
        ov = np.vdot(psi, v)
        return v * (abs(ov) / ov)

    dpsi = (aligned(s + h) - aligned(s - h)) / (2 * h)
    lhs = sd.states.conj().T @ (1j * d @ psi - dpsi)
    return float(np.abs(lhs[1:]).max())


def qac_locality_decomposition(path: ParamPath, s: float, filt, l_grid=None):
    """Shell decomposition D^Z = sum_l O_l(Z) for every term Z of dH/ds.

    Returns rows (label, l, |O_l(Z)|) and the worst reconstruction error.
    """
    h = path.hamiltonian(s)
    lat = h.lattice
    sd = path.spectrum(s)
    de = path.resolved_gap_floor()
    if l_grid is None:
        l_grid = np.arange(0, int(np.ceil(lat.diameter)) + 1)
    rows, worst = [], 0.0
    for term in path.derivative_terms(s):
        dz = qac_operator_spectral(sd, embed(term, h.n), filt, de).matrix
        prev = np.zeros_like(dz)
        total = np.zeros_like(dz)
        for l in l_grid:
            loc = haar_localize(dz, lt.ball(lat, term.support, l), h.n, h.local_dim)
            shell = loc - prev
            rows.append((term.label, float(l), operator_norm(shell, hermitian=True)))
            total += shell
            prev = loc
        worst = max(worst, float(np.abs(total - dz).max()))
    return rows, worst


def dress_operator(path: ParamPath, o, filt, w=None):
    """U O U^dagger with U the quasi-adiabatic flow along ``path``."""
    if w is None:
        w = flow_unitary(path, filt)
    return w @ o @ w.conj().T


def require_convergent(conv, min_order):
    if conv["order"] < min_order:
        raise ConvergenceError(f"flow converges at order {conv['order']:.3g} < {min_order}",
                               conv["differences"])
