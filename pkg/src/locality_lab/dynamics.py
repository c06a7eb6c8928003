"""Heisenberg evolution, commutator-norm sweeps and light-cone checks."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from . import lattice as lt
from .errors import DomainError
from .models import DecayConstants, HamiltonianSpec, decay_constants
from .operators import (LocalOperator, check_capacity, embed, haar_localize,
                        hermitian_norm_arpack, operator_norm)
from .spectral import SpectralData, diagonalize


def heisenberg_evolve(h: HamiltonianSpec, o, t: float, sd: SpectralData | None = None):
    """exp(iHt) o exp(-iHt) on the dense path (exact, via the eigenbasis)."""
    check_capacity(h.n, h.local_dim, "dense")
    if sd is None:
        sd = diagonalize(h)
    sd.require_full("exact Heisenberg evolution")
    oe = sd.to_energy_basis(o)
    e = sd.energies
    return sd.from_energy_basis(oe * np.exp(1j * (e[:, None] - e[None, :]) * t))


def lr_envelope(dc: DecayConstants, x, y, lat: lt.Lattice, norm_a: float, norm_b: float,
                t: float) -> float:
    """2|A||B| sum_{i in X} exp(-mu dist(i, Y)) (exp(2 s |t|) - 1)."""
    x = lt.site_set(x, lat)
    y = lt.site_set(y, lat)
    if lt.set_distance(lat, x, y) <= 0:
        raise DomainError("Lieb-Robinson envelope needs dist(X, Y) > 0")
    dist = lat.metric[np.ix_(x, y)].min(axis=1)
    return float(2 * norm_a * norm_b * np.exp(-dc.mu * dist).sum()
                 * np.expm1(2 * dc.s * abs(t)))


def lr_velocity(dc: DecayConstants) -> float:
    return 4 * dc.s / dc.mu


# ---------------------------------------------------------------- commutator sweeps

class ParitySectors:
    """Spin-flip parity blocks for spin-1/2 models with [H, prod sigma^x] = 0.

    Sector basis vectors are (|b> +- |bbar>)/sqrt2 with b < bbar, bbar the
    bitwise complement of b.  In the full basis bbar = dim - 1 - b, so the
    blocks come from the top half rows with column-reversed right halves.
    """

    def __init__(self, h: HamiltonianSpec):
        hm = h.matrix("sparse").tocsr()
        self.dim = hm.shape[0]
        self.half = self.dim // 2
        if parity_sign(hm) != 1:
            raise DomainError("Hamiltonian does not commute with the spin-flip parity")
        blocks = self._blocks(hm, 1)
        self.energies, self.vectors = {}, {}
        for sec in (0, 1):
            self.energies[sec], self.vectors[sec] = la.eigh(blocks[(sec, sec)], driver="evd")

    def _blocks(self, m, sign):
        h = self.half
        m11 = m[:h, :h].toarray()
        m12r = m[:h, h:].toarray()[:, ::-1]
        plus, minus = m11 + m12r, m11 - m12r
        if sign == 1:
            return {(0, 0): plus, (1, 1): minus}
        return {(0, 1): minus, (1, 0): plus}

    def energy_blocks(self, m, sign, keys=None):
        """Blocks of ``m`` in the sector eigenbases, keyed by (row, col) sector."""
        out = {}
        for (r, c), blk in self._blocks(sp.csr_matrix(m), sign).items():
            if keys is None or (r, c) in keys:
                out[(r, c)] = self.vectors[r].T @ blk @ self.vectors[c]
        return out


def parity_sign(m):
    """+1 or -1 if P m P = +-m for P = prod sigma^x, else 0."""
    m = sp.csr_matrix(m)
    rev = np.arange(m.shape[0])[::-1]
    pmp = m[rev][:, rev]
    scale = max(abs(m).max(), 1e-300)
    if abs(pmp - m).max() <= 1e-12 * scale:
        return 1
    if abs(pmp + m).max() <= 1e-12 * scale:
        return -1
    return 0


def _is_involution_like(op: LocalOperator):
    sq = op.matrix @ op.matrix
    c = np.trace(sq) / sq.shape[0]
    return abs(c) > 0 and np.allclose(sq, c * np.eye(sq.shape[0]), atol=1e-12)


def _sector_route_ok(h, a, b):
    if h.local_dim != 2 or not h.is_real:
        return False
    hs = h.matrix("sparse")
    if parity_sign(hs) != 1:
        return False
    return all(parity_sign(embed(o, h.n, "sparse")) != 0 for o in (a, b))


def _herm_norm_of_antiherm(c):
    return operator_norm(1j * c, hermitian=True)


def commutator_norms(h: HamiltonianSpec, a: LocalOperator, b: LocalOperator, times,
                     route="auto", sd: SpectralData | None = None):
    """|[A(t), B]| for each t, with A and B Hermitian local operators.

    Parameters
    ----------
    route : {'auto', 'dense', 'sectors'}
        'sectors' uses the spin-flip parity blocks (requires a parity-symmetric
        real H and operators of definite parity); 'auto' picks it when valid.
    """
    check_capacity(h.n, h.local_dim, "dense")
    times = np.asarray(times, dtype=float)
    zero = times == 0
    out = np.empty(times.size)
    if zero.any():
        # A(0) = A exactly; avoids round-off from the eigenbasis rotation
        am, bm = embed(a, h.n, "sparse"), embed(b, h.n, "sparse")
        out[zero] = operator_norm((am @ bm - bm @ am).toarray())
    rest = ~zero
    if not rest.any():
        return out
    out[rest] = _sweep(h, a, b, times[rest], route, sd)
    return out


def _sweep(h, a, b, times, route, sd):
    if route == "auto":
        route = "sectors" if h.n >= 9 and _sector_route_ok(h, a, b) else "dense"
    if route == "sectors":
        return _norms_sectors(h, a, b, times)
    if sd is None:
        sd = diagonalize(h)
    ae = sd.to_energy_basis(embed(a, h.n))
    be = sd.to_energy_basis(embed(b, h.n))
    e = sd.energies
    de = e[:, None] - e[None, :]
    out = np.empty(times.size)
    for i, t in enumerate(times):
        at = ae * np.exp(1j * de * t)
        x = at @ be
        out[i] = _herm_norm_of_antiherm(x - x.conj().T)
    return out


def _norms_sectors(h, a, b, times):
    ps = ParitySectors(h)
    am, bm = embed(a, h.n, "sparse"), embed(b, h.n, "sparse")
    sa, sb = parity_sign(am), parity_sign(bm)
    if sa == 0 or sb == 0:
        raise DomainError("sector route needs operators of definite spin-flip parity")
    pa, pb = (0 if sa == 1 else 1), (0 if sb == 1 else 1)
    e = ps.energies
    out = np.empty(times.size)
    if pa != pb:
        ab = ps.energy_blocks(am, sa)
        bb = ps.energy_blocks(bm, sb)
        # block off-diagonal commutator: generic elementwise phases
        for i, t in enumerate(times):
            m = {}
            for x in (0, 1):
                z, y = x ^ pa, x ^ pa ^ pb
                ph = np.exp(1j * (e[x][:, None] - e[z][None, :]) * t)
                m[(x, y)] = (ab[(x, z)] * ph) @ bb[(z, y)]
            out[i] = operator_norm(m[(0, 1)] - m[(1, 0)].conj().T)
        return out
    # C_xx = D_x (Y - Y^dag) D_x^* with Y = A_xz D_z^* B_zx D_x, D = exp(iEt)
    rows = (0,) if (_is_involution_like(a) and _is_involution_like(b)) else (0, 1)
    ab = ps.energy_blocks(am, sa, {(x, x ^ pa) for x in rows})
    bb = ps.energy_blocks(bm, sb, {(x ^ pa, x) for x in rows})
    real = {k: not np.iscomplexobj(v) for k, v in ab.items()}
    warm = {0: None, 1: None}
    for i, t in enumerate(times):
        best = 0.0
        for x in rows:
            z = x ^ pa
            amat, bmat = ab[(x, z)], bb[(z, x)]
            scaled = bmat * np.outer(np.exp(-1j * e[z] * t), np.exp(1j * e[x] * t))
            if real[(x, z)]:
                y = (amat @ np.ascontiguousarray(scaled.real)
                     + 1j * (amat @ np.ascontiguousarray(scaled.imag)))
            else:
                y = amat @ scaled
            y -= y.conj().T
            y *= 1j
            val, warm[x] = hermitian_norm_arpack(y, warm[x])
            best = max(best, val)
        out[i] = best
    return out


# ---------------------------------------------------------------- reports

@dataclass
class LightConeReport:
    """Commutator norms against the Lieb-Robinson envelope on a time grid."""

    times: np.ndarray
    lhs_norms: np.ndarray
    rhs_bounds: np.ndarray
    constants: DecayConstants
    v_lr: float
    ceiling: float
    leakage: dict = field(default_factory=dict)

    @property
    def violations(self):
        return int(np.sum(self.lhs_norms > self.rhs_bounds))

    @property
    def passed(self):
        return self.violations == 0 and bool(np.all(self.lhs_norms <= self.ceiling * (1 + 1e-9)))

    def ratio(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.rhs_bounds > 0, self.lhs_norms / self.rhs_bounds, 0.0)


def verify_lr(h: HamiltonianSpec, a: LocalOperator, b: LocalOperator, t_grid, mu: float = 1.0,
              route="auto") -> LightConeReport:
    """Check |[A(t), B]| <= envelope pointwise on ``t_grid``."""
    lat = h.lattice
    if lt.set_distance(lat, a.support, b.support) <= 0:
        raise DomainError("verify_lr needs disjoint supports at positive distance")
    dc = decay_constants(h, mu)
    t_grid = np.asarray(t_grid, dtype=float)
    na, nb = a.norm, b.norm
    lhs = commutator_norms(h, a, b, t_grid, route=route)
    rhs = np.array([lr_envelope(dc, a.support, b.support, lat, na, nb, t) for t in t_grid])
    return LightConeReport(t_grid, lhs, rhs, dc, lr_velocity(dc), 2 * na * nb)


def leakage_profile(h: HamiltonianSpec, a: LocalOperator, t: float, l_grid, mu: float = 1.0,
                    sd: SpectralData | None = None):
    """Rows (l, |loc_l A(t) - A(t)|, bound) with bound the LR-based ceiling.

    The bound is min(2|A|, envelope(X, complement of the ball, |A|, 1, t)),
    since the leakage is an average of |[A(t), U]| over unit-norm unitaries U
    supported on the complement.
    """
    lat = h.lattice
    if sd is None:
        sd = diagonalize(h)
    at = heisenberg_evolve(h, embed(a, h.n), t, sd)
    na = a.norm
    dc = decay_constants(h, mu)
    rows = []
    for l in l_grid:
        keep = lt.ball(lat, a.support, l)
        diff = haar_localize(at, keep, h.n, h.local_dim) - at
        leak = operator_norm(diff, hermitian=True)
        comp = [i for i in range(h.n) if i not in keep]
        if comp:
            bound = min(2 * na, lr_envelope(dc, a.support, comp, lat, na, 1.0, t))
        else:
            bound = 0.0
        rows.append((float(l), float(leak), float(bound)))
    return rows


def distance_profile(h: HamiltonianSpec, site_a: int, t: float, op=None):
    """|[A(t), B_d]| against distance d, with the curvature of log|.| in d.

    A negative fitted curvature indicates decay faster than a single exponential.
    """
    from .operators import PAULI
    op = PAULI["Z"] if op is None else op
    a = LocalOperator((site_a,), op, "A")
    lat = h.lattice
    sd = diagonalize(h)
    rows = []
    for j in range(h.n):
        d = lat.dist(site_a, j)
        if d <= 0:
            continue
        val = commutator_norms(h, a, LocalOperator((j,), op, "B"), [t], route="dense", sd=sd)[0]
        rows.append((d, float(val)))
    rows.sort()
    ds = np.array([r[0] for r in rows])
    vs = np.array([r[1] for r in rows])
    good = vs > 1e-13
    curvature = float("nan")
    if good.sum() >= 3:
        curvature = float(np.polyfit(ds[good], np.log(vs[good]), 2)[0])
    return rows, curvature
