"""Ground-state correlation decay against the gap-and-light-cone bound."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import exp1

from .. import lattice as lt
from ..dynamics import commutator_norms, lr_envelope, lr_velocity
from ..errors import DomainError
from ..filters import gaussian_window
from ..models import HamiltonianSpec, decay_constants
from ..operators import LocalOperator, embed
from ..spectral import SpectralData, diagonalize, ground_projector, positive_energy_part


@dataclass
class CorrelationReport:
    """Connected correlators against the fitted bound, one row per pair.

    Attributes
    ----------
    pairs : list of tuple
        (X, Y, l, connected_value, bound_value).
    q_used : float
    gap : float
    constant : float
        Bound constant fitted at the first pair.
    """

    pairs: list
    q_used: float
    gap: float
    constant: float = float("nan")
    diagnostics: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(abs(p[3]) <= p[4] * (1 + 1e-12) for p in self.pairs[1:])

    @property
    def monotone(self):
        v = [abs(p[3]) for p in self.pairs]
        return all(b < a for a, b in zip(v, v[1:]))


def bound_shape(h: HamiltonianSpec, x, y, gap, mu=1.0, norm_a=1.0, norm_b=1.0):
    """exp(-l dE / 2 v_LR) + min(|X|, |Y|) exp(-mu l), times |A| |B|."""
    lat = h.lattice
    l = lt.set_distance(lat, x, y)
    v = lr_velocity(decay_constants(h, mu))
    return float((np.exp(-l * gap / (2 * v)) + min(len(x), len(y)) * np.exp(-mu * l))
                 * norm_a * norm_b)


def windowed_positive_part(sd: SpectralData, b, q):
    """B~+ with elements B_ij W(E_i - E_j), W the Gaussian-smoothed step at width dE/sqrt(q)."""
    sd.require_full("the windowed positive part")
    win = gaussian_window(q, sd.gap)
    e = sd.energies
    return sd.from_energy_basis(sd.to_energy_basis(b) * win.fourier(e[:, None] - e[None, :]))


def window_error(sd: SpectralData, b, q):
    """|(B+ - B~+) psi0| / |B| for the unique ground state."""
    psi = sd.ground_states[:, 0]
    bp = positive_energy_part(sd, b)
    bt = windowed_positive_part(sd, b, q)
    nb = np.linalg.norm(b, 2)
    return float(np.linalg.norm((bp - bt) @ psi) / nb)


def window_scaling(h: HamiltonianSpec, b: LocalOperator, qs=(4.0, 9.0, 16.0), sd=None):
    """Window error against C exp(-q/2) with C fitted at the first q.

    The operator is centered (its ground-state mean removed) first.
    """
    if sd is None:
        sd = diagonalize(h)
    if sd.k != 1:
        raise DomainError("window scaling needs a unique ground state")
    bm = embed(b, h.n)
    psi = sd.ground_states[:, 0]
    bm = bm - np.vdot(psi, bm @ psi) * np.eye(bm.shape[0])
    rows = [(float(q), window_error(sd, bm, q)) for q in qs]
    c = rows[0][1] / np.exp(-rows[0][0] / 2)
    checks = [(q, err, c * np.exp(-q / 2), err <= c * np.exp(-q / 2)) for q, err in rows[1:]]
    return {"rows": rows, "constant": float(c), "checks": checks,
            "passed": all(ch[3] for ch in checks), "gap": sd.gap}


def _connected(sd, am, bm, variant):
    g = sd.ground_states
    if variant == "unique":
        psi = g[:, 0]
        ab = np.vdot(psi, am @ (bm @ psi))
        return complex(ab - np.vdot(psi, am @ psi) * np.vdot(psi, bm @ psi))
    p0 = ground_projector(sd)
    vals = []
    for k in range(g.shape[1]):
        psi = g[:, k]
        vals.append(np.vdot(psi, am @ (bm @ psi)) - np.vdot(psi, am @ (p0 @ (bm @ psi))))
    return complex(max(vals, key=abs))


def light_cone_split(h: HamiltonianSpec, a: LocalOperator, b: LocalOperator, q, sd=None,
                     mu=1.0, nodes=24):
    """Split (1/2pi) int |[A, B(t)]| exp(-(t dE)^2/2q)/|t| dt at |t| = l / v_LR.

    Returns the two numerical pieces, the Lieb-Robinson bound on the inner piece
    and the Gaussian bound (|A||B|/pi) E1(x), x = (l dE/v_LR)^2 / 2q, on the outer one.
    """
    if sd is None:
        sd = diagonalize(h)
    lat = h.lattice
    l = lt.set_distance(lat, a.support, b.support)
    dc = decay_constants(h, mu)
    v = lr_velocity(dc)
    de = sd.gap
    t_split = l / v
    t_end = t_split + np.sqrt(2 * q * 40.0) / de
    xg, wg = np.polynomial.legendre.leggauss(nodes)

    def gauss(t0, t1):
        return 0.5 * (t1 - t0) * xg + 0.5 * (t1 + t0), 0.5 * (t1 - t0) * wg

    kern = lambda t: np.exp(-(t * de) ** 2 / (2 * q)) / t
    ti, wi = gauss(0.0, t_split)
    to, wo = gauss(t_split, t_end)
    # |[A, B(t)]| = |[A(-t), B]|; both signs of t are averaged
    def both(ts):
        return 0.5 * (commutator_norms(h, a, b, ts, route="dense", sd=sd)
                      + commutator_norms(h, a, b, -ts, route="dense", sd=sd))

    ci, co = both(ti), both(to)
    inner = float(np.sum(wi * ci * kern(ti)) / np.pi)
    outer = float(np.sum(wo * co * kern(to)) / np.pi)
    env = np.array([lr_envelope(dc, a.support, b.support, lat, a.norm, b.norm, t) for t in ti])
    inner_bound = float(np.sum(wi * np.minimum(env, 2 * a.norm * b.norm) * kern(ti)) / np.pi)
    x = (l * de / v) ** 2 / (2 * q)
    outer_bound = float(a.norm * b.norm * exp1(x) / np.pi)
    return {"l": float(l), "q": float(q), "t_split": float(t_split), "inner": inner,
            "outer": outer, "inner_bound": inner_bound, "outer_bound": outer_bound,
            "gaussian_factor": float(np.exp(-x)),
            "passed": inner <= inner_bound * (1 + 1e-9) and outer <= outer_bound * (1 + 1e-9)}


def correlation_decay_check(h: HamiltonianSpec, a_x: LocalOperator, b_y: LocalOperator,
                            q=None, sd=None, variant="unique", mu=1.0):
    """One pair: connected correlator, window diagnostics and the bound shape.

    Parameters
    ----------
    variant : {'unique', 'projector'}
        'projector' subtracts <A P0 B> in each ground state instead of <A><B>.
    q : float, optional
        Window parameter; defaults to l dE / v_LR.

    Returns
    -------
    dict with keys X, Y, l, value, shape, q, window_error, commutator_value.
    """
    lat = h.lattice
    l = lt.set_distance(lat, a_x.support, b_y.support)
    if l <= 0:
        raise DomainError("correlation decay needs dist(X, Y) > 0")
    if sd is None:
        sd = diagonalize(h)
    if variant == "unique" and sd.k != 1:
        raise DomainError(f"ground space has dimension {sd.k}; use variant='projector'")
    if variant not in ("unique", "projector"):
        raise DomainError(f"unknown variant {variant!r}")
    am, bm = embed(a_x, h.n), embed(b_y, h.n)
    value = _connected(sd, am, bm, variant)
    v = lr_velocity(decay_constants(h, mu))
    if q is None:
        q = max(l * sd.gap / v, 1e-3)
    out = {"X": a_x.support, "Y": b_y.support, "l": float(l), "value": value, "q": float(q),
           "shape": bound_shape(h, a_x.support, b_y.support, sd.gap, mu, a_x.norm, b_y.norm)}
    if variant == "unique":
        psi = sd.ground_states[:, 0]
        eye = np.eye(am.shape[0])
        ac = am - np.vdot(psi, am @ psi) * eye
        bc = bm - np.vdot(psi, bm @ psi) * eye
        out["window_error"] = window_error(sd, bc, q)
        bt = windowed_positive_part(sd, bc, q)
        out["commutator_value"] = complex(np.vdot(psi, (ac @ bt - bt @ ac) @ psi))
    return out


def correlation_scan(h: HamiltonianSpec, site_a: int, separations, op=None, sd=None,
                     variant="unique", mu=1.0) -> CorrelationReport:
    """Correlators between ``op`` at site_a and at site_a + l, bound fitted at the first l."""
    from ..operators import PAULI
    op = PAULI["Z"] if op is None else op
    if sd is None:
        sd = diagonalize(h, n_ground=2 if variant == "projector" else None)
    a = LocalOperator((site_a,), op, "A")
    rows = []
    for l in separations:
        j = site_a + int(l)
        if j >= h.n:
            raise DomainError(f"site {j} outside the {h.n}-site lattice")
        rows.append(correlation_decay_check(h, a, LocalOperator((j,), op, "B"), sd=sd,
                                            variant=variant, mu=mu))
    c = abs(rows[0]["value"]) / rows[0]["shape"]
    pairs = [(r["X"], r["Y"], r["l"], float(abs(r["value"])), c * r["shape"]) for r in rows]
    diag = {"rows": rows}
    return CorrelationReport(pairs, float(rows[0]["q"]), sd.gap, float(c), diag)
