"""Elementary gap stability under a bounded perturbation."""
from __future__ import annotations

import numpy as np

from ..models import HamiltonianSpec
from ..operators import embed_sum, operator_norm
from ..spectral import diagonalize


def stability_bound_check(h0: HamiltonianSpec, v_terms, s_grid=None, n_points=21, tol=1e-10):
    """Gap of H0 + s V against dE(0) - 2 s |V| on [0, s0], s0 = dE(0) / 4|V|.

    The ground-sector size is held at its s = 0 value along the grid.
    """
    sd0 = diagonalize(h0, cache=None)
    k = sd0.k
    vm = embed_sum(v_terms, h0.n, "dense" if h0.dim <= 4096 else "sparse") if v_terms else None
    vnorm = operator_norm(vm) if vm is not None else 0.0
    gap0 = sd0.gap
    s0 = gap0 / (4 * vnorm) if vnorm > 0 else float("inf")
    if s_grid is None:
        s_grid = np.linspace(0.0, s0 if np.isfinite(s0) else 1.0, n_points)
    rows = []
    for s in s_grid:
        h = h0.plus(v_terms, scale=float(s)) if v_terms else h0
        sd = diagonalize(h, n_ground=k, cache=None)
        lower = gap0 - 2 * s * vnorm
        rows.append((float(s), float(sd.gap), float(lower)))
    pointwise = all(g >= lo - tol for _, g, lo in rows)
    half = all(g >= gap0 / 2 - tol for s, g, _ in rows if s <= s0)
    return {"rows": rows, "gap0": gap0, "v_norm": vnorm, "s0": s0, "k": k,
            "pointwise": pointwise, "half_gap": half, "passed": pointwise and half}
