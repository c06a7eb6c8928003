"""Protocol adapters: config in, assertions + measured values + tables out."""
from __future__ import annotations

import operator
from dataclasses import dataclass, field

import numpy as np

from .. import lattice as lt
from .. import models as md
from ..dynamics import leakage_profile, verify_lr
from ..errors import SchemaError
from ..filters import build_bump_g, build_F, numeric_fourier_F, window_tail_fit
from ..operators import PAULI, SX, SZ, LocalOperator, embed, embed_sum
from ..qac import ParamPath, projector_flow_check, qac_operator_spectral, qac_operator_time
from ..spectral import diagonalize


@dataclass
class Outcome:
    assertions: list = field(default_factory=list)
    measured: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)

    def check(self, name, value, op, tol):
        """Record ``value op tol``; ``op`` is one of <=, >=, ==, <, >, in."""
        if op == "in":
            lo, hi = tol
            ok = lo <= value <= hi
        else:
            ok = {"<=": operator.le, ">=": operator.ge, "<": operator.lt, ">": operator.gt,
                  "==": operator.eq}[op](value, tol)
        self.assertions.append({"name": name, "measured": value, "op": op,
                                "tolerance": list(tol) if op == "in" else tol,
                                "passed": bool(ok)})
        return ok


REGISTRY = {}


def protocol(name):
    def deco(fn):
        REGISTRY[name] = fn
        return fn
    return deco


# ---------------------------------------------------------------- models

def build_model(model: dict, **overrides) -> md.HamiltonianSpec:
    p = dict(model)
    p.update(overrides)
    name = p.get("name", "none")
    get = p.get
    if name == "tfim":
        h = md.build_tfim(int(p["n"]), float(get("j", 1.0)), float(get("b", 1.0)),
                          float(get("h_field", 0.0)), bool(get("periodic", False)))
    elif name == "heisenberg":
        h = md.build_heisenberg_ring(int(p["n"]))
    elif name == "majumdar_ghosh":
        h = md.build_majumdar_ghosh(int(p["n"]), float(get("j2", 0.5)))
    elif name == "xxz":
        h = md.build_xxz_chain(int(p["n"]), float(get("delta", 2.0)), float(get("jxy", 1.0)),
                               bool(get("periodic", False)))
    elif name == "toric":
        h = md.build_toric_code(int(get("lx", 2)), int(get("ly", 2)))
    elif name == "two_level":
        h = md.build_single_site(np.diag([0.0, float(get("splitting", 2.0))]), "two_level")
    elif name == "custom":
        if "edges" in p:
            lat = lt.read_edge_list(p["edges"])
        else:
            n = int(p["n"])
            lat = lt.chain_periodic(n) if get("geometry") == "chain_periodic" else lt.chain_open(n)
        h = md.read_term_file(p["terms"], lat)
    else:
        raise SchemaError(f"protocol needs a model; got {name!r}")
    if get("field_x"):
        h = h.plus(md.single_site_field(h.lattice, SX, float(p["field_x"]), "fx"))
    if get("field_z"):
        h = h.plus(md.single_site_field(h.lattice, SZ, float(p["field_z"]), "fz"))
    return h


def _n_ground(cfg):
    v = cfg.model.get("n_ground")
    return int(v) if v else None


def _op(name):
    key = str(name)
    mats = {"X": PAULI["X"], "Y": PAULI["Y"], "Z": PAULI["Z"], "Sx": SX, "Sz": SZ}
    if key not in mats:
        raise SchemaError(f"unknown single-site operator {key!r}")
    return mats[key]


# ---------------------------------------------------------------- protocols

@protocol("lr_verify")
def _lr_verify(cfg, out: Outcome):
    h = build_model(cfg.model)
    op = _op(cfg.param("operator", "Z"))
    a = LocalOperator((int(cfg.param("a_site", 0)),), op, "A")
    b = LocalOperator((int(cfg.param("b_site", h.n - 1)),), op, "B")
    mu = float(cfg.param("mu", 1.0))
    rep = verify_lr(h, a, b, cfg.grid("t", np.arange(31) * 0.1), mu, cfg.param("route", "auto"))
    ratio = rep.ratio()
    out.measured.update({"s": rep.constants.s, "mu": mu, "v_lr": rep.v_lr,
                         "max_ratio": float(ratio.max()), "max_lhs": float(rep.lhs_norms.max())})
    out.check("lr_violations", rep.violations, "<=", int(cfg.tol("violations", 0)))
    out.check("lr_ceiling", float(rep.lhs_norms.max()), "<=", rep.ceiling * (1 + 1e-9))
    out.tables["lr"] = (["t", "lhs", "rhs", "ratio"],
                        list(zip(rep.times, rep.lhs_norms, rep.rhs_bounds, ratio)))


@protocol("leakage")
def _leakage(cfg, out: Outcome):
    h = build_model(cfg.model)
    a = LocalOperator((int(cfg.param("a_site", h.n // 2)),), _op(cfg.param("operator", "Z")), "A")
    mu = float(cfg.param("mu", 1.0))
    sd = diagonalize(h)
    diam = h.lattice.diameter
    l_grid = cfg.grid("l", np.arange(0, int(np.ceil(diam)) + 1))
    tol = cfg.tol("leakage", 1e-12)
    rows = []
    for t in cfg.grid("t", [0.5, 1.0, 2.0]):
        prof = leakage_profile(h, a, float(t), l_grid, mu, sd)
        leaks = np.array([r[1] for r in prof])
        worst_rise = float(np.max(np.diff(leaks), initial=0.0))
        full = [r[1] for r in prof if r[0] >= diam]
        out.check(f"monotone_t{t:g}", worst_rise, "<=", tol)
        out.check(f"zero_at_full_t{t:g}", float(max(full) if full else np.nan), "<=", tol)
        out.check(f"ceiling_t{t:g}", float(leaks.max()), "<=", 2 * a.norm * (1 + 1e-12))
        out.check(f"lr_bound_t{t:g}", float(max(r[1] - r[2] for r in prof)), "<=", tol)
        rows += [(float(t),) + r for r in prof]
    out.tables["leakage"] = (["t", "l", "leakage", "bound"], rows)


@protocol("corr_decay")
def _corr_decay(cfg, out: Outcome):
    from ..protocols.correlation import correlation_scan, window_scaling
    h = build_model(cfg.model)
    variant = cfg.param("variant", "unique")
    sd = diagonalize(h, n_ground=_n_ground(cfg))
    out.measured["gap"] = sd.gap
    out.measured["ground_degeneracy"] = sd.k
    site = int(cfg.param("a_site", 1))
    op = _op(cfg.param("operator", "Z"))
    seps = cfg.grid("l", np.arange(3, 8))
    rep = correlation_scan(h, site, [int(x) for x in seps], op=op, sd=sd, variant=variant)
    out.measured["bound_constant"] = rep.constant
    out.tables["correlation"] = (["l", "connected", "bound"], [(p[2], p[3], p[4]) for p in rep.pairs])
    if variant == "unique":
        vals = [p[3] for p in rep.pairs]
        rise = max(b - a for a, b in zip(vals, vals[1:]))
        out.check("corr_monotone", float(rise), "<", 0.0)
        for p in rep.pairs[1:]:
            out.check(f"corr_bound_l{p[2]:g}", p[3], "<=", p[4])
        b_site = int(cfg.param("window_site", site + int(seps[-1])))
        ws = window_scaling(h, LocalOperator((b_site,), op, "B"), cfg.grid("q", [4.0, 9.0, 16.0]), sd)
        out.measured["window_constant"] = ws["constant"]
        for q, err, bound, _ in ws["checks"]:
            out.check(f"window_q{q:g}", err, "<=", float(bound))
        out.tables["window"] = (["q", "error_over_norm"], ws["rows"])
    else:
        out.measured["max_projector_residual"] = max(p[3] for p in rep.pairs)


@protocol("filters")
def _filters(cfg, out: Outcome):
    g = build_bump_g(n_freq=int(cfg.param("n_freq", 4096)))
    F = build_F(g)
    w = np.linspace(1.0, 10.0, int(cfg.param("n_omega", 100)))
    fp, fm = numeric_fourier_F(F, w), numeric_fourier_F(F, -w)
    f0 = numeric_fourier_F(F, [0.0])[0]
    t = F.times
    odd_t = float(np.abs(F.time(-t) + F.time(t)).max())
    odd_w = float(np.abs(fp + fm).max())
    out.measured.update({"t_max": F.t_max, "integral_g": g.diagnostics["integral"],
                         "abs_F_at_40": F.diagnostics["abs_F_at_40"]})
    out.check("fourier_exact", float(max(np.abs(fp + 1 / w).max(), np.abs(fm - 1 / w).max())),
              "<=", cfg.tol("fourier", 1e-6))
    out.check("fourier_zero", float(abs(f0)), "<=", cfg.tol("fourier_zero", 1e-8))
    out.check("odd_time", odd_t, "<=", cfg.tol("oddness", 1e-12))
    out.check("odd_fourier", odd_w, "<=", cfg.tol("oddness", 1e-12))
    out.check("tail_bound", F.diagnostics["tail_bound_max_excess"], "<=", F.quadrature_error_budget)
    out.check("integral_g", abs(g.diagnostics["integral"] - 1), "<=", cfg.tol("integral", 1e-9))
    qs = cfg.grid("q", [4.0, 9.0, 16.0])
    c, rows = window_tail_fit(qs, float(cfg.param("delta_e", 1.0)))
    out.measured["window_constant"] = c
    for q, dev in rows[1:]:
        out.check(f"window_tail_q{q:g}", dev, "<=", float(c * np.exp(-q / 2)))
    out.tables["filter_F_time"] = (["t", "re", "im"], F.time_table().tolist())
    out.tables["filter_F_fourier"] = (["omega", "closed_form", "numeric"],
                                      list(zip(w, F.fourier(w), fp)))


@protocol("qac_check")
def _qac_check(cfg, out: Outcome):
    h = build_model(cfg.model)
    sd = diagonalize(h)
    which = str(cfg.param("operator", "X"))
    if which == "field_x":
        o = embed_sum(md.single_site_field(h.lattice, SX, 1.0), h.n)
    else:
        o = embed(LocalOperator((0,), _op(which), which), h.n)
    de = float(cfg.param("delta_e", sd.gap))
    F = build_F(build_bump_g())
    ds = qac_operator_spectral(sd, o, F, de)
    dt = qac_operator_time(h, o, F, de)
    diff = float(np.abs(ds.matrix - dt.matrix).max())
    out.measured.update({"gap": sd.gap, "delta_e": de, "max_abs_d": float(np.abs(ds.matrix).max())})
    out.check("spectral_vs_time", diff, "<=", cfg.tol("agreement", 1e-6))
    if h.n == 1 and which == "X":
        e = sd.energies
        idm = 1j * sd.to_energy_basis(ds.matrix)
        o10 = sd.to_energy_basis(o)[1, 0]
        out.check("perturbation_formula", float(abs(idm[1, 0] - o10 / (e[0] - e[1]))), "<=", 1e-9)


@protocol("flow")
def _flow(cfg, out: Outcome):
    b0, b1 = float(cfg.param("b_start", 2.0)), float(cfg.param("b_end", 1.8))
    base = dict(cfg.model)

    def builder(s):
        return build_model(base, b=b0 + (b1 - b0) * s)

    def derivative(s):
        h = builder(s)
        return md.single_site_field(h.lattice, SX, b1 - b0, "db")

    F = build_F(build_bump_g())
    steps = [int(x) for x in cfg.grid("steps", [32, 64])]
    res = []
    for n in steps:
        path = ParamPath(builder, np.linspace(0, 1, n + 1), derivative=derivative)
        r = projector_flow_check(path, F)
        res.append(r["max_residual"])
        out.measured[f"residual_h{n}"] = r["max_residual"]
        out.measured["min_gap"] = r["min_gap"]
        out.measured["delta_e"] = r["delta_e"]
    out.check(f"flow_residual_h{steps[0]}", res[0], "<=", cfg.tol("residual", 1e-3))
    for a, b, n in zip(res, res[1:], steps[1:]):
        out.check(f"flow_ratio_h{n}", float(a / b), "in",
                  (cfg.tol("ratio_low", 3.2), cfg.tol("ratio_high", 4.8)))
    out.tables["flow"] = (["steps", "residual"], list(zip(steps, res)))


@protocol("lsm")
def _lsm(cfg, out: Outcome):
    from ..protocols.lsm import lsm_twist_state, mg_exercise
    tol = cfg.tol("eigen", 1e-8)
    if cfg.param("mode", "scan") == "mg_exercise":
        h = build_model(cfg.model)
        r = mg_exercise(h, tol=tol)
        out.measured.update({k: r[k] for k in ("gap", "distance", "t_sym", "t_anti", "t_lsm")})
        out.check("mg_degeneracy", r["ground_degeneracy"], "==", 2)
        out.check("mg_distance", r["distance"], "<=", r["threshold"])
        out.check("mg_t_sym", float(abs(r["t_sym"] - 1)), "<=", tol)
        out.check("mg_t_anti", float(abs(r["t_anti"] + 1)), "<=", tol)
        out.check("mg_t_lsm", float(abs(r["t_lsm"] + 1)), "<=", tol)
        return
    rows = []
    sizes = [int(x) for x in cfg.grid("n", [6, 8, 10, 12])]
    for n in sizes:
        h = build_model(cfg.model, n=n)
        _, r = lsm_twist_state(h, tol=tol)
        out.check(f"lsm_orthogonal_n{n}", r["overlap"], "<=", tol)
        out.check(f"lsm_t_eigenvalue_n{n}", float(abs(r["t_eigenvalue"] + r["z"])), "<=", tol)
        rows.append((n, r["rho"], r["z"].real, r["overlap"], r["energy_excess"],
                     r["n_times_excess"], r["max_term_excess"]))
    ne = np.array([r[5] for r in rows])
    spread = float((ne.max() - ne.min()) / ne.min())
    exponent = float(-np.polyfit(np.log(sizes), np.log([r[6] for r in rows]), 1)[0])
    out.measured.update({"n_excess_spread": spread, "term_exponent": exponent})
    out.check("lsm_excess_spread", spread, "<", cfg.tol("spread", 0.2))
    out.check("lsm_term_exponent", exponent, "in", (1.7, 2.3))
    out.tables["lsm"] = (["n", "rho", "z", "overlap", "excess", "n_excess", "max_term_excess"], rows)


@protocol("flux")
def _flux(cfg, out: Outcome):
    from ..protocols.flux import flux_flow_experiment, flux_spectrum_check
    h = build_model(cfg.model)
    tol = cfg.tol("spectrum", 1e-9)
    r = flux_spectrum_check(h, cfg.grid("theta", [np.pi / 3, np.pi]), tol)
    for th, err in r["rows"]:
        out.check(f"flux_spectrum_theta{th:.6f}", err, "<=", tol)
    out.check("flux_periodicity", r["periodicity_error"], "<=", tol)
    out.tables["flux_spectrum"] = (["theta", "max_eig_diff"], r["rows"])
    steps = int(cfg.param("flow_steps", 0))
    if steps:
        f = flux_flow_experiment(h, build_F(build_bump_g()), n_steps=steps)
        out.measured.update({k: f[k] for k in ("commutation_error", "w_amplitude", "phase_error",
                                               "w1_energy_excess", "w1_ground_weight", "gap")})
        if f["ground_degeneracy"] > 1:
            out.check("flux_w1_excess_below_gap", f["w1_energy_excess"], "<", f["gap"])
        else:
            out.check("flux_w_amplitude", f["w_amplitude"], ">=", cfg.tol("amplitude", 0.9))
            out.check("flux_w_phase", f["phase_error"], "<=", cfg.tol("phase", 0.1))


@protocol("topo")
def _topo(cfg, out: Outcome):
    from ..protocols.topo import topo_order_metric
    h = build_model(cfg.model)
    sd = diagonalize(h, n_ground=_n_ground(cfg))
    out.measured.update({"ground_degeneracy": sd.k, "gap": sd.gap})
    if "degeneracy" in cfg.tolerances:
        out.check("topo_degeneracy", sd.k, "==", int(cfg.tolerances["degeneracy"]))
    l = float(cfg.param("l", 1))
    family = None
    if cfg.param("operator"):
        op = _op(cfg.param("operator"))
        family = [LocalOperator((i,), op, f"{cfg.param('operator')}@{i}") for i in range(h.n)]
    rep = topo_order_metric(sd, l, h.lattice, str(cfg.param("family", "single_site")),
                            seed=cfg.seed, family=family)
    out.measured.update({"epsilon": rep.epsilon, "family_size": rep.family_size,
                         "truncated": rep.truncated, "worst": rep.worst.label})
    if "epsilon_max" in cfg.tolerances:
        out.check("topo_epsilon_max", rep.epsilon, "<=", cfg.tolerances["epsilon_max"])
    if "epsilon_min" in cfg.tolerances:
        out.check("topo_epsilon_min", rep.epsilon, ">=", cfg.tolerances["epsilon_min"])
    if cfg.param("connected_diagnostic", False):
        rc = topo_order_metric(sd, l, h.lattice, "connected", seed=cfg.seed)
        out.measured.update({"epsilon_connected": rc.epsilon, "connected_size": rc.family_size,
                             "connected_worst": rc.worst.label})
    out.tables["topo"] = (["operator", "z", "deviation"], rep.per_operator)


@protocol("topo_evolve")
def _topo_evolve(cfg, out: Outcome):
    from ..protocols.topo import product_pair, topo_order_under_evolution
    h_ev = build_model(cfg.model)
    init = cfg.param("initial", "toric")
    if init == "toric":
        base = dict(cfg.model)
        base.pop("field_x", None)
        base.pop("field_z", None)
        states = diagonalize(build_model(base)).ground_states
    elif init == "product_pair":
        states = product_pair(h_ev.n)
    else:
        raise SchemaError(f"unknown initial states {init!r}")
    rep = topo_order_under_evolution(states, h_ev, float(cfg.param("t", 0.5)),
                                     float(cfg.param("l", 1)), float(cfg.param("m", 1)),
                                     kind=str(cfg.param("family", "single_site")), seed=cfg.seed)
    out.measured.update({"epsilon": rep.epsilon, **rep.extra})
    out.check("evolve_bound", rep.epsilon, "<=", rep.extra["bound"] + 1e-12)
    if "epsilon_max" in cfg.tolerances:
        out.check("evolve_epsilon_max", rep.epsilon, "<=", cfg.tolerances["epsilon_max"])
    if "epsilon_min" in cfg.tolerances:
        out.check("evolve_epsilon_min", rep.epsilon, ">=", cfg.tolerances["epsilon_min"])
    out.tables["topo_evolve"] = (["operator", "z", "deviation"], rep.per_operator)


@protocol("string_sig")
def _string_sig(cfg, out: Outcome):
    from ..protocols.topo import string_operator_signature
    h = build_model(cfg.model)
    sd = diagonalize(h)
    tol = cfg.tol("signature", 1e-9)
    r = string_operator_signature(h, sd, tol)
    out.measured.update({k: r[k] for k in ("E", "M", "E1E2", "E1ME2", "Wy")})
    out.check("string_degeneracy", sd.k, "==", 4)
    out.check("string_E", float(abs(r["E"] - 1)), "<=", tol)
    out.check("string_M", float(abs(r["M"] - 1)), "<=", tol)
    out.check("string_E1E2", float(abs(r["E1E2"] - r["E"])), "<=", tol)
    out.check("string_E1ME2", float(abs(r["E1ME2"] + 1)), "<=", tol)
    out.check("string_anticommute", r["anticommutator_E1_M"], "<=", tol)
    out.check("string_commute", r["commutator_E_M"], "<=", tol)


@protocol("goldstone")
def _goldstone(cfg, out: Outcome):
    from ..protocols.goldstone import goldstone_check
    h = build_model(cfg.model)
    site = int(cfg.param("a_site", 1))
    seps = [int(x) for x in cfg.grid("l", np.arange(1, h.n - site))]
    r = goldstone_check(h, site, seps, decay_factor=cfg.tol("decay_factor", 5.0))
    out.measured.update({"decay_ratio": r["decay_ratio"], "gap": r["gap"],
                         "ground_degeneracy": r["ground_degeneracy"]})
    out.check("goldstone_vector", r["vector_error"], "<=", 1e-12)
    out.check("goldstone_decay_ratio", r["decay_ratio"], ">=", cfg.tol("decay_factor", 5.0))
    worst = max(err - bound for _, err, bound in r["derivative_rows"])
    out.check("goldstone_derivative", float(worst), "<=", 0.0)
    out.tables["goldstone"] = (["l", "abs_corr"], r["rows"])


@protocol("stability")
def _stability(cfg, out: Outcome):
    from ..protocols.stability import stability_bound_check
    h = build_model(cfg.model)
    coupling = float(cfg.param("v_coupling", 1.0))
    vop = _op(cfg.param("v_operator", "Sz"))
    v = md.single_site_field(h.lattice, vop, coupling, "v") if coupling else []
    r = stability_bound_check(h, v, n_points=int(cfg.param("n_points", 21)))
    out.measured.update({"gap0": r["gap0"], "v_norm": r["v_norm"], "s0": r["s0"]})
    margin = min(g - lo for _, g, lo in r["rows"])
    out.check("stability_pointwise", float(margin), ">=", -cfg.tol("gap", 1e-10))
    half = min(g for s, g, _ in r["rows"] if s <= r["s0"]) - r["gap0"] / 2
    out.check("stability_half_gap", float(half), ">=", -cfg.tol("gap", 1e-10))
    out.tables["stability"] = (["s", "gap", "lower_bound"], r["rows"])


@protocol("repro_const")
def _repro_const(cfg, out: Outcome):
    kernel = str(cfg.param("kernel", "exp"))
    alpha = float(cfg.param("alpha", 3.0))
    mu = float(cfg.param("mu", 1.0))
    funcs = {"one": lambda r: np.ones_like(r), "exp": lambda r: np.exp(-mu * r),
             "power": lambda r: (1 + r) ** (-alpha),
             "exp_power": lambda r: np.exp(-mu * r) * (1 + r) ** (-alpha)}
    if kernel not in funcs:
        raise SchemaError(f"unknown kernel {kernel!r}")
    rows = []
    for n in [int(x) for x in cfg.grid("n", [8, 16, 32])]:
        lat = lt.chain_periodic(n) if cfg.param("periodic", False) else lt.chain_open(n)
        rows.append((n, lt.reproducing_constant(lat, funcs[kernel])))
    out.measured["lambdas"] = {str(n): lam for n, lam in rows}
    if kernel == "one":
        for n, lam in rows:
            out.check(f"repro_ones_n{n}", float(abs(lam - n)), "<=", 1e-9 * n)
    out.tables["repro"] = (["n", "lambda"], rows)
