"""Built-in Hamiltonians, charges and the decay constants of their interactions."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import lattice as lt
from .errors import DomainError
from .operators import (ID2, PAULI, SM, SP, SX, SY, SZ, LocalOperator, embed,
                        embed_sum, is_hermitian, kron_all, operator_norm)

CHARGE_SZ = SZ + 0.5 * ID2  # q_i = S^z_i + 1/2, eigenvalues {1, 0}


@dataclass(eq=False)
class HamiltonianSpec:
    """Sum of local terms on a lattice, optionally with a conserved charge.

    Attributes
    ----------
    lattice : Lattice
    terms : list of LocalOperator
    charge : list of ndarray or None
        Single-site charge densities q_i, one per site.
    params : dict
        Named model parameters.
    name : str
    """

    lattice: lt.Lattice
    terms: list
    charge: list | None = None
    params: dict = field(default_factory=dict)
    name: str = "custom"
    local_dim: int = 2

    def __post_init__(self):
        self._cache = {}
        n = self.lattice.site_count
        for t in self.terms:
            if any(s >= n or s < 0 for s in t.support):
                raise DomainError(f"term {t.label!r} support {t.support} outside lattice")
            if not t.is_hermitian(1e-12 * max(1.0, np.abs(t.matrix).max())):
                raise DomainError(f"term {t.label!r} is not Hermitian")
        if self.charge is not None and len(self.charge) != n:
            raise DomainError("charge needs one density per site")

    @property
    def n(self):
        return self.lattice.site_count

    @property
    def dim(self):
        return self.local_dim ** self.n

    def matrix(self, fmt="dense"):
        """Full Hamiltonian matrix; real dtype when every term is real."""
        if fmt not in self._cache:
            m = embed_sum(self.terms, self.n, fmt)
            if fmt == "dense":
                m.setflags(write=False)
            self._cache[fmt] = m
        return self._cache[fmt]

    @property
    def is_real(self):
        return all(np.isrealobj(t.matrix) or not np.any(t.matrix.imag) for t in self.terms)

    def grouped_terms(self):
        """Terms summed by support set: {sorted support: LocalOperator}."""
        out = {}
        for t in self.terms:
            c = t.canonical()
            if c.support in out:
                prev = out[c.support]
                out[c.support] = LocalOperator(c.support, prev.matrix + c.matrix,
                                               prev.label + "+" + c.label, self.local_dim)
            else:
                out[c.support] = c
        return out

    def charge_ops(self):
        if self.charge is None:
            raise DomainError(f"model {self.name!r} has no conserved charge")
        return [LocalOperator((i,), q, f"q{i}", self.local_dim) for i, q in enumerate(self.charge)]

    def charge_operator(self, fmt="dense", sites=None):
        """Q = sum of q_i over ``sites`` (all sites by default)."""
        ops = self.charge_ops()
        if sites is not None:
            ops = [ops[i] for i in sites]
        return embed_sum(ops, self.n, fmt)

    def validate_charge(self, q_max=None, tol=1e-10):
        """Check integer charge spectra, the bound q_max and [Q, H] = 0."""
        report = {}
        qs = [np.linalg.eigvalsh(q) for q in self.charge]
        report["integer_spectrum"] = all(np.allclose(e, np.round(e), atol=tol) for e in qs)
        report["q_max"] = max(float(np.abs(e).max()) for e in qs)
        fmt = "dense" if self.dim <= 4096 else "sparse"
        h, q = self.matrix(fmt), self.charge_operator(fmt)
        report["commutator_norm"] = operator_norm(q @ h - h @ q)
        report["ok"] = (report["integer_spectrum"] and report["commutator_norm"] <= tol
                        and (q_max is None or report["q_max"] <= q_max))
        return report

    def fingerprint(self):
        """Stable hash of the model content, used for caching."""
        hsh = hashlib.sha256()
        hsh.update(json.dumps({"name": self.name, "params": _jsonable(self.params),
                               "lattice": self.lattice.describe()}, sort_keys=True).encode())
        hsh.update(np.ascontiguousarray(self.lattice.metric).tobytes())
        for t in self.terms:
            hsh.update(repr(t.support).encode())
            hsh.update(np.ascontiguousarray(t.matrix, dtype=complex).tobytes())
        if self.charge is not None:
            for q in self.charge:
                hsh.update(np.ascontiguousarray(q, dtype=complex).tobytes())
        return hsh.hexdigest()

    def with_terms(self, terms, name=None, **params):
        p = dict(self.params)
        p.update(params)
        return HamiltonianSpec(self.lattice, list(terms), self.charge, p,
                               name or self.name, self.local_dim)

    def plus(self, extra, scale=1.0, name=None):
        """This Hamiltonian plus ``scale`` times the terms of ``extra``."""
        terms = list(self.terms) + [t.scaled(scale) for t in extra]
        return self.with_terms(terms, name=name)


def _jsonable(d):
    return {k: (float(v) if isinstance(v, (int, float, np.floating)) and not isinstance(v, bool) else v)
            for k, v in d.items()}


@dataclass(frozen=True)
class DecayConstants:
    """Constants mu and s with sum_{X contains i} |H_X| |X| exp(mu diam X) <= s."""

    mu: float
    s: float
    per_site: tuple = ()


def decay_constants(h: HamiltonianSpec, mu: float = 1.0) -> DecayConstants:
    """Exhaustive evaluation of the interaction decay sum at every site."""
    if mu <= 0:
        raise DomainError("mu must be positive")
    per_site = np.zeros(h.n)
    for sup, t in h.grouped_terms().items():
        w = operator_norm(t.matrix) * len(sup) * np.exp(mu * lt.set_diameter(h.lattice, sup))
        per_site[list(sup)] += w
    return DecayConstants(float(mu), float(per_site.max()), tuple(float(x) for x in per_site))


# ---------------------------------------------------------------- builders

def _bonds(n, periodic, r=1):
    bonds = [(i, i + r) for i in range(n - r)]
    if periodic:
        bonds += [(i, (i + r) % n) for i in range(n - r, n)]
    return bonds


def single_site_field(lat, matrix, coeff=1.0, label="f"):
    """Terms coeff * matrix on every site."""
    return [LocalOperator((i,), coeff * np.asarray(matrix), f"{label}{i}")
            for i in range(lat.site_count)]


def build_tfim(n: int, j: float = 1.0, b: float = 1.0, h_field: float = 0.0,
               periodic: bool = False) -> HamiltonianSpec:
    """-J sum S^z S^z + B sum S^x + H_field sum S^z."""
    if n < 2:
        raise DomainError("TFIM needs n >= 2")
    lat = lt.chain_periodic(n) if periodic else lt.chain_open(n)
    zz = np.kron(SZ, SZ)
    terms = [LocalOperator(bd, -j * zz, f"zz{bd[0]},{bd[1]}") for bd in _bonds(n, periodic)]
    terms += single_site_field(lat, SX, b, "x")
    if h_field != 0.0:
        terms += single_site_field(lat, SZ, h_field, "z")
    return HamiltonianSpec(lat, terms, None,
                           {"n": n, "j": j, "b": b, "h_field": h_field, "periodic": periodic}, "tfim")


def heisenberg_coupling(jxy=1.0, jz=1.0):
    """Real two-site matrix jxy (SxSx + SySy) + jz SzSz."""
    flip = 0.5 * (np.kron(SP, SM) + np.kron(SM, SP))
    return jxy * flip + jz * np.kron(SZ, SZ)


def build_heisenberg_ring(n: int) -> HamiltonianSpec:
    if n % 2 or n < 4:
        raise DomainError(
            "Heisenberg ring needs even n >= 4 so that half filling rho = 1/2 has an integer charge")
    lat = lt.chain_periodic(n)
    ss = heisenberg_coupling()
    terms = [LocalOperator(bd, ss, f"ss{bd[0]},{bd[1]}") for bd in _bonds(n, True)]
    return HamiltonianSpec(lat, terms, [CHARGE_SZ] * n, {"n": n}, "heisenberg")


def build_majumdar_ghosh(n: int, j2: float = 0.5) -> HamiltonianSpec:
    if n % 2 or n < 4:
        raise DomainError("Majumdar-Ghosh ring needs even n >= 4 for the dimer coverings")
    lat = lt.chain_periodic(n)
    ss = heisenberg_coupling()
    terms = [LocalOperator(bd, ss, f"ss{bd[0]},{bd[1]}") for bd in _bonds(n, True)]
    terms += [LocalOperator(bd, j2 * ss, f"nn{bd[0]},{bd[1]}") for bd in _bonds(n, True, 2)]
    return HamiltonianSpec(lat, terms, [CHARGE_SZ] * n, {"n": n, "j2": j2}, "majumdar_ghosh")


def build_xxz_chain(n: int, delta: float = 2.0, jxy: float = 1.0,
                    periodic: bool = False) -> HamiltonianSpec:
    """jxy (SxSx + SySy) + delta SzSz; U(1) charge S^z + 1/2."""
    if n < 2:
        raise DomainError("XXZ chain needs n >= 2")
    lat = lt.chain_periodic(n) if periodic else lt.chain_open(n)
    c = heisenberg_coupling(jxy, delta)
    terms = [LocalOperator(bd, c, f"xxz{bd[0]},{bd[1]}") for bd in _bonds(n, periodic)]
    return HamiltonianSpec(lat, terms, [CHARGE_SZ] * n,
                           {"n": n, "delta": delta, "jxy": jxy, "periodic": periodic}, "xxz")


def build_single_site(matrix, name="single_site") -> HamiltonianSpec:
    """One-site model, e.g. a two-level system."""
    lat = lt.chain_open(1)
    return HamiltonianSpec(lat, [LocalOperator((0,), np.asarray(matrix), "h0")], None, {}, name)


# ---- toric code

def toric_edge(lx, ly, x, y, kind):
    x, y = x % lx, y % ly
    return 2 * (y * lx + x) + (0 if kind == "h" else 1)


def toric_star(lx, ly, x, y):
    return (toric_edge(lx, ly, x, y, "h"), toric_edge(lx, ly, x - 1, y, "h"),
            toric_edge(lx, ly, x, y, "v"), toric_edge(lx, ly, x, y - 1, "v"))


def toric_plaquette(lx, ly, x, y):
    return (toric_edge(lx, ly, x, y, "h"), toric_edge(lx, ly, x, y + 1, "h"),
            toric_edge(lx, ly, x, y, "v"), toric_edge(lx, ly, x + 1, y, "v"))


def toric_stabilizers(lx, ly):
    """(stars, plaquettes) as lists of 4-edge Pauli LocalOperators."""
    x4, z4 = kron_all([PAULI["X"]] * 4), kron_all([PAULI["Z"]] * 4)
    stars, plaqs = [], []
    for y in range(ly):
        for x in range(lx):
            stars.append(LocalOperator(toric_star(lx, ly, x, y), x4, f"A{x},{y}"))
            plaqs.append(LocalOperator(toric_plaquette(lx, ly, x, y), z4, f"B{x},{y}"))
    return stars, plaqs


def build_toric_code(lx: int = 2, ly: int = 2) -> HamiltonianSpec:
    """-sum_s A_s - sum_p B_p with unit couplings."""
    lat = lt.torus_edges(lx, ly)
    if 2 ** lat.site_count > 2 ** 18:
        from .errors import CapacityError
        raise CapacityError(f"toric code {lx}x{ly} has {lat.site_count} qubits; the cap is 18")
    stars, plaqs = toric_stabilizers(lx, ly)
    terms = [s.scaled(-1.0) for s in stars] + [p.scaled(-1.0) for p in plaqs]
    return HamiltonianSpec(lat, terms, None, {"lx": lx, "ly": ly}, "toric_code")


# ---- Majumdar-Ghosh dimer states

SINGLET = np.array([0.0, 1.0, -1.0, 0.0]) / np.sqrt(2)  # (|up,down> - |down,up>)/sqrt2


def dimer_state(n: int, offset: int = 0) -> np.ndarray:
    """Product of singlets on (offset, offset+1), (offset+2, offset+3), ... mod n."""
    if n % 2:
        raise DomainError("dimer coverings need even n")
    pairs = [((offset + 2 * k) % n, (offset + 2 * k + 1) % n) for k in range(n // 2)]
    psi = kron_all([SINGLET[:, None]] * (n // 2)).ravel()
    order = [s for p in pairs for s in p]
    return psi.reshape([2] * n).transpose(np.argsort(order)).ravel()


# ---- custom term files

_NAMED = {"Sx": SX, "Sy": SY, "Sz": SZ, "I": ID2, "Sp": SP, "Sm": SM,
          "X": PAULI["X"], "Y": PAULI["Y"], "Z": PAULI["Z"]}


def parse_matrix_name(name: str, n_sites: int) -> np.ndarray:
    """'SzSz' or 'Sx*Sz' style Kronecker product of named single-site matrices."""
    tokens, rest = [], name.replace("*", "")
    keys = sorted(_NAMED, key=len, reverse=True)
    while rest:
        for k in keys:
            if rest.startswith(k):
                tokens.append(_NAMED[k])
                rest = rest[len(k):]
                break
        else:
            raise DomainError(f"unknown matrix name in {name!r}")
    if len(tokens) != n_sites:
        raise DomainError(f"matrix {name!r} has {len(tokens)} factors for {n_sites} sites")
    return kron_all(tokens)


def read_term_file(path, lat: lt.Lattice, name="custom") -> HamiltonianSpec:
    """Lines of ``sites... : matrix-name : coefficient``."""
    terms = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(":")]
            if len(parts) != 3:
                raise DomainError(f"{path}:{lineno}: expected 'sites : matrix : coefficient'")
            sites = tuple(int(s) for s in parts[0].split())
            coeff = complex(parts[2].replace("i", "j"))
            if coeff.imag == 0:
                coeff = coeff.real
            mat = coeff * parse_matrix_name(parts[1], len(sites))
            terms.append(LocalOperator(sites, mat, f"{parts[1]}@{sites}"))
    return HamiltonianSpec(lat, terms, None, {}, name)


def spin_op(name, site):
    """Single-site LocalOperator from a named matrix."""
    return LocalOperator((site,), _NAMED[name], f"{name}{site}")

