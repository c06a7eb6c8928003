"""Eigenstructure: diagonalization, ground spaces, projectors, energy filters."""
from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .errors import ConvergenceError, DomainError, UnsupportedError
from .operators import DENSE_MAX_DIM, SPARSE_MAX_DIM, check_capacity

CACHE_ENV = "LOCALITY_LAB_CACHE"


@dataclass
class SpectralData:
    """Eigenpairs of a Hamiltonian with a resolved ground space.

    Attributes
    ----------
    energies : ndarray
        Ascending eigenvalues (all of them on the dense path).
    states : ndarray, shape (dim, m)
        Orthonormal eigenvectors as columns.
    ground_degeneracy : int
    gap : float
        ``energies[k] - energies[k-1]`` with ``k = ground_degeneracy``.
    degeneracy_tol : float
    h_norm : float
    full : bool
        True when the spectrum is complete (dense path).
    labels : dict
        Symmetry eigenvalues of the ground basis after canonicalization.
    """

    energies: np.ndarray
    states: np.ndarray
    ground_degeneracy: int
    gap: float
    degeneracy_tol: float
    h_norm: float
    full: bool
    max_residual: float = 0.0
    labels: dict = field(default_factory=dict)

    @property
    def k(self):
        return self.ground_degeneracy

    @property
    def e0(self):
        return float(self.energies[0])

    @property
    def ground_states(self):
        return self.states[:, :self.ground_degeneracy]

    @property
    def dim(self):
        return self.states.shape[0]

    def require_full(self, what):
        if not self.full:
            raise UnsupportedError(f"{what} needs the full dense spectrum")

    def to_energy_basis(self, o):
        """Matrix elements <psi_i|o|psi_j> over all retained states."""
        v = self.states
        o = o.toarray() if sp.issparse(o) else np.asarray(o)
        return v.conj().T @ (o @ v)

    def from_energy_basis(self, m):
        self.require_full("rotating back from the energy basis")
        v = self.states
        return (v @ m) @ v.conj().T


@dataclass
class GroundProjection:
    """k-by-k matrix of an operator inside the ground space."""

    matrix: np.ndarray
    operator_label: str = ""

    def deviation(self):
        """Operator-norm distance to the nearest multiple of the identity."""
        k = self.matrix.shape[0]
        z = np.trace(self.matrix) / k
        return float(np.linalg.norm(self.matrix - z * np.eye(k), 2)), complex(z)


# ---------------------------------------------------------------- Lanczos

def lanczos_lowest(a, k, rtol=1e-9, seed=0, krylov_dim=120, max_restarts=60):
    """Lowest ``k`` eigenpairs of a Hermitian operator.

    Lanczos with full reorthogonalization and block size 1.  Eigenpairs are
    found one at a time and locked; later runs are kept orthogonal to the
    locked vectors, which also resolves exactly degenerate levels.

    Parameters
    ----------
    a : sparse matrix or LinearOperator
    k : int
    rtol : float
        Residual tolerance relative to the norm estimate of ``a``.
    seed : int
        Seed of the start vectors.

    Returns
    -------
    vals : ndarray, shape (k,)
    vecs : ndarray, shape (n, k)
    residuals : ndarray, shape (k,)
    """
    n = a.shape[0]
    m = min(krylov_dim, n)
    dtype = np.result_type(a.dtype, np.float64)
    rng = np.random.default_rng(seed)
    locked = np.zeros((0, n), dtype=dtype)
    vals, residuals = [], []
    scale = None
    for target in range(k):
        v = rng.standard_normal(n).astype(dtype)
        if dtype.kind == "c":
            v = v + 1j * rng.standard_normal(n)
        res = np.inf
        for _ in range(max_restarts):
            for _ in range(2):
                v = v - locked.T @ (locked.conj() @ v)
            v = v / np.linalg.norm(v)
            q = np.zeros((m, n), dtype=dtype)
            alpha, beta = np.zeros(m), np.zeros(m)
            size = m
            for j in range(m):
                q[j] = v
                w = a @ v
                alpha[j] = np.real(np.vdot(v, w))
                for _ in range(2):
                    w = w - q[:j + 1].T @ (q[:j + 1].conj() @ w)
                    if locked.shape[0]:
                        w = w - locked.T @ (locked.conj() @ w)
                beta[j] = np.linalg.norm(w)
                if j + 1 == m or beta[j] <= 1e-14 * max(abs(alpha[j]), 1.0):
                    size = j + 1
                    break
                v = w / beta[j]
            theta, s = la.eigh_tridiagonal(alpha[:size], beta[:size - 1])
            if scale is None:
                scale = max(abs(theta[0]), abs(theta[-1]), 1e-300)
            x = s[:, 0] @ q[:size]
            x /= np.linalg.norm(x)
            res = np.linalg.norm(a @ x - theta[0] * x)
            if res <= rtol * scale:
                break
            v = x
        else:
            raise ConvergenceError(
                f"Lanczos did not converge for eigenpair {target} "
                f"(residual {res:.3e} > {rtol * scale:.3e})", residuals + [res])
        locked = np.vstack([locked, x[None, :]])
        vals.append(float(theta[0]))
        residuals.append(float(res))
    order = np.argsort(vals, kind="stable")
    return np.array(vals)[order], locked.T[:, order], np.array(residuals)[order]


# ---------------------------------------------------------------- cache

class EigenCache:
    """On-disk eigendata keyed by model fingerprint (npy arrays + JSON manifest)."""

    def __init__(self, root):
        self.root = Path(root)

    @classmethod
    def from_env(cls):
        root = os.environ.get(CACHE_ENV)
        return cls(root) if root else None

    def _dir(self, key):
        return self.root / key

    def load(self, key):
        d = self._dir(key)
        try:
            meta = json.loads((d / "manifest.json").read_text())
            e = np.load(d / "energies.npy")
            v = np.load(d / "states.npy")
        except (OSError, ValueError):
            return None
        return e, v, meta

    def store(self, key, energies, states, meta):
        d = self._dir(key)
        d.mkdir(parents=True, exist_ok=True)
        for name, arr in (("energies.npy", energies), ("states.npy", states)):
            tmp = d / (name + ".tmp")
            with open(tmp, "wb") as fh:
                np.save(fh, arr)
            os.replace(tmp, d / name)
        tmp = d / "manifest.json.tmp"
        tmp.write_text(json.dumps(meta, sort_keys=True))
        os.replace(tmp, d / "manifest.json")


# ---------------------------------------------------------------- diagonalize

def _degeneracy(energies, tol):
    return int(np.sum(energies - energies[0] <= tol))


def _solve(h, method, k, rtol, seed, cache):
    key = None
    if cache is not None:
        key = f"{h.fingerprint()[:32]}-{method}-{k}-{rtol:g}-{seed}"
        hit = cache.load(key)
        if hit is not None:
            return hit[0], hit[1]
    if method == "dense":
        e, v = la.eigh(h.matrix("dense"), driver="evd")
    else:
        e, v, _ = lanczos_lowest(h.matrix("sparse"), k, rtol=rtol, seed=seed)
    if cache is not None:
        cache.store(key, e, v, {"model": h.name, "params": {k_: str(v_) for k_, v_ in h.params.items()},
                                "method": method, "k": k})
    return e, v


def diagonalize(h, k=None, degeneracy_tol=None, method="auto", n_ground=None,
                rtol=1e-9, seed=0, cache="env") -> SpectralData:
    """Eigenpairs of ``h`` and its ground space.

    Parameters
    ----------
    h : HamiltonianSpec
    k : int, optional
        Number of lowest pairs for the sparse path (at least 2).  The dense path
        always returns the full spectrum.
    degeneracy_tol : float, optional
        Energies within this of E_0 count as ground states.  Defaults to
        ``1e-8 * |H|``.
    method : {'auto', 'dense', 'sparse'}
        'auto' is dense up to 12 spin-1/2 sites and sparse beyond.
    n_ground : int, optional
        Force the ground-sector size (for quasi-degenerate sectors).
    rtol : float
        Residual tolerance of the sparse path, relative to |H|.
    cache : 'env', EigenCache or None
    """
    if k is not None and k < 2:
        raise DomainError("k must be at least 2 to resolve a gap")
    dim = h.dim
    if method == "auto":
        method = "dense" if dim <= DENSE_MAX_DIM else "sparse"
    check_capacity(h.n, h.local_dim, method)
    if dim > SPARSE_MAX_DIM:
        check_capacity(h.n, h.local_dim, "sparse")
    if cache == "env":
        cache = EigenCache.from_env()
    if method == "sparse":
        k = k or 4
        if n_ground is not None:
            k = max(k, n_ground + 1)
    while True:
        e, v = _solve(h, method, k, rtol, seed, cache)
        h_norm = float(max(abs(e[0]), abs(e[-1]))) if method == "dense" else None
        if h_norm is None:
            from .operators import operator_norm
            h_norm = operator_norm(h.matrix("sparse"))
        tol = 1e-8 * h_norm if degeneracy_tol is None else degeneracy_tol
        kd = n_ground or _degeneracy(e, tol)
        if kd < len(e) or method == "dense":
            break
        if k >= dim:
            break
        k = min(dim, 2 * k)
    mat = h.matrix("dense" if method == "dense" else "sparse")
    res = np.linalg.norm(mat @ v - v * e[None, :], axis=0)
    gap = float(e[kd] - e[kd - 1]) if kd < len(e) else float("inf")
    return SpectralData(np.asarray(e), v, kd, gap, tol, h_norm, method == "dense",
                        float(res.max()))


def ground_projector(sd: SpectralData):
    g = sd.ground_states
    return g @ g.conj().T


def project_to_ground_space(sd: SpectralData, o, label="") -> GroundProjection:
    g = sd.ground_states
    if o.shape[0] != g.shape[0]:
        raise DomainError(f"operator dimension {o.shape[0]} does not match states {g.shape[0]}")
    return GroundProjection(g.conj().T @ (o @ g), label)


def step_theta(x, tol):
    """Heaviside step with theta(0) = 1/2 inside the tolerance window."""
    x = np.asarray(x, dtype=float)
    return np.where(x > tol, 1.0, np.where(x < -tol, 0.0, 0.5))


def positive_energy_part(sd: SpectralData, b):
    """B^+ with elements B_ij theta(E_i - E_j) in the energy basis."""
    sd.require_full("the positive energy part")
    be = sd.to_energy_basis(b)
    e = sd.energies
    return sd.from_energy_basis(be * step_theta(e[:, None] - e[None, :], sd.degeneracy_tol))


def _apply(s, vecs):
    return s(vecs) if callable(s) else s @ vecs


def canonical_ground_basis(sd: SpectralData, symmetries: dict) -> SpectralData:
    """Fix the ground basis by diagonalizing declared symmetries inside it.

    A fixed generic combination of the Hermitian and anti-Hermitian parts of
    the projected symmetries is diagonalized; basis vectors are ordered by
    decreasing eigenvalue of that combination and each is given the phase that
    makes its largest component real and positive.

    Parameters
    ----------
    sd : SpectralData
    symmetries : dict
        Name -> matrix (dense or sparse) or callable acting on column vectors.
    """
    g = sd.ground_states
    k = g.shape[1]
    coeffs = np.sqrt([2.0, 3.0, 5.0, 7.0, 11.0, 13.0])
    proj = {name: g.conj().T @ _apply(s, g) for name, s in symmetries.items()}
    z = np.zeros((k, k), dtype=complex)
    for c, m in zip(coeffs, proj.values()):
        z += c * (m + m.conj().T) / 2 + (c / 10) * (m - m.conj().T) / 2j
    w, u = la.eigh(z)
    u = u[:, ::-1]
    if np.any(np.diff(w) < 1e-8):
        warnings.warn("declared symmetries do not fully resolve the ground space", stacklevel=2)
    new = g @ u
    for c in range(k):
        col = new[:, c]
        mag = np.abs(col)
        i = int(np.argmax(mag >= mag.max() * (1 - 1e-9)))
        new[:, c] = col * (abs(col[i]) / col[i])
    states = sd.states.astype(np.result_type(sd.states.dtype, new.dtype), copy=True)
    states[:, :k] = new
    labels = {name: np.diag(new.conj().T @ _apply(s, new)) for name, s in symmetries.items()}
    return replace(sd, states=states, labels=labels)
