"""Local operators, tensor embedding, norms, commutators and Haar localization.

Basis convention: site 0 is the most significant tensor factor, so the full
operator for ``a`` on site 0 and ``b`` on site 1 of a two-site system is
``np.kron(a, b)``.  For spin-1/2 the basis state with digit 0 is spin up.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import CapacityError, ConvergenceError, DomainError
from .kernels import embed_coo

# Hilbert-space caps (number of spin-1/2 sites).
DENSE_MAX_DIM = 2 ** 12
SPARSE_MAX_DIM = 2 ** 18

SX = np.array([[0, 0.5], [0.5, 0]])
SY = np.array([[0, -0.5j], [0.5j, 0]])
SZ = np.array([[0.5, 0], [0, -0.5]])
SP = np.array([[0, 1.0], [0, 0]])
SM = SP.T.copy()
ID2 = np.eye(2)
PAULI = {"I": ID2, "X": 2 * SX, "Y": 2 * SY, "Z": 2 * SZ}


def kron_all(mats):
    out = np.ones((1, 1))
    for m in mats:
        out = np.kron(out, m)
    return out


@dataclass(frozen=True, eq=False)
class LocalOperator:
    """A matrix acting on an ordered tuple of sites.

    The tensor factor order of ``matrix`` follows ``support``.
    """

    support: tuple
    matrix: np.ndarray
    label: str = ""
    local_dim: int = 2

    def __post_init__(self):
        sup = tuple(int(s) for s in self.support)
        if len(set(sup)) != len(sup):
            raise DomainError(f"repeated site in support {sup}")
        m = np.asarray(self.matrix)
        if m.dtype.kind not in "fc":
            m = m.astype(float)
        dim = self.local_dim ** len(sup)
        if m.shape != (dim, dim):
            raise DomainError(
                f"matrix shape {m.shape} does not match support {sup} with local dim {self.local_dim}")
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "matrix", m)

    @property
    def norm(self):
        return operator_norm(self.matrix)

    def canonical(self) -> "LocalOperator":
        """Same operator with support sorted ascending."""
        order = np.argsort(self.support)
        if np.all(order == np.arange(len(order))):
            return self
        k, d = len(order), self.local_dim
        t = self.matrix.reshape([d] * (2 * k))
        t = t.transpose(list(order) + [k + o for o in order])
        return LocalOperator(tuple(sorted(self.support)), t.reshape(d ** k, d ** k),
                             self.label, d)

    def scaled(self, c, label=None):
        return LocalOperator(self.support, c * self.matrix,
                             self.label if label is None else label, self.local_dim)

    def is_hermitian(self, atol=1e-12):
        return is_hermitian(self.matrix, atol)


def check_capacity(n_sites, local_dim=2, fmt="dense"):
    dim = local_dim ** n_sites
    cap = DENSE_MAX_DIM if fmt == "dense" else SPARSE_MAX_DIM
    if dim > cap:
        raise CapacityError(
            f"{fmt} Hilbert space of dimension {dim} ({n_sites} sites) exceeds the cap {cap}; "
            f"use at most {int(np.log(cap) / np.log(local_dim))} sites"
            + (" or the sparse path" if fmt == "dense" else ""))
    return dim


def _n_sites(lat_or_n):
    return lat_or_n if isinstance(lat_or_n, (int, np.integer)) else lat_or_n.site_count


def embed(op: LocalOperator, lat_or_n, fmt="dense"):
    """Full-space matrix of ``op``, identity on every other site.

    Parameters
    ----------
    op : LocalOperator
    lat_or_n : Lattice or int
    fmt : {'dense', 'sparse'}

    Returns
    -------
    ndarray or scipy.sparse.csr_matrix
    """
    n = _n_sites(lat_or_n)
    if op.support and max(op.support) >= n:
        raise DomainError(f"support {op.support} outside {n} sites")
    dim = check_capacity(n, op.local_dim, fmt)
    rows, cols, vals = embed_coo(n, op.local_dim, np.asarray(op.support, dtype=np.int64),
                                 np.ascontiguousarray(op.matrix))
    m = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    return m.toarray() if fmt == "dense" else m


def embed_sum(ops, lat_or_n, fmt="dense"):
    """Sum of embedded local operators."""
    n = _n_sites(lat_or_n)
    ops = list(ops)
    d = ops[0].local_dim if ops else 2
    dim = check_capacity(n, d, fmt)
    parts = [embed_coo(n, o.local_dim, np.asarray(o.support, dtype=np.int64),
                       np.ascontiguousarray(o.matrix)) for o in ops]
    if not parts:
        m = sp.csr_matrix((dim, dim))
    else:
        rows = np.concatenate([p[0] for p in parts])
        cols = np.concatenate([p[1] for p in parts])
        vals = np.concatenate([p[2] for p in parts])
        m = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    m.sum_duplicates()
    return m.toarray() if fmt == "dense" else m


def is_hermitian(m, atol=1e-12):
    if sp.issparse(m):
        return abs(m - m.getH()).max() <= atol if m.nnz else True
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and np.allclose(m, m.conj().T, rtol=0, atol=atol)


def _start_vector(n, dtype, seed=12345):
    v = np.random.default_rng(seed).standard_normal(n)
    if np.dtype(dtype).kind == "c":
        v = v + 1j * np.random.default_rng(seed + 1).standard_normal(n)
    return v / np.linalg.norm(v)


def sparse_norm(m, rtol=1e-10, maxiter=10000, seed=12345):
    """Largest singular value by power iteration on m^H m."""
    mh = m.conj().T.tocsr()
    v = _start_vector(m.shape[1], np.result_type(m.dtype, float), seed)
    lam_old = 0.0
    for it in range(maxiter):
        w = mh @ (m @ v)
        lam = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        if it > 0 and abs(lam - lam_old) <= rtol * abs(lam):
            return float(np.sqrt(max(lam, 0.0)))
        lam_old = lam
    raise ConvergenceError(f"power iteration did not reach rtol {rtol} in {maxiter} steps",
                           [abs(lam - lam_old) / max(abs(lam), 1e-300)])


def operator_norm(m, hermitian=None) -> float:
    """Operator norm (largest singular value).

    Dense matrices up to dimension 1024 use a full eigen/singular value solve;
    larger dense ones use ARPACK with a fixed start vector.  Sparse matrices use
    power iteration on m^H m.
    """
    if sp.issparse(m):
        if m.nnz == 0:
            return 0.0
        return sparse_norm(m.tocsr())
    m = np.asarray(m)
    if m.size == 0 or not np.any(m):
        return 0.0
    if m.ndim == 1:
        return float(np.abs(m).max())
    square = m.shape[0] == m.shape[1]
    if hermitian is None:
        hermitian = square and is_hermitian(m, atol=1e-12 * max(1.0, np.abs(m).max()))
    n = min(m.shape)
    if n <= 1024 or not square:
        if hermitian:
            return float(np.abs(la.eigvalsh(m)).max())
        return float(la.svdvals(m)[0])
    v0 = _start_vector(m.shape[0], m.dtype)
    if hermitian:
        return hermitian_norm_arpack(m, v0)[0]
    mh = m.conj().T
    gram = spla.LinearOperator(m.shape, matvec=lambda x: mh @ (m @ x), dtype=m.dtype)
    vals = spla.eigsh(gram, k=1, which="LA", tol=1e-11, v0=v0, ncv=24, return_eigenvectors=False)
    return float(np.sqrt(max(vals.max(), 0.0)))


def hermitian_norm_arpack(m, v0=None):
    """Norm of a dense Hermitian matrix via ARPACK on m^2.

    Squaring makes +-lambda pairs a single top eigenvalue.  Returns the norm and
    the top eigenvector, which is a good start vector for a nearby matrix.
    """
    if v0 is None:
        v0 = _start_vector(m.shape[0], m.dtype)
    sq = spla.LinearOperator(m.shape, matvec=lambda x: m @ (m @ x), dtype=m.dtype)
    top, vec = spla.eigsh(sq, k=1, which="LA", tol=1e-11, v0=v0, ncv=20)
    return float(np.sqrt(max(top[0], 0.0))), vec[:, 0]


def commutator(a, b):
    """ab - ba."""
    if a.shape != b.shape:
        raise DomainError(f"dimension mismatch {a.shape} vs {b.shape}")
    return a @ b - b @ a


def haar_localize(m, keep, lat_or_n, local_dim=2):
    """Average of U m U^dagger over Haar unitaries on the complement of ``keep``.

    Computed exactly as (partial trace over the complement)/dim tensored with
    the identity.
    """
    n = _n_sites(lat_or_n)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise DomainError("keep set must be nonempty")
    if keep[-1] >= n or keep[0] < 0:
        raise DomainError(f"keep set {keep} outside {n} sites")
    if sp.issparse(m):
        m = m.toarray()
    m = np.asarray(m)
    if len(keep) == n:
        return m.copy()
    d = local_dim
    comp = [i for i in range(n) if i not in keep]
    dk, dc = d ** len(keep), d ** len(comp)
    t = m.reshape([d] * (2 * n)).transpose(keep + comp + [n + i for i in keep] + [n + i for i in comp])
    reduced = np.einsum("iaja->ij", t.reshape(dk, dc, dk, dc)) / dc
    return embed(LocalOperator(tuple(keep), reduced, "", d), n)


def translation_operator(n, local_dim=2, shift=1):
    """Sparse permutation T moving the content of site j to site j - shift.

    With this convention ``T q_j T^dagger = q_{j-shift}``.
    """
    d = local_dim
    axes = [(k + shift) % n for k in range(n)]
    idx = np.arange(d ** n).reshape([d] * n).transpose(axes).ravel()
    dim = d ** n
    return sp.csr_matrix((np.ones(dim), (np.arange(dim), idx)), shape=(dim, dim))


def pauli_string(word, support):
    """LocalOperator for a Pauli word like 'XZ' on the given sites."""
    if len(word) != len(support):
        raise DomainError("word and support lengths differ")
    return LocalOperator(tuple(support), kron_all([PAULI[c] for c in word]), word)
