"""Finite lattices: site indexing, precomputed metrics and set geometry."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import DomainError

GEOMETRY_TAGS = (
    "chain_open",
    "chain_periodic",
    "square_periodic",
    "ladder",
    "torus_edges",
    "custom_graph",
)


@dataclass(frozen=True, eq=False)
class Lattice:
    """A finite set of sites with a dense distance table.

    Attributes
    ----------
    site_count : int
    metric : ndarray, shape (N, N)
        Symmetric table of nonnegative distances.
    geometry_tag : str
    coords : ndarray, shape (N, dim)
        Embedding coordinates.  Column 0 is the coordinate along the
        periodic direction used for flux insertion.
    extent : tuple of int
        Linear sizes, e.g. ``(N,)`` for chains and ``(lx, ly)`` for tori.
    """

    site_count: int
    metric: np.ndarray
    geometry_tag: str
    coords: np.ndarray
    extent: tuple = ()
    periodic: bool = False

    def __post_init__(self):
        if self.site_count < 1:
            raise DomainError("lattice needs at least one site")
        if self.geometry_tag not in GEOMETRY_TAGS:
            raise DomainError(f"unknown geometry tag {self.geometry_tag!r}")
        m = np.asarray(self.metric, dtype=float)
        if m.shape != (self.site_count, self.site_count):
            raise DomainError("metric table has wrong shape")
        m.setflags(write=False)
        object.__setattr__(self, "metric", m)

    @property
    def sites(self):
        return tuple(range(self.site_count))

    def dist(self, i, j):
        return float(self.metric[i, j])

    @property
    def diameter(self):
        return float(self.metric.max())

    def describe(self):
        return {
            "geometry": self.geometry_tag,
            "sites": self.site_count,
            "extent": list(self.extent),
            "periodic": self.periodic,
        }

    def check_metric(self, atol=1e-12):
        """Return True if the table is a metric (zero diagonal, symmetric, triangle)."""
        m = self.metric
        if np.any(np.abs(np.diag(m)) > atol) or np.any(m < -atol):
            return False
        if not np.allclose(m, m.T, atol=atol):
            return False
        # d(i,j) <= d(i,k) + d(k,j) for all k, vectorized over k
        via = m[:, :, None] + m[None, :, :]
        return bool(np.all(m[:, None, :] <= via + atol))


def site_set(members: Iterable[int], lat: Lattice | None = None) -> tuple:
    """Validate and canonicalize a set of site indices to a sorted tuple."""
    out = sorted(int(m) for m in members)
    if len(set(out)) != len(out):
        raise DomainError(f"duplicate sites in {out}")
    if lat is not None and out and (out[0] < 0 or out[-1] >= lat.site_count):
        raise DomainError(f"sites {out} outside lattice of {lat.site_count} sites")
    return tuple(out)


def _nonempty(lat, a, what):
    a = site_set(a, lat)
    if not a:
        raise DomainError(f"{what} must be nonempty")
    return a


def set_distance(lat: Lattice, a, b) -> float:
    """Minimum point distance between two nonempty site sets."""
    a = _nonempty(lat, a, "first set")
    b = _nonempty(lat, b, "second set")
    return float(lat.metric[np.ix_(a, b)].min())


def set_diameter(lat: Lattice, a) -> float:
    a = _nonempty(lat, a, "set")
    return float(lat.metric[np.ix_(a, a)].max())


def ball(lat: Lattice, x, l: float) -> tuple:
    """All sites within distance ``l`` of the set ``x``."""
    x = _nonempty(lat, x, "ball centre")
    if l < 0:
        raise DomainError("ball radius must be nonnegative")
    d = lat.metric[list(x)].min(axis=0)
    return tuple(int(i) for i in np.nonzero(d <= l + 1e-12)[0])


def reproducing_constant(lat: Lattice, k: Callable[[np.ndarray], np.ndarray]) -> float:
    """Smallest lambda with sum_m k(d_im) k(d_mj) <= lambda k(d_ij) on ``lat``.

    Evaluated exhaustively over all pairs.
    """
    kv = np.asarray(k(lat.metric), dtype=float)
    if kv.shape != lat.metric.shape:
        kv = np.vectorize(k, otypes=[float])(lat.metric)
    if np.any(~np.isfinite(kv)) or np.any(kv <= 0):
        raise DomainError("decay function must be positive at every realized distance")
    return float(((kv @ kv) / kv).max())


# ---------------------------------------------------------------- builders

def _periodic_1d(x, period):
    d = np.abs(x[:, None] - x[None, :])
    return np.minimum(d, period - d)


def chain_open(n: int) -> Lattice:
    x = np.arange(n, dtype=float)
    return Lattice(n, np.abs(x[:, None] - x[None, :]), "chain_open",
                   x[:, None], (n,), False)


def chain_periodic(n: int) -> Lattice:
    x = np.arange(n, dtype=float)
    return Lattice(n, _periodic_1d(x, n), "chain_periodic", x[:, None], (n,), True)


def square_periodic(lx: int, ly: int) -> Lattice:
    """Periodic square lattice; site (x, y) has index y*lx + x."""
    if lx < 1 or ly < 1:
        raise DomainError("square lattice sizes must be positive")
    y, x = np.divmod(np.arange(lx * ly), lx)
    xy = np.stack([x, y], axis=1).astype(float)
    metric = _periodic_1d(xy[:, 0], lx) + _periodic_1d(xy[:, 1], ly)
    return Lattice(lx * ly, metric, "square_periodic", xy, (lx, ly), True)


def torus_edges(lx: int, ly: int) -> Lattice:
    """Qubits on the edges of an lx-by-ly periodic square lattice.

    Edge ``2*(y*lx + x)`` is the horizontal edge leaving vertex (x, y) in +x,
    edge ``2*(y*lx + x) + 1`` the vertical edge leaving it in +y.  Distances are
    periodic Manhattan distances between edge midpoints.
    """
    if lx < 2 or ly < 2:
        raise DomainError("toric lattice needs lx, ly >= 2")
    xy = np.zeros((2 * lx * ly, 2))
    for y in range(ly):
        for x in range(lx):
            v = y * lx + x
            xy[2 * v] = (x + 0.5, y)
            xy[2 * v + 1] = (x, y + 0.5)
    metric = _periodic_1d(xy[:, 0], lx) + _periodic_1d(xy[:, 1], ly)
    return Lattice(2 * lx * ly, metric, "torus_edges", xy, (lx, ly), True)


def _bfs_metric(n, edges):
    adj = [[] for _ in range(n)]
    for i, j in edges:
        if not (0 <= i < n and 0 <= j < n):
            raise DomainError(f"edge ({i}, {j}) outside {n} sites")
        adj[i].append(j)
        adj[j].append(i)
    metric = np.full((n, n), np.inf)
    for s in range(n):
        metric[s, s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if metric[s, w] == np.inf:
                    metric[s, w] = metric[s, u] + 1
                    queue.append(w)
    if np.isinf(metric).any():
        raise DomainError("graph is disconnected")
    return metric


def ladder(length: int, legs: int = 2, periodic: bool = True) -> Lattice:
    """Thin ladder with graph distances; site (x, leg) has index x*legs + leg."""
    if length < 2 or legs < 1:
        raise DomainError("ladder needs length >= 2 and legs >= 1")
    edges = []
    for x in range(length):
        for a in range(legs):
            i = x * legs + a
            if a + 1 < legs:
                edges.append((i, i + 1))
            if x + 1 < length or (periodic and length > 2):
                edges.append((i, ((x + 1) % length) * legs + a))
    n = length * legs
    coords = np.stack(np.divmod(np.arange(n), legs), axis=1).astype(float)
    return Lattice(n, _bfs_metric(n, edges), "ladder", coords, (length, legs), periodic)


def custom_graph(n: int, edges) -> Lattice:
    """Shortest-path metric on an arbitrary connected graph."""
    metric = _bfs_metric(n, [(int(i), int(j)) for i, j in edges])
    coords = np.arange(n, dtype=float)[:, None]
    return Lattice(n, metric, "custom_graph", coords, (n,), False)


def read_edge_list(path) -> Lattice:
    """Read a graph from text, one ``i j`` pair per line ('#' starts a comment)."""
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DomainError(f"{path}:{lineno}: expected 'i j'")
            edges.append((int(parts[0]), int(parts[1])))
    if not edges:
        raise DomainError(f"{path}: no edges")
    n = 1 + max(max(e) for e in edges)
    return custom_graph(n, edges)
