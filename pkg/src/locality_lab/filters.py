"""Filter functions with compactly supported Fourier transforms.

Fourier convention: ``f~(w) = int f(t) exp(i w t) dt``, inverse with 1/(2 pi).

g~ is a smooth bump supported in (-1, 1) with g~(0) = 1.  Then
f = delta - g and F(t) = i sign(t) int_{|t|}^inf g(u) du, which is odd and has
F~(w) = -(1 - g~(w))/w, i.e. exactly -1/w for |w| >= 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtr

from .errors import DomainError
from .kernels import fourier_sums

GL_NODES = 16


def bump_fourier(omega):
    """exp(1 - 1/(1 - w^2)) on |w| < 1, zero elsewhere."""
    w = np.asarray(omega, dtype=float)
    out = np.zeros_like(w)
    inside = np.abs(w) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - w[inside] ** 2))
    return out


@dataclass(eq=False)
class FilterFunction:
    """Sampled filter plus exact/quadrature evaluators.

    Attributes
    ----------
    kind : {'g', 'f', 'F', 'gaussian_window'}
    times : ndarray
        Symmetric sample grid (refined near t = 0).
    values : ndarray
        Complex samples on ``times``.
    quadrature_error_budget : float
    t_max : float
        Truncation time of the grid.
    """

    kind: str
    times: np.ndarray
    values: np.ndarray
    quadrature_error_budget: float
    t_max: float
    _fourier: Callable = field(repr=False, default=None)
    _time: Callable = field(repr=False, default=None)
    params: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def fourier(self, omega):
        return self._fourier(np.asarray(omega, dtype=float))

    def time(self, t):
        return self._time(np.asarray(t, dtype=float))

    def time_table(self):
        """Columns (t, Re F, Im F)."""
        return np.column_stack([self.times, self.values.real, self.values.imag])

    def fourier_table(self, omega):
        """Columns (w, Re F~, Im F~)."""
        v = np.asarray(self.fourier(omega), dtype=complex)
        return np.column_stack([omega, v.real, v.imag])


class _BumpSeries:
    """Trapezoid inverse transform of the bump (spectrally accurate)."""

    def __init__(self, n_freq):
        h = 2.0 / n_freq
        self.w = h * np.arange(1, n_freq // 2)
        self.c = (h / np.pi) * bump_fourier(self.w)  # doubled for +-w, times 1/2pi
        self.c0 = h / (2 * np.pi)  # w = 0 term with g~(0) = 1
        self.s = self.c / self.w

    def g(self, t):
        t = np.asarray(t, dtype=float)
        return self.c0 + fourier_sums(np.abs(t).ravel(), self.w, self.c, False).reshape(t.shape)

    def tail(self, t):
        """G(t) = int_t^inf g for t >= 0."""
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        return (0.5 - self.c0 * flat - fourier_sums(flat, self.w, self.s, True)).reshape(t.shape)


def _panels(t_max, fine_until=4.0, fine=0.25, coarse=1.0):
    edges = np.concatenate([np.arange(0, fine_until, fine),
                            np.arange(fine_until, t_max + coarse / 2, coarse)])
    return edges


def _gl_nodes(edges, n=GL_NODES):
    x, w = np.polynomial.legendre.leggauss(n)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (a + b) / 2 + (b - a) / 2 * x[None, :]
    weights = (b - a) / 2 * w[None, :]
    return nodes, weights


def build_bump_g(shape="gevrey_bump", n_freq=4096, tail_tol=1e-10, t_search=3000.0):
    """Bump filter g with g~ = exp(1 - 1/(1 - w^2)) on (-1, 1).

    ``t_max`` is the smallest time whose two-sided tail of |g| integrates below
    ``tail_tol``.
    """
    if shape != "gevrey_bump":
        raise DomainError(f"unknown bump shape {shape!r}")
    series = _BumpSeries(n_freq)
    coarse = np.arange(0.0, t_search, 0.25)
    absg = np.abs(series.g(coarse))
    seg = 0.125 * (absg[1:] + absg[:-1])
    tail = 2 * np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    t_max = float(np.ceil(coarse[np.argmax(tail <= tail_tol)]))
    edges = _panels(t_max)
    nodes, weights = _gl_nodes(edges)
    gn = series.g(nodes)
    panel_int = (gn * weights).sum(axis=1)
    integral = 2 * panel_int.sum()
    times = np.concatenate([-edges[:0:-1], edges])
    values = series.g(times).astype(complex)
    decay = np.abs(series.g(np.array([10.0, 20.0, 40.0, 80.0, 160.0])))
    return FilterFunction(
        "g", times, values, 1e-8, t_max,
        _fourier=bump_fourier, _time=series.g,
        params={"shape": shape, "n_freq": n_freq, "tail_tol": tail_tol},
        diagnostics={"integral": float(integral), "abs_g_at": dict(zip([10, 20, 40, 80, 160], decay.tolist())),
                     "series": series, "edges": edges, "panel_integrals": panel_int})


def build_f(g: FilterFunction) -> FilterFunction:
    """f = delta - g; the sampled part is -g, the delta is implicit."""
    return FilterFunction("f", g.times, -g.values, g.quadrature_error_budget, g.t_max,
                          _fourier=lambda w: 1.0 - g.fourier(w),
                          _time=lambda t: -g.time(t), params=dict(g.params),
                          diagnostics={"note": "delta function at t = 0 not sampled"})


def _check_even(g, atol=1e-12):
    v = g.values
    if not np.allclose(v, v[::-1], rtol=0, atol=atol * max(1.0, np.abs(v).max())):
        raise DomainError("build_F needs an even g; take the even part first")


def build_F(g: FilterFunction) -> FilterFunction:
    """Odd filter F(t) = i sign(t) int_{|t|}^inf g(u) du.

    Also checks the tail bound |F(t)| <= |int_{|t|}^inf f| on the grid, with the
    right-hand side integrated independently by Gauss-Legendre quadrature of g.
    """
    if g.kind != "g":
        raise DomainError("build_F expects the bump filter g")
    _check_even(g)
    series = g.diagnostics["series"]
    edges = g.diagnostics["edges"]
    budget = g.quadrature_error_budget

    def f_time(t):
        t = np.asarray(t, dtype=float)
        return 1j * np.sign(t) * series.tail(np.abs(t))

    def f_fourier(w):
        w = np.asarray(w, dtype=float)
        out = np.zeros(w.shape)
        nz = w != 0
        out[nz] = -(1.0 - bump_fourier(w[nz])) / w[nz]
        return out

    times = g.times
    values = f_time(times)
    # independent tail: int_{t}^{t_max} g by panel quadrature, at panel edges
    panel_int = g.diagnostics["panel_integrals"]
    tail_pos = np.concatenate([np.cumsum(panel_int[::-1])[::-1], [0.0]])
    tail_abs = np.concatenate([tail_pos[:0:-1], tail_pos])
    tail_abs[times == 0] = np.nan  # f includes the delta at 0; bound is trivial there
    mask = times != 0
    excess = np.abs(values[mask]) - np.abs(tail_abs[mask])
    nodes, weights = _gl_nodes(edges)
    gtail = series.tail(nodes)
    return FilterFunction(
        "F", times, values, budget, g.t_max, _fourier=f_fourier, _time=f_time,
        params=dict(g.params),
        diagnostics={"tail_bound_max_excess": float(excess.max()),
                     "tail_bound_ok": bool(np.all(excess <= budget)),
                     "abs_F_at_40": float(abs(f_time(np.array([40.0]))[0])),
                     "abs_F_at_0plus": float(abs(f_time(np.array([1e-12]))[0])),
                     "nodes": nodes, "weights": weights, "tail_at_nodes": gtail,
                     "series": series})


def numeric_fourier_F(F: FilterFunction, omega):
    """F~(w) by quadrature of the time samples: -2 int_0^T G(t) sin(w t) dt."""
    nodes, weights, gt = (F.diagnostics[k] for k in ("nodes", "weights", "tail_at_nodes"))
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    wg = (weights * gt).ravel()
    x = nodes.ravel()
    return -2 * fourier_sums(w, x, wg, True)


def numeric_integral_g(g: FilterFunction):
    return g.diagnostics["integral"]


def gaussian_window(q: float, delta_e: float) -> FilterFunction:
    """Smoothed step W(w) = Phi(w sqrt(q) / dE).

    Time domain: exp(-(t dE)^2 / 2q) / (2 pi i t), whose transform is W.
    """
    if q <= 0 or delta_e <= 0:
        raise DomainError("q and delta_e must be positive")
    scale = np.sqrt(q) / delta_e

    def w_fourier(w):
        return ndtr(np.asarray(w, dtype=float) * scale)

    def w_time(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.exp(-(t * delta_e) ** 2 / (2 * q)) / (2j * np.pi * t)
        return np.where(t == 0, np.nan + 0j, out)

    t_max = np.sqrt(2 * q * 40.0) / delta_e
    times = np.linspace(-t_max, t_max, 801)
    return FilterFunction("gaussian_window", times, w_time(times), 0.0, float(t_max),
                          _fourier=w_fourier, _time=w_time, params={"q": q, "delta_e": delta_e})


def window_tail_fit(qs, delta_e, omega_max_factor=20.0, n=400):
    """max_{w >= dE} |1 - W(w)| per q, plus the constant C fitted at the first q."""
    rows = []
    for q in qs:
        win = gaussian_window(q, delta_e)
        w = np.linspace(delta_e, omega_max_factor * delta_e, n)
        rows.append((q, float(np.max(np.abs(1 - win.fourier(w))))))
    c = rows[0][1] / np.exp(-rows[0][0] / 2)
    return c, rows
