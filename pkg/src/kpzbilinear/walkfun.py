"""Epigraph-hitting walk expectations.

For lattice models the walk starts at ``v``, takes strictly negative integer
steps and stops at the first index ``m`` with ``B_m > y_{m+1}``.  A position at
or below ``y_n`` can no longer stop before step ``n``, so the dynamics live on
the finite set ``(y_n, v]`` and the expectation is an exact finite sum.

For reflected Brownian motions the steps are Exp(1) and the stopped value is
weighted by ``e^{a-B} phibar_{n-m-1}(t, B-a)``.  Writing ``W_k(x)`` for the
value-to-go at step ``k`` multiplied by ``e^{x-a}`` gives the recursion

    W_k(x) = phibar_{n-k-1}(t, x-a)         if x >= y_{k+1}
    W_k(x) = int_{y_n}^x W_{k+1}(z) dz       otherwise,

so every ``W_k`` is a piecewise polynomial with breaks at the ``y``'s and a
Gauss-Legendre panel rule with a spectral cumulative integral is exact.
"""
from __future__ import annotations

import math
from contextlib import nullcontext
from dataclasses import dataclass

import mpmath
import numpy as np
from numpy.polynomial import legendre

from .specfun import PRECISE_DPS, basis_by_offset, rbm_basis

CONTINUOUS_N_GUARD = 6


def _check_y(y, n, strict):
    y = np.asarray(y, dtype=float)
    if len(y) < n:
        raise ValueError(f"initial data has {len(y)} entries, need {n}")
    d = np.diff(y[:n])
    if strict and np.any(d >= 0):
        raise ValueError("initial data must be strictly decreasing")
    if not strict and np.any(d > 0):
        raise ValueError("initial data must be non-increasing")
    return y


# ----------------------------------------------------------------------------
# discrete walks
# ----------------------------------------------------------------------------

def step_law(model: str, prob: float | None, kmax: int, precise: bool = False) -> np.ndarray:
    """Weight of a step of size -k for k = 0..kmax (entry 0 is zero).

    Geometric(1/2) for every model except Parallel TASEP, whose weight
    (1/2)^k q^{-1[k>=2]} is not a probability law: it is the geometric step
    law tilted so that the stopped kernels reproduce the synchronous dynamics
    with gaps in the initial data.
    """
    one = mpmath.mpf(1) if precise else 1.0
    half = one / 2
    out = np.array([one * 0] * (kmax + 1), dtype=object if precise else float)
    if model == "parallel":
        q = one - prob
        for k in range(1, kmax + 1):
            out[k] = half ** k / (q if k >= 2 else one)
    else:
        for k in range(1, kmax + 1):
            out[k] = half ** k
    return out


def hitting_distribution(model: str, y, n: int, top: int, prob: float | None = None, precise: bool = False):
    """Stopping law of the walk started at every site of (y_n, top].

    Returns ``(sites, H)`` with ``H[i, m, j]`` the probability that the walk
    from ``sites[i]`` stops at step ``m`` on ``sites[j]``.
    """
    with _precision(precise):
        return _hitting(model, y, n, top, prob, precise)


def _precision(precise: bool):
    return mpmath.workdps(PRECISE_DPS) if precise else nullcontext()


def _hitting(model, y, n, top, prob, precise):
    y = _check_y(y, n, strict=True).astype(int)
    lo = int(y[n - 1]) + 1
    sites = np.arange(lo, max(top, lo - 1) + 1)
    X = len(sites)
    dtype = object if precise else float
    zero = mpmath.mpf(0) if precise else 0.0
    H = np.full((X, n, X), zero, dtype=dtype)
    if X == 0:
        return sites, H
    law = step_law(model, prob, X, precise)
    gap = sites[:, None] - sites[None, :]
    T = np.where(gap > 0, law[np.clip(gap, 0, X)], zero)
    alive = np.full((X, X), zero, dtype=dtype)
    np.fill_diagonal(alive, 1 if not precise else mpmath.mpf(1))
    for m in range(n):
        stop = sites > y[m]
        H[:, m, stop] = alive[:, stop]
        alive = np.where(stop[None, :], zero, alive) @ T
    return sites, H


def phi_epi_table(model: str, y, t, n: int, r_values, top: int, prob=None, precise=False):
    """phi^y_{t,r,n}(v) for r in ``r_values`` and v in (y_n, top]; shape (R, V)."""
    r_values = np.asarray(r_values, dtype=int)
    sites, H = hitting_distribution(model, y, n, top, prob, precise)
    out = np.zeros((len(r_values), len(sites)), dtype=object if precise else float)
    if len(sites) == 0:
        return sites, out
    offsets = r_values[:, None] - sites[None, :]
    with _precision(precise):
        for m in range(n):
            level = basis_by_offset(model, "phibar", t, n - m, offsets, prob, precise)
            out += level @ H[:, m, :].T
    return sites, out


def phi_epi_discrete(model: str, y, t, a: int, n: int, v: int, prob=None, tol: float = 1e-15) -> float:
    """E_v[ phibar_{t,a,n-tau}(B_tau) 1_{tau<n} ] for the model's lattice walk.

    The sum is exact; ``tol`` is accepted for interface symmetry with the
    continuous version and the returned value carries no truncation error.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    y = _check_y(y, n, strict=True)
    if v <= y[n - 1]:
        return 0.0
    sites, tab = phi_epi_table(model, y, t, n, [a], int(v), prob)
    return float(tab[0, -1])


# ----------------------------------------------------------------------------
# Exp(1) walk
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class PanelRule:
    nodes: int = 16
    max_width: float = 2.0

    def __post_init__(self):
        if self.nodes < 16:
            raise ValueError("at least 16 nodes per panel")


class _Panels:
    """Gauss-Legendre panels on [lo, hi] split at the given breakpoints."""

    def __init__(self, breaks, rule: PanelRule):
        edges = [breaks[0]]
        for b in breaks[1:]:
            width = b - edges[-1]
            if width <= 0:
                continue
            pieces = max(1, math.ceil(width / rule.max_width))
            edges.extend(np.linspace(edges[-1], b, pieces + 1)[1:])
        self.edges = np.array(edges)
        m = rule.nodes
        xi, wi = legendre.leggauss(m)
        self.xi, self.wi = xi, wi
        V = legendre.legvander(xi, m - 1)
        self.vinv = np.linalg.inv(V)
        half = np.diff(self.edges) / 2
        mid = (self.edges[1:] + self.edges[:-1]) / 2
        self.half, self.mid = half, mid
        self.x = mid[:, None] + half[:, None] * xi[None, :]  # (P, m)
        self.w = half[:, None] * wi[None, :]
        anti = legendre.legint(np.eye(m), lbnd=-1, axis=0)  # (m+1, m)
        self.cumulative = legendre.legvander(xi, m) @ anti @ self.vinv  # S_ref

    @property
    def count(self):
        return len(self.half)

    def antiderivative(self, vals, x):
        """int_{lo}^{x} of the piecewise interpolant of ``vals`` (..., P, m)."""
        full = (vals * self.w).sum(-1)
        prefix = np.concatenate([np.zeros(full.shape[:-1] + (1,)), np.cumsum(full, -1)], -1)
        x = np.asarray(x, dtype=float)
        j = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, self.count - 1)
        xi = (x - self.mid[j]) / self.half[j]
        coef = np.einsum("km,...pm->...pk", self.vinv, vals)
        anti = legendre.legint(np.moveaxis(coef, -1, 0), lbnd=-1)  # (m+1, ..., P)
        basis = legendre.legvander(xi, anti.shape[0] - 1)  # (len x, m+1)
        part = np.einsum("xk,k...x->...x", basis, anti[..., j]) * self.half[j]
        return prefix[..., j] + part

    def cumulative_at_nodes(self, vals):
        full = (vals * self.w).sum(-1)
        prefix = np.concatenate([np.zeros(full.shape[:-1] + (1,)), np.cumsum(full, -1)[..., :-1]], -1)
        return prefix[..., None] + np.einsum("ij,...pj->...pi", self.cumulative, vals) * self.half[:, None]


def _walk_levels(y, t, n, r, rule):
    """W_1 on the panels of [y_n, y_1] for each r (shape (R, P, m)), or None."""
    breaks = sorted(set(float(v) for v in y[:n]))
    panels = _Panels(breaks, rule) if len(breaks) > 1 else None
    if panels is None:
        return None, None
    x = panels.x
    r = np.asarray(r, dtype=float)
    W = np.zeros((len(r),) + x.shape)  # W_n = 0
    for k in range(n - 1, 0, -1):
        above = x >= y[k]  # y_{k+1} with 0-based index k
        level = n - k - 1
        direct = rbm_basis("phibar", level, t, x[None, :, :] - r[:, None, None])
        integ = panels.cumulative_at_nodes(W)
        W = np.where(above[None], direct, integ)
    return panels, W


def phi_epi_scaled(y, t, n: int, r, v, rule: PanelRule | None = None) -> np.ndarray:
    """W_0^{(r)}(v) = e^{v-r} phi^y_{t,r,n}(v) for arrays r (R,) and v (V,); shape (R, V)."""
    rule = rule or PanelRule()
    r = np.atleast_1d(np.asarray(r, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    out = np.zeros((len(r), len(v)))
    if n < 1:
        return out
    if n > CONTINUOUS_N_GUARD:
        raise ValueError(f"n={n} beyond guard {CONTINUOUS_N_GUARD}")
    y = _check_y(y, n, strict=False)
    yn, y1 = y[n - 1], y[0]
    above = v >= y1
    if np.any(above):
        out[:, above] = rbm_basis("phibar", n - 1, t, v[None, above] - r[:, None])
    mid = (v > yn) & ~above
    if np.any(mid):
        panels, W1 = _walk_levels(y, t, n, r, rule)
        out[:, mid] = panels.antiderivative(W1, v[mid])
    return out


def phi_epi_continuous(y, t, a: float, n: int, v: float, rule: PanelRule | None = None,
                       tol: float = 1e-10) -> float:
    """E_v[ e^{a-B_tau} phibar_{n-tau-1}(t, B_tau - a) 1_{tau<n} ] for the Exp(1) walk.

    Evaluated with ``rule`` and with doubled panel density; raises if the two
    disagree by more than ``tol`` (relative to the value's scale).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    rule = rule or PanelRule()
    val = phi_epi_scaled(y, t, n, [a], [v], rule)[0, 0]
    fine = PanelRule(rule.nodes * 2, rule.max_width / 2)
    ref = phi_epi_scaled(y, t, n, [a], [v], fine)[0, 0]
    if abs(val - ref) > tol * max(1.0, abs(ref)):
        raise RuntimeError(f"panel refinement disagreement {abs(val - ref):.3e}")
    return float(math.exp(a - v) * val)
