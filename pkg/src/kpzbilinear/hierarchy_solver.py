"""Level-by-level solvers for the bilinear hierarchies.

Continuous equations are rearranged to give d/dt F_n in terms of F_n and the
level below, then all levels are advanced together by RK4 (method of lines).
From indicator data the rearranged equations are singular at t = 0 (near a
zero of F_{n-1} the level-n equation admits an undetermined homogeneous
solution C t^k), so evolutions start at t0 > 0 from exact level profiles:
closed forms for n = 1 and determinants for higher levels.

The packed RBM below a linear wall b(t) = mu t is solved in similarity
variables x = (a - b(t))/sqrt(t), s = log t, where the wall sits at x = 0 and
the profile at s -> -infinity is stationary; the scheme starts deep in that
regime and relaxes onto it.

Discrete recursions are exact: every term is a product of non-negative values,
and a vanishing divisor forces the new value to vanish by the support of the
dynamics.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .anchors import survival_one_particle, wall_level_one
from .fredholm import Discretization, fredholm_det
from .grid import Axis, GridField

DIVISION_FLOOR = 1e-8


@dataclass(frozen=True)
class Scheme:
    """Time-stepping parameters.

    ``t0`` is the start time as a fraction of the horizon; ``dt`` the RK4
    step (in t, or in s = log t for the wall scheme); ``dx`` the spatial step
    for RBM grids; ``floor`` the division floor below which points are
    marked invalid.
    """

    t0_fraction: float = 0.01
    dt: float = 1e-3
    dx: float = 0.05
    floor: float = DIVISION_FLOOR
    accuracy: int = 2


@dataclass
class HierarchyResult:
    field: GridField
    scheme: Scheme
    info: dict = field(default_factory=dict)


def _rk4(rhs, state, t, dt, steps, project=None, record=None):
    for _ in range(steps):
        k1 = rhs(t, state)
        k2 = rhs(t + dt / 2, state + dt / 2 * k1)
        k3 = rhs(t + dt / 2, state + dt / 2 * k2)
        k4 = rhs(t + dt, state + dt * k3)
        state = state + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
        if project is not None:
            state = project(state)
        if record is not None:
            record(t, state)
    return state, t


def _plan(t_start, times, dt):
    """Split [t_start, max(times)] into RK4 segments ending exactly at each time."""
    out, cur = [], t_start
    for T in times:
        span = T - cur
        if span < -1e-12:
            raise ValueError("output times must not precede the start time")
        steps = max(1, math.ceil(span / dt - 1e-9)) if span > 1e-12 else 0
        out.append((steps, span / steps if steps else 0.0))
        cur = T
    return out


def _levels_at(model, y, t, a_values, n_max, disc=None):
    """Exact profiles F_{t,a,n} (closed form at n = 1, determinants above)."""
    prof = np.ones((n_max + 1, len(a_values)))
    for n in range(1, n_max + 1):
        if n == 1:
            prof[1] = survival_one_particle(model, y[0], t, a_values)
        else:
            prof[n] = [fredholm_det(model, y, t, a, n, disc=disc) for a in a_values]
    return prof


# ----------------------------------------------------------------------------
# TASEP / Push-TASEP
# ----------------------------------------------------------------------------

def _lattice_rhs(model, floor):
    def rhs(t, F):
        # F has shape (levels+1, A + 2): level 0 is 1, columns 0 and -1 are frozen boundaries
        dF = np.zeros_like(F)
        for n in range(1, F.shape[0]):
            lo, cur = F[n - 1], F[n]
            if model == "tasep":
                num = cur[1:-1] * dF[n - 1, 1:-1] + cur[:-2] * lo[2:] - cur[1:-1] * lo[1:-1]
                den = lo[1:-1]
            else:
                num = cur[1:-1] * dF[n - 1, 2:] + cur[2:] * lo[1:-1] - cur[1:-1] * lo[2:]
                den = lo[2:]
            ok = den > floor
            dF[n, 1:-1] = np.where(ok, num / np.where(ok, den, 1.0), 0.0)
        return dF
    return rhs


def evolve_lattice_continuous(model: str, y, times, a_values, n_max: int, scheme: Scheme | None = None,
                              disc: Discretization | None = None) -> HierarchyResult:
    """TASEP or Push-TASEP hierarchy on the lattice ``a_values`` (contiguous integers)."""
    if model not in ("tasep", "push_tasep"):
        raise ValueError("continuous lattice hierarchies are tasep and push_tasep")
    scheme = scheme or Scheme()
    times = np.sort(np.asarray(times, dtype=float))
    a_values = np.asarray(a_values, dtype=int)
    if np.any(np.diff(a_values) != 1):
        raise ValueError("a_values must be contiguous integers")
    t0 = scheme.t0_fraction * times[-1]
    if times[0] < t0:
        raise ValueError("output times must be >= t0")
    ext = np.arange(a_values[0] - 1, a_values[-1] + 2)
    state = _levels_at(model, y, t0, ext, n_max, disc)
    frozen = state[:, [0, -1]].copy()

    def project(F):
        F[:, [0, -1]] = frozen
        return F

    rhs = _lattice_rhs(model, scheme.floor)
    out = np.zeros((len(times), len(a_values), n_max + 1))
    t = t0
    for i, (steps, h) in enumerate(_plan(t0, times, scheme.dt)):
        state, t = _rk4(rhs, state, t, h, steps, project)
        out[i] = state[:, 1:-1].T
    valid = _floor_mask(out, scheme.floor)
    axes = (_time_axis(times), Axis.from_values(a_values, False), Axis.from_values(np.arange(n_max + 1), False))
    gf = GridField(out, axes, valid=valid, meta={"model": model, "y": list(map(float, y)), "t0": t0})
    return HierarchyResult(gf, scheme, {"t0": t0, "boundary": "frozen exact values at both ends"})


def _floor_mask(out, floor):
    valid = np.ones(out.shape, dtype=bool)
    valid[..., 1:] = out[..., :-1] > floor
    return valid


def _time_axis(times):
    return Axis.from_values(times, True)


# ----------------------------------------------------------------------------
# RBM
# ----------------------------------------------------------------------------

def _d1(G, h):
    d = np.zeros_like(G)
    d[..., 1:-1] = (G[..., 2:] - G[..., :-2]) / (2 * h)
    return d


def _d2(G, h):
    d = np.zeros_like(G)
    d[..., 1:-1] = (G[..., 2:] - 2 * G[..., 1:-1] + G[..., :-2]) / (h * h)
    return d


def _rbm_rhs(h, floor, drift=None):
    """Rearranged RBM hierarchy; ``drift(t, x)`` adds the similarity advection."""
    def rhs(t, G):
        dG = np.zeros_like(G)
        g1, g2 = _d1(G, h), _d2(G, h)
        c = drift(t) if drift is not None else None
        for n in range(1, G.shape[0]):
            lo, cur = G[n - 1], G[n]
            num = cur * dG[n - 1] + 0.5 * lo * g2[n] - g1[n] * g1[n - 1] + 0.5 * cur * g2[n - 1]
            if c is not None:
                num = num + c * (lo * g1[n] - cur * g1[n - 1])
            ok = lo > floor
            val = np.where(ok, num / np.where(ok, lo, 1.0), 0.0)
            val[0] = val[-1] = 0.0
            dG[n] = val
        return dG
    return rhs


def _log_rbm_rhs(h):
    """RBM hierarchy for u_n = log F_n; no division is needed in this form:

        d_t u_n = d_t u_{n-1} + (u_n'' + u_{n-1}'')/2 + (u_n' - u_{n-1}')^2/2.
    """
    def rhs(t, U):
        ext = np.concatenate([U, 3 * U[:, -1:] - 3 * U[:, -2:-1] + U[:, -3:-2]], axis=1)
        d1 = (ext[:, 2:] - ext[:, :-2]) / (2 * h)
        d2 = (ext[:, 2:] - 2 * ext[:, 1:-1] + ext[:, :-2]) / (h * h)
        dU = np.zeros_like(U)
        for n in range(1, U.shape[0]):
            dU[n, 1:] = dU[n - 1, 1:] + 0.5 * (d2[n] + d2[n - 1]) + 0.5 * (d1[n] - d1[n - 1]) ** 2
        return dU
    return rhs


TAIL_RESOLVED = 1e-10


def _log_tail(a, F, cut):
    """log F, continued by a quadratic fit where F falls below ``cut``.

    Determinant values below ``cut`` carry no relative accuracy; the upper
    tail of log F is Gaussian to leading order.
    """
    ok = F > cut
    if ok.all():
        return np.log(F)
    last = int(np.argmin(ok)) - 1
    ok[last + 1:] = False
    if last < 6:
        raise ValueError("too few resolved points for the tail fit")
    sel = slice(last - 5, last + 1)
    coef = np.polyfit(a[sel], np.log(F[sel]), 2)
    u = np.log(np.where(ok, F, 1.0))
    u[last + 1:] = np.polyval(coef, a[last + 1:])
    return u


def evolve_rbm(y, times, a_lo: float, a_hi: float, n_max: int, scheme: Scheme | None = None,
               disc: Discretization | None = None) -> HierarchyResult:
    """RBM hierarchy without wall on [a_lo, a_hi] from determinant profiles at t0 (default 0.1 T).

    Solved for log F, which stays smooth where F is tiny; the left end is held
    at its initial value and the right end is extrapolated quadratically, as
    is the unresolved upper tail of the initial profile.
    """
    scheme = scheme or Scheme(t0_fraction=0.1)
    times = np.sort(np.asarray(times, dtype=float))
    t0 = scheme.t0_fraction * times[-1]
    m = int(round((a_hi - a_lo) / scheme.dx))
    a = a_lo + scheme.dx * np.arange(m + 1)
    prof = _levels_at("rbm", y, t0, a, n_max, disc)
    state = np.zeros_like(prof)
    for n in range(1, n_max + 1):
        state[n] = _log_tail(a, prof[n], TAIL_RESOLVED)
    h = scheme.dx
    rhs = _log_rbm_rhs(h)
    cap = min(scheme.dt, 0.25 * h * h)
    out = np.zeros((len(times), len(a), n_max + 1))
    t, count = t0, 0
    for i, T in enumerate(times):
        while t < T - 1e-12:
            speed = np.max(np.abs(np.diff(np.gradient(state, h, axis=1), axis=0)))
            dt = min(cap, 0.5 * h / max(speed, 1e-12), T - t)
            state, t = _rk4(rhs, state, t, dt, 1)
            count += 1
        out[i] = np.exp(state).T
    axes = (_time_axis(times), Axis.from_values(a, True), Axis.from_values(np.arange(n_max + 1), False))
    gf = GridField(out, axes, meta={"model": "rbm", "y": list(map(float, y)), "t0": t0})
    return HierarchyResult(gf, scheme, {"t0": t0, "steps": count, "variables": "log F"})


def _wall_rhs(x, h, rate):
    """Similarity-variable hierarchy for the increments Delta_n (see evolve_rbm_wall)."""
    def rhs(s, D):
        drift = rate * math.exp(s / 2)
        ghost_right = D[:, -1:] - drift * h
        ext = np.concatenate([D[:, :1], D, ghost_right], axis=1)
        d1 = (ext[:, 2:] - ext[:, :-2]) / (2 * h)
        d2 = (ext[:, 2:] - 2 * ext[:, 1:-1] + ext[:, :-2]) / (h * h)
        c = drift + x / 2
        out = np.zeros_like(D)
        below = np.zeros_like(x)
        for k in range(D.shape[0]):
            n = k + 1
            out[k] = (0.5 * d2[k] + c * d1[k] + n * (drift + d1[k]) / x + n / 2
                      + 0.5 * d1[k] ** 2 + below)
            below = below + d2[k]
        out[:, 0] = 0.0
        return out
    return rhs


def evolve_rbm_wall(rate: float, times, n_max: int, width: float = 10.0, dx: float = 0.05,
                    ds: float | None = None, s_start: float = -8.0) -> HierarchyResult:
    """Packed RBM (y = 0) below the wall b(t) = rate * t, similarity scheme.

    In x = (a - b(t))/sqrt(t), s = log t the profiles vanish at the wall like
    |x|^{n(n+1)/2}; writing G_n = |x|^{n(n+1)/2} exp(Delta_1 + ... + Delta_n)
    removes the singular terms and leaves, for each n,

        d_s D_n = D_n''/2 + (c + n/x) D_n' + n (rate sqrt(t))/x + n/2 + (D_n')^2/2 + sum_{k<n} D_k''

    with c = rate sqrt(t) + x/2, the regularity condition D_n'(0) = -rate sqrt(t)
    and G_n(-width) = 1.  The staggered grid x_j = -(j + 1/2) dx avoids x = 0.
    The start ``s_start`` = log(t0/T_max) lies deep in the regime where the
    wall is static and the stationary profile attracts the initial guess.
    """
    times = np.sort(np.asarray(times, dtype=float))
    m = int(round(width / dx))
    x = -width + dx * (np.arange(m) + 0.5)
    from scipy.stats import norm
    ratio = (1 - 2 * norm.cdf(x)) / np.abs(x)
    D = np.array([n * np.log(ratio) for n in range(1, n_max + 1)])
    D[:, 0] = -np.arange(1, n_max + 1) * math.log(abs(x[0]))
    rhs = _wall_rhs(x, dx, rate)
    ds = ds or 0.4 * dx * dx / (n_max + 1)
    s0 = math.log(times[-1]) + s_start
    out = np.ones((len(times), m, n_max + 1))
    s = s0
    expo = np.arange(1, n_max + 1) * (np.arange(1, n_max + 1) + 1) // 2
    for i, (steps, h) in enumerate(_plan(s0, np.log(times), ds)):
        D, s = _rk4(rhs, D, s, h, steps)
        logG = expo[:, None] * np.log(np.abs(x))[None, :] + np.cumsum(D, axis=0)
        out[i, :, 1:] = np.exp(logG).T
    axes = (_time_axis(times), Axis.from_values(x, True), Axis.from_values(np.arange(n_max + 1), False))
    gf = GridField(out, axes, meta={"model": "rbm_wall", "rate": rate, "coords": "similarity"})
    return HierarchyResult(gf, Scheme(dt=ds, dx=dx), {"s0": s0, "ds": ds, "width": width})


def wall_profile(res: HierarchyResult, time_index: int, n: int, a_values) -> np.ndarray:
    """Physical F_{t,a,n} from a similarity-variable wall solution."""
    gf = res.field
    t = gf.axes[0].values[time_index]
    rate = gf.meta["rate"]
    x = np.append(gf.axes[1].values, 0.0)
    vals = np.append(gf.values[time_index, :, n], 0.0)
    xa = (np.asarray(a_values, dtype=float) - rate * t) / math.sqrt(t)
    return np.where(xa >= 0, 0.0, np.interp(xa, x, vals, left=1.0))


def evolve_continuous(eq: str, y=None, times=(1.0,), grid=None, n_max: int = 1, wall: float | None = None,
                      scheme: Scheme | None = None) -> HierarchyResult:
    """Dispatch: ``tasep``/``push_tasep`` (grid = a values), ``rbm`` (grid = (a_lo, a_hi)),
    ``rbm`` with ``wall`` = rate for packed data below b(t) = rate t."""
    if eq in ("tasep", "push_tasep"):
        return evolve_lattice_continuous(eq, y, times, grid, n_max, scheme)
    if eq == "rbm" and wall is not None:
        return evolve_rbm_wall(wall, times, n_max)
    if eq == "rbm":
        return evolve_rbm(y, times, grid[0], grid[1], n_max, scheme)
    raise ValueError(f"unknown continuous equation {eq!r}")


# ----------------------------------------------------------------------------
# discrete recursions
# ----------------------------------------------------------------------------

def _indicator(y, a, n_max):
    F = np.ones((n_max + 1, len(a)))
    for n in range(1, n_max + 1):
        F[n] = (y[n - 1] > a).astype(float)
    return F


def bootstrap_parallel(y, prob: float, a, n_max: int, guard: int = 12) -> np.ndarray:
    """F_{1,a,n} for Parallel TASEP by enumerating the first n coins."""
    if n_max > guard:
        raise ValueError(f"bootstrap enumeration limited to n <= {guard}")
    y = np.asarray(y[:n_max], dtype=int)
    F = np.ones((n_max + 1, len(a)))
    F[1:] = 0.0
    for coins in itertools.product((0, 1), repeat=n_max):
        c = np.array(coins)
        w = np.prod(np.where(c == 1, prob, 1 - prob))
        free = np.ones(n_max, dtype=bool)
        free[1:] = y[:-1] != y[1:] + 1
        pos = y + (c.astype(bool) & free)
        F[1:] += w * (pos[:, None] > a[None, :])
    return F


def recurse_discrete(eq: str, y, prob: float, t_max: int, n_max: int, a_values=None) -> HierarchyResult:
    """Exact recursion for ``parallel``, ``blocking`` or ``pushing`` (prob = p, p, q)."""
    if eq not in ("parallel", "blocking", "pushing"):
        raise ValueError(f"unknown discrete equation {eq!r}")
    y = [int(v) for v in y]
    lo = min(y[:n_max]) - t_max - 2
    hi = max(y[:n_max]) + t_max + 2
    a = np.arange(lo, hi + 1)
    p = prob
    q = 1 - prob
    layers = [_indicator(y, a, n_max)]
    if eq == "parallel" and t_max >= 1:
        layers.append(bootstrap_parallel(y, prob, a, n_max))
    while len(layers) <= t_max:
        t = len(layers) - 1  # advance t -> t + 1
        cur = layers[t]
        new = np.ones_like(cur)
        for n in range(1, n_max + 1):
            # shifted copies padded with the exact far-field values
            if eq == "parallel":
                prev = layers[t - 1]
                num = p * _sh(cur[n], -1, 1.0) * _sh(cur[n - 1], 1, 0.0) + q * cur[n] * cur[n - 1]
                den = prev[n - 1]
            elif eq == "blocking":
                num = p * _sh(cur[n], -1, 1.0) * _sh(new[n - 1], 1, 0.0) + q * cur[n] * new[n - 1]
                den = cur[n - 1]
            else:
                # pushing: prob is q, the left-jump probability
                num = prob * _sh(cur[n], 1, 0.0) * new[n - 1] + (1 - prob) * cur[n] * _sh(new[n - 1], 1, 0.0)
                den = _sh(cur[n - 1], 1, 0.0)
            new[n] = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
        layers.append(new)
    vals = np.stack(layers)  # (t, n, a)
    vals = np.transpose(vals, (0, 2, 1))
    out = vals
    if a_values is not None:
        idx = np.asarray(a_values, dtype=int) - lo
        if np.any(idx < 0) or np.any(idx >= len(a)):
            raise ValueError("requested a outside the recursion window")
        out = vals[:, idx, :]
        a = np.asarray(a_values, dtype=int)
    axes = (Axis.from_values(np.arange(t_max + 1), False), Axis.from_values(a, False),
            Axis.from_values(np.arange(n_max + 1), False))
    gf = GridField(out, axes, meta={"model": eq, "y": y, "prob": prob})
    return HierarchyResult(gf, Scheme(), {"bootstrap": "enumeration" if eq == "parallel" else "none"})


def _sh(v, k, fill):
    """v[a + k] with ``fill`` beyond the ends."""
    out = np.empty_like(v)
    if k > 0:
        out[:-k] = v[k:]
        out[-k:] = fill
    elif k < 0:
        out[-k:] = v[:k]
        out[:-k] = fill
    else:
        out[:] = v
    return out
