"""Kernel assembly and Fredholm determinants.

Lattice kernels are exact finite matrices: outside the window
``(y_n, a + reach]`` either every row or every column of the kernel vanishes,
so by cyclicity the truncated determinant equals the full one.  Push-TASEP is
the exception (its psi factor has an unbounded, super-exponentially decaying
tail) and its window is cut where a certified bound drops below 1e-17.

The RBM kernel is discretized by Nystrom on composite Gauss-Legendre panels.
Its factors carry ``e^{u-v}``; the assembly works with the conjugated kernel
(which has the same determinant and resolvent pairings after rescaling).
"""
from __future__ import annotations

import math
import warnings
from contextlib import nullcontext
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .grid import Axis, GridField
from .specfun import LATTICE_MODELS, PRECISE_DPS, basis_by_offset, rbm_basis
from .walkfun import PanelRule, _Panels, phi_epi_scaled, phi_epi_table

MODELS = ("rbm",) + LATTICE_MODELS


@dataclass(frozen=True)
class Discretization:
    """Numerical parameters for kernel assembly.

    ``margin`` pads lattice windows; ``reach`` overrides the Gaussian cut-off
    of the RBM kernel; ``panel_nodes``/``panel_width`` fix the RBM panels for
    both the space and the r-integral.
    """

    margin: int = 8
    reach: float | None = None
    panel_nodes: int = 16
    panel_width: float = 2.0
    r_panel_width: float | None = None
    precise: bool = False
    tail_tol: float = 1e-17


@dataclass
class KernelAssembly:
    model: str
    t: float
    a: float
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    matrix: np.ndarray
    psi: np.ndarray  # psi_{t,a,n} on nodes (conjugated frame)
    phi: np.ndarray  # phi^y_{t,a,n} on nodes (conjugated frame)
    truncation: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    _lu: tuple | None = None

    @property
    def size(self) -> int:
        return len(self.nodes)

    def lu(self):
        if self._lu is None:
            # an exactly singular I - K is legitimate (F = 0); det_fredholm reports it
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", LinAlgWarning)
                self._lu = lu_factor(np.eye(self.size) - self.matrix)
        return self._lu

    def solve(self, f: np.ndarray) -> np.ndarray:
        """(I - K)^{-1} f with one step of iterative refinement."""
        lu = self.lu()
        x = lu_solve(lu, f)
        res = f - (x - self.matrix @ x)
        return x + lu_solve(lu, res)

    def inner(self, f, g) -> float:
        return float(np.sum(self.weights * f * g))


class DeterminantError(RuntimeError):
    pass


def _validate(model, y, n):
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    if n < 0:
        raise ValueError("n must be >= 0")
    if len(y) < n:
        raise ValueError(f"initial data has {len(y)} entries, need {n}")


# ----------------------------------------------------------------------------
# lattice windows
# ----------------------------------------------------------------------------

def _push_reach(t: float, tol: float) -> int:
    """m with sum_{k>=m} (2t)^k/k! e^{2t} below tol (dominant psi tail)."""
    m, term = 0, 1.0
    scale = math.exp(min(2 * t, 700.0))
    while term * scale * 2 > tol or m < 4:
        m += 1
        term *= 2 * t / m
    return m


def _lattice_ranges(model, y, t, a, n, disc: Discretization):
    """Sites (y_n, hi] and the r-range for which some term is nonzero."""
    yn = int(y[n - 1])
    if model == "push_tasep":
        M = _push_reach(t, disc.tail_tol)
        hi = a + M
        r_lo = yn + 1 - M
        return yn, hi, r_lo, {"window_reach": M, "tail_bound": disc.tail_tol}
    reach = n + (int(t) if model == "pushing" else 0)
    hi = a + reach
    r_lo = yn + 1 - reach
    return yn, hi, r_lo, {"window_reach": reach, "tail_bound": 0.0}




def assemble_kernel(model: str, y, t, a, n: int, prob: float | None = None,
                    disc: Discretization | None = None) -> KernelAssembly:
    """Discretized K_{t,a,n} for the given model and initial data."""
    disc = disc or Discretization()
    y = list(y)
    _validate(model, y, n)
    if model == "rbm":
        return _assemble_rbm(y, float(t), float(a), n, disc)
    a = int(a)
    if n == 0:
        return _empty(model, t, a, n)
    yn, hi, r_lo, trunc = _lattice_ranges(model, y, t, a, n, disc)
    if hi <= yn:
        return _empty(model, t, a, n, trunc)
    r = np.arange(r_lo, a + 1)
    sites, phiy = phi_epi_table(model, y, t, n, r, hi, prob, disc.precise)
    psi = basis_by_offset(model, "psi", t, n, r[:, None] - sites[None, :], prob, disc.precise)
    extras = {"prob": prob, "y": y, "disc": disc}
    with _precision(disc.precise):
        K = psi.T @ phiy
    if disc.precise:
        extras["exact"] = (K, psi[-1], phiy[-1])
    trunc.update({"window": (int(sites[0]), int(sites[-1])), "r_range": (int(r_lo), a)})
    return KernelAssembly(model, t, a, n, sites.astype(float), np.ones(len(sites)), _f(K),
                          _f(psi[-1]), _f(phiy[-1]), trunc, extras)


def _f(x):
    return np.asarray(x, dtype=float)


def _precision(precise: bool):
    return mpmath.workdps(PRECISE_DPS) if precise else nullcontext()


def _empty(model, t, a, n, trunc=None):
    z = np.zeros(0)
    return KernelAssembly(model, t, a, n, z, z, np.zeros((0, 0)), z, z, dict(trunc or {}), {})


def lattice_factor(K: KernelAssembly, kind: str, r: int, n: int | None = None) -> np.ndarray:
    """psi_{t,r,n} or phi^y_{t,r,n} on the nodes of a lattice assembly.

    Precise assemblies return object arrays of mpmath numbers.
    """
    n = K.n if n is None else n
    if K.size == 0:
        return np.zeros(0)
    sites = K.nodes.astype(int)
    prob, disc = K.extras["prob"], K.extras["disc"]
    if kind == "psi":
        return basis_by_offset(K.model, "psi", K.t, n, r - sites, prob, disc.precise)
    zero = mpmath.mpf(0) if disc.precise else 0.0
    if n <= 0:
        return np.full(len(sites), zero, dtype=object if disc.precise else float)
    ys = K.extras["y"]
    yn = int(ys[n - 1])
    out = np.full(len(sites), zero, dtype=object if disc.precise else float)
    keep = sites > yn
    if np.any(keep):
        s, tab = phi_epi_table(K.model, ys, K.t, n, [r], int(sites[-1]), prob, disc.precise)
        lookup = dict(zip(s.tolist(), tab[0]))
        out[keep] = [lookup[v] for v in sites[keep]]
    return out


# ----------------------------------------------------------------------------
# RBM
# ----------------------------------------------------------------------------

def rbm_reach(t: float, n: int, tol: float = 1e-15) -> float:
    """Smallest R >= max(6 sqrt t, 6) with exp(-R^2/2t)(1+R/sqrt t)^{2n} < tol."""
    s = math.sqrt(t)
    R = max(6 * s, 6.0)
    while -R * R / (2 * t) + 2 * n * math.log1p(R / s) > math.log(tol):
        R += 0.5
    return R


def _assemble_rbm(y, t, a, n, disc: Discretization, n_phi: int | None = None):
    if t <= 0:
        raise ValueError("RBM kernels need t > 0")
    if n == 0:
        return _empty("rbm", t, a, n)
    R = disc.reach or rbm_reach(t, n)
    yn = float(y[n - 1])
    top = a + R
    if top <= yn:
        return _empty("rbm", t, a, n, {"reach": R})
    rule = PanelRule(disc.panel_nodes, disc.panel_width)
    breaks = sorted({v for v in map(float, y[:n]) if v < top} | {yn, top})
    space = _Panels(breaks, rule)
    x = space.x.ravel()
    w = space.w.ravel()
    r_width = disc.r_panel_width or min(disc.panel_width, max(0.25, 1.5 * math.sqrt(t)))
    rpan = _Panels([yn - R, a], PanelRule(disc.panel_nodes, r_width)) if a > yn - R else None
    if rpan is None:
        return _empty("rbm", t, a, n, {"reach": R})
    r = rpan.x.ravel()
    wr = rpan.w.ravel()
    psi_r = rbm_basis("phi", n, t, x[None, :] - r[:, None])  # (Nr, N)
    phi_r = phi_epi_scaled(y, t, n, r, x, rule)  # (Nr, N)
    K = (psi_r * wr[:, None]).T @ phi_r
    M = K * w[None, :]
    psi_a = rbm_basis("phi", n, t, x - a)
    phi_a = phi_epi_scaled(y, t, n, [a], x, rule)[0]
    trunc = {"reach": R, "panels_space": space.count, "panels_r": rpan.count,
             "tail_bound": 1e-15}
    return KernelAssembly("rbm", t, a, n, x, w, M, psi_a, phi_a, trunc,
                          {"y": list(y), "disc": disc, "rule": rule})


def rbm_factor(K: KernelAssembly, kind: str, n: int, a: float | None = None) -> np.ndarray:
    """Conjugated psi_{t,a,n} / phi^y_{t,a,n} on the nodes of an RBM assembly."""
    a = K.a if a is None else a
    if kind == "psi":
        return rbm_basis("phi", n, K.t, K.nodes - a)
    return phi_epi_scaled(K.extras["y"], K.t, n, [a], K.nodes, K.extras["rule"])[0]


# ----------------------------------------------------------------------------
# determinants and resolvents
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class DetResult:
    value: float
    log_abs: float
    sign: float
    singular: bool


def det_fredholm(K: KernelAssembly, guard: float = 1e-14) -> DetResult:
    """det(I - K) by pivoted LU; ``singular`` flags |det| below ``guard``."""
    if K.size == 0:
        return DetResult(1.0, 0.0, 1.0, False)
    if "exact" in K.extras:
        with _precision(True):
            d = mpmath.det(mpmath.eye(K.size) - mpmath.matrix(K.extras["exact"][0].tolist()))
        value = float(d)
        log_abs = float(mpmath.log(abs(d))) if d != 0 else -math.inf
        return DetResult(value, log_abs, float(mpmath.sign(d)), abs(value) < guard)
    lu, piv = K.lu()
    d = np.diag(lu)
    sign = float(np.prod(np.sign(d)) * (-1) ** int(np.sum(piv != np.arange(len(piv)))))
    with np.errstate(divide="ignore"):
        log_abs = float(np.sum(np.log(np.abs(d))))
    value = sign * math.exp(log_abs) if np.isfinite(log_abs) else 0.0
    return DetResult(value, log_abs, sign, abs(value) < guard)


def fredholm_det(model, y, t, a, n, prob=None, disc=None) -> float:
    return det_fredholm(assemble_kernel(model, y, t, a, n, prob, disc)).value


def resolvent_inner(K: KernelAssembly, f, g, cond_guard: float = 1e12) -> float:
    """<(I-K)^{-1} f, g> in the discretization inner product."""
    if K.size == 0:
        return 0.0
    if "exact" in K.extras:
        with _precision(True):
            A = mpmath.eye(K.size) - mpmath.matrix(K.extras["exact"][0].tolist())
            x = mpmath.lu_solve(A, mpmath.matrix([mpmath.mpf(v) for v in f]))
            return float(mpmath.fsum(x[i] * g[i] for i in range(K.size)))
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if cond_guard is not None:
        c = np.linalg.cond(np.eye(K.size) - K.matrix)
        if not np.isfinite(c) or c > cond_guard:
            raise DeterminantError(f"I-K nearly singular (cond {c:.2e})")
    return K.inner(K.solve(f), g)


@dataclass(frozen=True)
class Partials:
    F: float
    dF_dt: float | None
    dF_da: float | None = None
    d2F_da2: float | None = None


def analytic_partials(model: str, y, t, a, n: int, prob=None, disc=None) -> Partials:
    """F and its parameter derivatives from resolvent pairings (no differencing).

    RBM returns d/dt, d/da and d^2/da^2; TASEP and Push-TASEP return d/dt;
    discrete-time models only F.
    """
    K = assemble_kernel(model, y, t, a, n, prob, disc)
    F = det_fredholm(K).value
    if K.size == 0:
        zero = 0.0
        return Partials(F, zero if model in ("rbm", "tasep", "push_tasep") else None,
                        zero if model == "rbm" else None, zero if model == "rbm" else None)
    if model == "rbm":
        psi_n, phi_n = K.psi, K.phi
        psi_up = rbm_factor(K, "psi", n + 1)
        phi_dn = rbm_factor(K, "phi", n - 1) if n > 1 else np.zeros(K.size)
        up = resolvent_inner(K, psi_up, phi_n, None)
        dn = resolvent_inner(K, psi_n, phi_dn, None)
        same = resolvent_inner(K, psi_n, phi_n, None)
        return Partials(F, -0.5 * F * (up + dn), -F * same, -F * (up - dn))
    psi, phi = K.extras["exact"][1:] if "exact" in K.extras else (K.psi, K.phi)
    if model == "tasep":
        phi_next = lattice_factor(K, "phi", int(a) + 1)
        return Partials(F, 0.5 * F * resolvent_inner(K, psi, phi_next, None))
    if model == "push_tasep":
        psi_next = lattice_factor(K, "psi", int(a) + 1)
        return Partials(F, -2.0 * F * resolvent_inner(K, psi_next, phi, None))
    return Partials(F, None)


# ----------------------------------------------------------------------------
# batch evaluation
# ----------------------------------------------------------------------------

def validity_mask(model, y, t_values, a_values, n_values) -> np.ndarray:
    """Points where the determinant formulas hold (levels n <= 0 always valid).

    Parallel and Blocking: a < y_n + t.  Pushing and Push-TASEP: a < y_n.
    """
    T, A, N = np.meshgrid(np.asarray(t_values, float), np.asarray(a_values, float),
                          np.asarray(n_values, int), indexing="ij")
    valid = np.ones(T.shape, dtype=bool)
    if model in ("parallel", "blocking", "pushing", "push_tasep"):
        yn = np.array([float(y[k - 1]) if k >= 1 else np.inf for k in N.ravel()]).reshape(N.shape)
        bound = yn + T if model in ("parallel", "blocking") else yn
        valid = (N <= 0) | (A < bound)
    return valid


def F_field(model: str, y, t_values, a_values, n_values, prob=None, disc=None,
            partials: bool = False) -> GridField:
    """Determinant values on a (t, a, n) box; n <= 0 rows are 1 by extension.

    Entries outside the model's validity region, or where I - K is singular to
    working precision, are flagged invalid (values are kept).
    """
    t_values = np.asarray(t_values, dtype=float)
    a_values = np.asarray(a_values, dtype=float)
    n_values = np.asarray(n_values, dtype=int)
    shape = (len(t_values), len(a_values), len(n_values))
    vals = np.ones(shape)
    singular = np.zeros(shape, dtype=bool)
    guard = 1e-40 if (disc is not None and disc.precise) else 1e-13
    extra = {}
    want = partials and model in ("rbm", "tasep", "push_tasep")
    if want:
        extra["t"] = np.zeros(shape)
        if model == "rbm":
            extra["a"] = np.zeros(shape)
            extra["aa"] = np.zeros(shape)
    for i, t in enumerate(t_values):
        for j, a in enumerate(a_values):
            for k, n in enumerate(n_values):
                if n <= 0:
                    continue
                if want:
                    p = analytic_partials(model, y, t, a, int(n), prob, disc)
                    vals[i, j, k] = p.F
                    extra["t"][i, j, k] = p.dF_dt
                    if model == "rbm":
                        extra["a"][i, j, k] = p.dF_da
                        extra["aa"][i, j, k] = p.d2F_da2
                else:
                    vals[i, j, k] = fredholm_det(model, y, t, a, int(n), prob, disc)
                if abs(vals[i, j, k]) < guard:
                    singular[i, j, k] = True
    valid = validity_mask(model, y, t_values, a_values, n_values) & ~singular
    continuous_t = model in ("rbm", "tasep", "push_tasep")
    t_axis = Axis.from_values(t_values, continuous_t)
    a_axis = Axis.from_values(a_values, model == "rbm")
    n_axis = Axis.from_values(n_values.astype(float), False)
    return GridField(vals, (t_axis, a_axis, n_axis), partials=extra or None, valid=valid,
                     meta={"model": model, "y": [float(v) for v in y], "prob": prob})
