"""Formal scaling limits of the bilinear equations, checked as residual rates.

A map sends source coordinates (t, a, n) affinely to target coordinates.
Pulling a smooth target field back through it and evaluating the source
equation gives a residual that should behave like ``coeff * eps**order``
times the target equation's residual at the image point.

Maps flagged ``relabel`` pair the levels n and n-1 through a half-integer
centre: the source residual at (t, a, n) is compared with the target residual
at the image of (t, a, n - 1/2).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import Axis, GridField
from .hirota import (GridSampler, MarginError, bilinear_term, equation, residual_field,
                     residual_of_function)

ROUNDOFF = 1e-13


class DegenerateFit(ValueError):
    pass


@dataclass(frozen=True)
class ScalingMap:
    """Affine change of variables (t, a, n) -> target coordinates, per eps and p."""

    name: str
    source: str
    target: str
    target_axes: tuple[str, str, str]
    order: float
    relabel: bool
    lattice: tuple[bool, bool, bool]
    affine: Callable[[float, float | None], tuple]
    prob: Callable[[float, float | None], float | None]
    coeff: float

    def matrix(self, eps: float, prob: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        L, o = self.affine(eps, prob)
        return np.asarray(L, float), np.asarray(o, float)

    def source_prob(self, eps: float, prob: float | None = None) -> float | None:
        return self.prob(eps, prob)


def _kp_constants(p: float):
    q = 1 - p
    c1 = (p / (2 * q)) ** 0.25
    c2 = 2 ** 0.25 * (1 - math.sqrt(q)) / (p * q) ** 0.25
    c3 = 1 / math.sqrt(2 * p)
    c4 = 2 ** 0.25 / (p * q) ** 0.25
    return c1, c2, c3, c4


def _parallel_kp(e, p):
    c1, c2, c3, c4 = _kp_constants(0.5 if p is None else p)
    r = math.sqrt(e)
    return [[c1 * e ** 1.5, 0, 0], [0, e * c3, 0], [r * c2, -r * c4, -2 * r * c4]], [0, 2 * e * c3, 0]


def _rbm_kp(e, p):
    r = math.sqrt(e)
    return [[e ** 1.5, 0, 0], [e / 2, 0, -e / 2], [-r, -r, -r]], [0, 0, 0]


def _tasep_kp(e, p):
    r = math.sqrt(e)
    return [[e ** 1.5 / 2, 0, 0], [0, e / 2, 0], [r / 2, -r, -2 * r]], [0, e, 0]


MAPS: dict[str, ScalingMap] = {
    "rbm_kp": ScalingMap("rbm_kp", "rbm", "kp", ("T", "X", "A"), 2, True, (False, False, False),
                         _rbm_kp, lambda e, p: None, -0.5),
    "tasep_kp": ScalingMap("tasep_kp", "tasep", "kp", ("T", "X", "A"), 2, True, (False, True, True),
                           _tasep_kp, lambda e, p: None, -0.5),
    "tasep_rbm": ScalingMap("tasep_rbm", "tasep", "rbm", ("T", "A", "n"), 2, False, (False, True, True),
                            lambda e, p: ([[e ** 2, 0, 0], [-e, e, 0], [0, 0, 1]], [0, 0, 0]),
                            lambda e, p: None, 1.0),
    "parallel_kp": ScalingMap("parallel_kp", "parallel", "kp", ("T", "X", "A"), 2, True, (True, True, True),
                              _parallel_kp, lambda e, p: 0.5 if p is None else p, -1.0),
    "parallel_rbm": ScalingMap("parallel_rbm", "parallel", "rbm", ("T", "A", "n"), 2, False,
                               (True, True, True),
                               lambda e, p: ([[e ** 2, 0, 0], [-e ** 1.5, e ** 0.5, 0], [0, 0, 1]], [0, 0, 0]),
                               lambda e, p: e, 1.0),
    "parallel_toda": ScalingMap("parallel_toda", "parallel", "toda2d", ("T", "X", "r"), 2, True,
                                (True, True, True),
                                lambda e, p: ([[e, 0, 0], [0, e, 0], [1, -1, -2]], [0, 0, 1]),
                                lambda e, p: 1 - 4 * e ** 2, 1.0),
    "parallel_tasep": ScalingMap("parallel_tasep", "parallel", "tasep", ("T", "a", "n"), 1, False,
                                 (True, True, True),
                                 lambda e, p: ([[e, 0, 0], [0, 1, 0], [0, 0, 1]], [0, 0, 0]),
                                 lambda e, p: e, 1.0),
}


def get_map(map_id: str) -> ScalingMap:
    try:
        return MAPS[map_id]
    except KeyError:
        raise ValueError(f"unknown scaling map {map_id!r}; choose from {sorted(MAPS)}") from None


def map_point(map_id: str, eps: float, t, a, n, prob: float | None = None):
    """Target coordinates of the source point (t, a, n)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    L, o = get_map(map_id).matrix(eps, prob)
    x = (t, a, n)
    return tuple(sum(L[i][j] * x[j] for j in range(3) if L[i][j] != 0) + o[i] for i in range(3))


def pulled_function(map_id: str, F_smooth: Callable, eps: float, prob: float | None = None) -> Callable:
    """(t, a, n) -> F_smooth(map(t, a, n)); works on jets."""
    def F(t, a, n):
        return F_smooth(*map_point(map_id, eps, t, a, n, prob))
    return F


def pullback(map_id: str, F_smooth: Callable, eps: float, t_values, a_values, n_values,
             prob: float | None = None, domain: Callable | None = None) -> GridField:
    """Sample the pulled-back field on a source box.

    ``domain(T, X, A) -> bool`` guards the target field's domain.
    """
    m = get_map(map_id)
    src = m.source
    t_values, a_values, n_values = (np.asarray(v, float) for v in (t_values, a_values, n_values))
    vals = np.empty((len(t_values), len(a_values), len(n_values)))
    for i, t in enumerate(t_values):
        for j, a in enumerate(a_values):
            for k, n in enumerate(n_values):
                pt = map_point(map_id, eps, t, a, n, prob)
                if domain is not None and not domain(*pt):
                    raise ValueError(f"point {(t, a, n)} maps outside the target domain: {pt}")
                vals[i, j, k] = float(F_smooth(*pt))
    axes = (Axis.from_values(t_values, src in ("rbm", "tasep")), Axis.from_values(a_values, src == "rbm"),
            Axis.from_values(n_values, False))
    return GridField(vals, axes, meta={"map": map_id, "eps": eps})


def probe_point(map_id: str, eps: float, target=(0.0, 0.0, 0.0),
                prob: float | None = None) -> tuple[float, float, float]:
    """Source point whose (centred) image is nearest ``target`` on the source lattice."""
    m = get_map(map_id)
    L, o = m.matrix(eps, prob)
    x = np.linalg.solve(L, np.asarray(target, float) - o)
    if m.relabel:
        x[2] += 0.5
    for i, lat in enumerate(m.lattice):
        if lat:
            x[i] = round(x[i])
    return tuple(float(v) for v in x)


def source_residual(map_id: str, F_smooth: Callable, eps: float, point, prob: float | None = None) -> float:
    m = get_map(map_id)
    eq = equation(m.source, m.source_prob(eps, prob))
    raw, _ = residual_of_function(eq, pulled_function(map_id, F_smooth, eps, prob), point)
    return raw


def target_residual(map_id: str, F_smooth: Callable, eps: float, point, prob: float | None = None) -> float:
    """Target residual at the image of the source point (centred for relabelled maps)."""
    m = get_map(map_id)
    t, a, n = point
    image = map_point(map_id, eps, t, a, n - 0.5 if m.relabel else n, prob)
    raw, _ = residual_of_function(equation(m.target), F_smooth, image)
    return raw


@dataclass
class RateReport:
    map_id: str
    source: str
    target: str
    eps: list
    residual: list
    target_residual: list
    ratio: list
    exponent: float
    expected_exponent: float
    coeff: float
    degenerate: bool

    @property
    def final_ratio(self) -> float:
        return self.ratio[-1]

    def check(self, exp_tol: float = 0.1, ratio_tol: float = 0.05) -> dict:
        ok_exp = abs(self.exponent - self.expected_exponent) <= exp_tol
        ok_ratio = (not self.degenerate) and abs(self.final_ratio - 1) <= ratio_tol
        return {"map": self.map_id, "exponent": self.exponent, "expected": self.expected_exponent,
                "final_ratio": self.final_ratio, "exponent_ok": bool(ok_exp),
                "ratio_ok": bool(ok_ratio), "pass": bool(ok_exp and ok_ratio)}

    def to_json(self) -> dict:
        d = {k: getattr(self, k) for k in ("map_id", "source", "target", "eps", "residual",
                                            "target_residual", "ratio", "exponent",
                                            "expected_exponent", "coeff", "degenerate")}
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eps", "residual", "ratio"])
        for row in zip(self.eps, self.residual, self.ratio):
            w.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def scaling_rate(eq_src: str, map_id: str, F_smooth: Callable, eps_list, prob: float | None = None,
                 target=(0.0, 0.0, 0.0), allow_degenerate: bool = False) -> RateReport:
    """Residual of the source equation along ``eps_list`` and its log-log slope.

    ``ratio`` is r(eps) / (coeff * eps**order * target residual).  When the
    target residual vanishes the fit is degenerate: the ratio is NaN and,
    unless ``allow_degenerate``, ``DegenerateFit`` is raised.  Residuals at
    roundoff level make the exponent ``inf`` (faster than any power).
    """
    m = get_map(map_id)
    if eq_src != m.source:
        raise ValueError(f"map {map_id!r} starts from {m.source!r}, not {eq_src!r}")
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 4 or any(b >= a for a, b in zip(eps_list, eps_list[1:])) or eps_list[-1] <= 0:
        raise ValueError("eps_list must hold at least 4 strictly decreasing positive values")
    if any(m.lattice) and m.source != "rbm":
        bad = [e for e in eps_list if abs(1 / e - round(1 / e)) > 1e-9]
        if bad:
            raise ValueError(f"lattice source needs eps = 1/integer, got {bad}")
    coeff = m.coeff
    res, tgt, ratio = [], [], []
    degenerate = False
    for e in eps_list:
        pt = probe_point(map_id, e, target, prob)
        r = source_residual(map_id, F_smooth, e, pt, prob)
        g = target_residual(map_id, F_smooth, e, pt, prob)
        scale = abs(float(F_smooth(*map_point(map_id, e, *pt, prob)))) ** 2
        if abs(g) <= ROUNDOFF * max(scale, 1.0):
            degenerate = True
        res.append(r)
        tgt.append(g)
        ratio.append(r / (coeff * e ** m.order * g) if g != 0 else math.nan)
    if degenerate and not allow_degenerate:
        raise DegenerateFit(f"target residual vanishes at the probe for map {map_id!r}")
    floor = ROUNDOFF * max(1.0, abs(float(F_smooth(*target))) ** 2)
    keep = [i for i, r in enumerate(res) if abs(r) > floor]
    if len(keep) < 2:
        exponent = math.inf
    else:
        x = np.log([eps_list[i] for i in keep])
        y = np.log([abs(res[i]) for i in keep])
        exponent = float(np.polyfit(x, y, 1)[0])
    if degenerate:
        ratio = [math.nan] * len(ratio)
    return RateReport(map_id, m.source, m.target, eps_list, res, tgt, ratio, exponent, m.order,
                      coeff, degenerate)


def gaussian_bump(T, X, A):
    """exp(-(T^2 + X^2 + A^2)/2) + 2; accepts jets."""
    from .jets import exp
    return exp(-(T * T + X * X + A * A) * 0.5) + 2.0


# ----------------------------------------------------------------------------
# HBDE reindexing
# ----------------------------------------------------------------------------

def hbde_field(F: GridField) -> GridField:
    """Reindex a Parallel field onto (t, x, r) with r = t - x - m and F_n at m = 2n - 1.

    Entries of the wrong parity (even m) are zero and flagged invalid.
    """
    t = F.axes[0].values.astype(int)
    x = F.axes[1].values.astype(int)
    n = F.axes[2].values.astype(int)
    m_vals = 2 * n - 1
    r_min = int(t.min() - x.max() - m_vals.max())
    r_max = int(t.max() - x.min() - m_vals.min())
    r = np.arange(r_min, r_max + 1)
    vals = np.zeros((len(t), len(x), len(r)))
    valid = np.zeros(vals.shape, dtype=bool)
    for i, ti in enumerate(t):
        for j, xj in enumerate(x):
            for k, nk in enumerate(n):
                rr = ti - xj - (2 * nk - 1) - r_min
                vals[i, j, rr] = F.values[i, j, k]
                valid[i, j, rr] = F.valid[i, j, k]
    axes = (Axis.from_values(t.astype(float), False), Axis.from_values(x.astype(float), False),
            Axis.from_values(r.astype(float), False))
    return GridField(vals, axes, valid=valid, meta={"relabel": "r = t - x - (2n - 1)"})


def hbde_equivalence(F: GridField, prob: float) -> dict:
    """Max |Parallel residual at (t,a,n) - HBDE residual at (t, a, t - a - 2n + 2)|."""
    if any(ax.continuous for ax in F.axes):
        raise ValueError("HBDE reindexing needs an integer lattice")
    if min(F.shape) < 3:
        raise ValueError("box too small for both stencils (need 3 points per axis)")
    par = residual_field(equation("parallel", prob), F, use_partials=False)
    hbde = equation("hbde", prob)
    G = hbde_field(F)
    sampler = GridSampler(G, use_partials=False)
    rp = par.field.values
    dev = 0.0
    count = 0
    for idx in np.ndindex(rp.shape):
        if not par.field.valid[idx]:
            continue
        t, a, n = par.field.coords(idx)
        try:
            hidx = G.index_of(t, a, t - a - 2 * n + 2)
        except IndexError:
            continue
        # the centre itself has the wrong parity, so only the stencil is read
        sampler.touched_invalid = False
        try:
            h = sum(tm.coeff * bilinear_term(sampler, sampler, tm.orders, tm.shift, hidx, hbde.pair_offset)
                    for tm in hbde.terms)
        except MarginError:
            continue
        if sampler.touched_invalid:
            continue
        dev = max(dev, abs(rp[idx] - h))
        count += 1
    if count == 0:
        raise ValueError("no interior points shared by both stencils")
    return {"max_deviation": float(dev), "points": count}
