"""Hirota bilinear operators and residuals of the bilinear equations.

A bilinear equation is a list of terms ``coeff * e^{<shift, D>} D^orders``
applied to the pair ``(F(x), F(x + pair_offset))``.  A term evaluates to

    sum_j prod_i (-1)^{k_i - j_i} C(k_i, j_i) f^{(j)}(x + s) g^{(k - j)}(x - s)

with ``f = F`` and ``g = F(. + pair_offset)``.  Fields are accessed through a
sampler exposing ``deriv(orders, point)``; grid samplers difference (or use
stored analytic partials), function samplers differentiate exactly with jets.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable

import numpy as np

from .grid import GridField
from .jets import Jet, variables


class MarginError(IndexError):
    pass


@dataclass(frozen=True)
class Term:
    coeff: float
    shift: tuple[int, int, int] = (0, 0, 0)
    orders: tuple[int, int, int] = (0, 0, 0)


@dataclass(frozen=True)
class BilinearEquation:
    name: str
    terms: tuple[Term, ...]
    pair_offset: tuple[int, int, int] = (0, 0, 0)
    axes: tuple[str, str, str] = ("t", "a", "n")

    @property
    def max_order(self) -> tuple[int, int, int]:
        return tuple(max(tm.orders[i] for tm in self.terms) for i in range(3))

    @property
    def max_shift(self) -> tuple[int, int, int]:
        return tuple(max(abs(tm.shift[i]) for tm in self.terms) for i in range(3))


def equation(name: str, prob: float | None = None) -> BilinearEquation:
    """Registry of bilinear equations.

    ``rbm``, ``tasep``, ``push_tasep``, ``parallel``, ``blocking``, ``pushing``
    act on (t, a, n); ``kp`` on (T, X, A); ``hbde`` on (t, x, r) with
    z = (1, -p, -(1-p)); ``toda2d`` on (T, X, r).
    """
    if name == "rbm":
        return BilinearEquation(name, (Term(1.0, orders=(1, 0, 0)), Term(-0.5, orders=(0, 2, 0))), (0, 0, -1))
    if name == "tasep":
        return BilinearEquation(name, (Term(1.0, orders=(1, 0, 0)), Term(-1.0, (0, -1, 0)), Term(1.0)), (0, 0, -1))
    if name == "push_tasep":
        return BilinearEquation(name, (Term(1.0, orders=(1, 0, 0)), Term(-1.0, (0, 1, 0)), Term(1.0)), (0, 1, -1))
    if name in ("parallel", "blocking", "hbde"):
        if prob is None or not 0 <= prob <= 1:
            raise ValueError(f"{name} needs p in [0, 1]")
        if name == "hbde":
            return BilinearEquation(name, (Term(1.0, (1, 0, 0)), Term(-prob, (0, 1, 0)), Term(-(1 - prob), (0, 0, 1))),
                                    (0, 0, 0), ("t", "x", "r"))
        pair = (0, 0, -1) if name == "parallel" else (1, 0, -1)
        return BilinearEquation(name, (Term(1.0, (1, 0, 0)), Term(-prob, (0, -1, 0)), Term(-(1 - prob))), pair)
    if name == "pushing":
        if prob is None or not 0 <= prob <= 1:
            raise ValueError("pushing needs q in [0, 1]")
        return BilinearEquation(name, (Term(1.0, (1, 0, 0)), Term(-prob, (0, 1, 0)), Term(-(1 - prob))), (1, 1, -1))
    if name == "kp":
        return BilinearEquation(name, (Term(1.0, orders=(1, 0, 1)), Term(0.25, orders=(0, 2, 0)),
                                       Term(1 / 12, orders=(0, 0, 4))), (0, 0, 0), ("T", "X", "A"))
    if name == "toda2d":
        return BilinearEquation(name, (Term(0.5, orders=(2, 0, 0)), Term(-0.5, orders=(0, 2, 0)),
                                       Term(-4.0, (0, 0, 1)), Term(4.0)), (0, 0, 0), ("T", "X", "r"))
    raise ValueError(f"unknown equation {name!r}")


EQUATIONS = ("rbm", "tasep", "push_tasep", "parallel", "blocking", "pushing", "kp", "hbde", "toda2d")


# ----------------------------------------------------------------------------
# finite differences
# ----------------------------------------------------------------------------

def central_weights(order: int, accuracy: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Offsets and weights of the central stencil for the ``order``-th derivative."""
    if order == 0:
        return np.array([0]), np.array([1.0])
    half = (order + 1) // 2 + accuracy // 2 - 1
    offs = np.arange(-half, half + 1)
    A = np.vander(offs.astype(float), increasing=True).T
    b = np.zeros(len(offs))
    b[order] = math.factorial(order)
    return offs, np.linalg.solve(A, b)


class GridSampler:
    """Derivatives of a GridField at integer indices.

    Continuous axes are differenced with central stencils of the chosen
    accuracy; stored analytic partials are used when ``use_partials`` is set
    and the requested order matches one that is stored.
    """

    def __init__(self, F: GridField, accuracy: int = 2, use_partials: bool = True):
        if accuracy not in (2, 4):
            raise ValueError("accuracy must be 2 or 4")
        self.F = F
        self.accuracy = accuracy
        self.use_partials = use_partials and bool(F.partials)
        self.touched_invalid = False

    def _value(self, idx):
        if not self.F.inside(idx):
            raise MarginError(f"index {tuple(idx)} outside grid")
        if not self.F.valid[tuple(idx)]:
            self.touched_invalid = True
        return self.F.values[tuple(idx)]

    def _stored(self, orders, idx):
        key = _STORED.get(tuple(orders))
        if key and key in self.F.partials:
            if not self.F.inside(idx):
                raise MarginError(f"index {tuple(idx)} outside grid")
            if not self.F.valid[tuple(idx)]:
                self.touched_invalid = True
            return self.F.partials[key][tuple(idx)]
        return None

    def deriv(self, orders, idx):
        idx = tuple(int(i) for i in idx)
        if any(orders):
            for ax, k in zip(self.F.axes, orders):
                if k and not ax.continuous:
                    raise ValueError("Hirota derivative along a discrete axis")
            if self.use_partials:
                v = self._stored(orders, idx)
                if v is not None:
                    return v
        stencils = [central_weights(k, self.accuracy) for k in orders]
        # stencil weights of a derivative sum to zero, so differencing against
        # the centre value is exact on constants
        centre = self._value(idx) if any(orders) else 0.0
        total = 0.0
        for combo in product(*(range(len(s[0])) for s in stencils)):
            w = 1.0
            pt = list(idx)
            for axis, c in enumerate(combo):
                offs, wts = stencils[axis]
                w *= wts[c]
                pt[axis] += int(offs[c])
            if w != 0.0:
                total += w * (self._value(pt) - centre)
        h = np.prod([ax.spacing ** k for ax, k in zip(self.F.axes, orders)])
        return total / h


class FunctionSampler:
    """Exact derivatives of a closed-form field via Taylor jets.

    ``func(x0, x1, x2)`` must accept jets (using ``jets.exp``/``jets.log`` or
    arithmetic); points are real coordinates and shifts are scaled by ``steps``.
    """

    def __init__(self, func: Callable, order: int = 4):
        self.func = func
        self.order = order
        self._cache: dict = {}

    def jet(self, point):
        key = tuple(float(v) for v in point)
        if key not in self._cache:
            self._cache[key] = self.func(*variables(key, self.order))
        return self._cache[key]

    def deriv(self, orders, point):
        val = self.jet(point)
        if isinstance(val, Jet):
            return val.deriv(*orders)
        return float(val) if not any(orders) else 0.0


# ----------------------------------------------------------------------------
# Hirota operators
# ----------------------------------------------------------------------------

def _add(p, s, sign=1):
    return tuple(pi + sign * si for pi, si in zip(p, s))


def bilinear_term(f, g, orders, shift, point, g_offset=(0, 0, 0), spacing=(1, 1, 1)) -> float:
    """One Hirota term on samplers ``f``, ``g``: shifts are in index units."""
    s = tuple(si * h for si, h in zip(shift, spacing))
    pf = _add(point, s)
    pg = _add(_add(point, s, -1), tuple(o * h for o, h in zip(g_offset, spacing)))
    # j is paired with its complement so that swapping f and g flips the sign
    # (odd order) or leaves the sum unchanged (even order) bit for bit
    sign = -1 if sum(orders) % 2 else 1
    total = 0.0
    for j in product(*(range(k + 1) for k in orders)):
        rest = tuple(k_i - j_i for k_i, j_i in zip(orders, j))
        if j > rest:
            continue
        c = 1.0
        for k_i, j_i in zip(orders, j):
            c *= (-1) ** (k_i - j_i) * math.comb(k_i, j_i)
        if j == rest:
            total += c * f.deriv(j, pf) * g.deriv(rest, pg)
        else:
            total += c * (f.deriv(j, pf) * g.deriv(rest, pg) + sign * (f.deriv(rest, pf) * g.deriv(j, pg)))
    return total


def hirota_derivative(f: GridField, g: GridField, axis: str, order: int, point, accuracy: int = 2) -> float:
    """D_axis^order f.g at an index, by central differences (or stored partials)."""
    ax = {"t": 0, "a": 1}.get(axis)
    if ax is None:
        raise ValueError("Hirota derivatives act on the t or a axis")
    if not f.axes[ax].continuous or not g.axes[ax].continuous:
        raise ValueError("Hirota derivative along a discrete axis")
    need = (order + 1) // 2 + accuracy // 2 - 1 if order else 0
    i = point[ax]
    if i - need < 0 or i + need >= f.shape[ax]:
        raise MarginError(f"point too close to the {axis} boundary for order {order}")
    orders = [0, 0, 0]
    orders[ax] = order
    return bilinear_term(GridSampler(f, accuracy), GridSampler(g, accuracy), tuple(orders), (0, 0, 0), tuple(point))


def shift_bilinear(f: GridField, g: GridField, shift, point) -> float:
    """f(point + shift) g(point - shift) on index coordinates."""
    pf = _add(point, shift)
    pg = _add(point, shift, -1)
    if not (f.inside(pf) and g.inside(pg)):
        raise MarginError(f"shift {tuple(shift)} leaves the grid at {tuple(point)}")
    return float(f.values[pf] * g.values[pg])


def residual_at(eq: BilinearEquation, sampler, point, spacing=(1, 1, 1)) -> tuple[float, float]:
    """(raw, normalized) residual of ``eq`` at ``point``."""
    raw = sum(tm.coeff * bilinear_term(sampler, sampler, tm.orders, tm.shift, point, eq.pair_offset, spacing)
              for tm in eq.terms)
    pg = _add(point, tuple(o * h for o, h in zip(eq.pair_offset, spacing)))
    norm = sampler.deriv((0, 0, 0), point) * sampler.deriv((0, 0, 0), pg)
    return raw, (raw / norm if norm != 0 else math.nan)


@dataclass
class ResidualField:
    equation: str
    field: GridField  # raw residual
    normalized: GridField
    indices: list = field(default_factory=list)

    def max_abs(self, normalized: bool = True) -> float:
        vals = (self.normalized if normalized else self.field).values[self.normalized.valid]
        return float(np.max(np.abs(vals))) if vals.size else 0.0

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["t", "a", "n", "residual", "normalized"])
        for (t, a, n, r), (_, _, _, z) in zip(self.field.rows(), self.normalized.rows()):
            w.writerow([repr(float(t)), repr(float(a)), int(n), repr(float(r)), repr(float(z))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def to_json(self) -> dict:
        return {"equation": self.equation, "max_abs": self.max_abs(False),
                "max_abs_normalized": self.max_abs(True), "residual": self.field.to_json(),
                "normalized": self.normalized.to_json()}


_STORED = {(1, 0, 0): "t", (0, 1, 0): "a", (0, 2, 0): "aa"}


def _supplied(orders, stored) -> bool:
    subs = [j for j in product(*(range(k + 1) for k in orders)) if any(j)]
    return all(_STORED.get(j) in stored for j in subs)


def _margins(eq: BilinearEquation, accuracy: int, stored=()):
    lo, hi = [], []
    for i in range(3):
        need = 0
        for tm in eq.terms:
            k = 0 if _supplied(tm.orders, stored) else tm.orders[i]
            st = (k + 1) // 2 + accuracy // 2 - 1 if k else 0
            need = max(need, abs(tm.shift[i]) + st)
        lo.append(need + max(0, -eq.pair_offset[i]))
        hi.append(need + max(0, eq.pair_offset[i]))
    return lo, hi


def residual_field(eq: BilinearEquation, F: GridField, region=None, accuracy: int = 2,
                   use_partials: bool = True) -> ResidualField:
    """Residual of ``eq`` at every index of ``region`` (default: all admissible).

    ``region`` is a triple of (start, stop) index ranges.  Points whose stencil
    reads an invalid entry of ``F`` are marked invalid.
    """
    stored = tuple(F.partials) if (use_partials and F.partials) else ()
    lo, hi = _margins(eq, accuracy, stored)
    if region is None:
        region = tuple((lo[i], F.shape[i] - hi[i]) for i in range(3))
    for i, (s, e) in enumerate(region):
        if s < lo[i] or e > F.shape[i] - hi[i] or s >= e:
            raise MarginError(f"region on axis {i} leaves no room for the stencil")
    sampler = GridSampler(F, accuracy, use_partials)
    shape = tuple(e - s for s, e in region)
    raw = np.zeros(shape)
    nrm = np.zeros(shape)
    valid = np.ones(shape, dtype=bool)
    for rel in np.ndindex(shape):
        idx = tuple(s + r for (s, _), r in zip(region, rel))
        sampler.touched_invalid = False
        r, z = residual_at(eq, sampler, idx)
        if sampler.touched_invalid:
            valid[rel] = False
            continue
        if not np.isfinite(r):
            raise FloatingPointError(f"non-finite residual at index {idx}")
        raw[rel] = r
        if np.isfinite(z):
            nrm[rel] = z
        else:
            valid[rel] = False
    axes = tuple(type(ax)(ax.origin + ax.spacing * s, ax.spacing, e - s, ax.continuous)
                 for ax, (s, e) in zip(F.axes, region))
    return ResidualField(eq.name, GridField(raw, axes, valid=valid.copy()),
                         GridField(nrm, axes, valid=valid.copy()))


def kp_residual(F: GridField, accuracy: int = 2) -> ResidualField:
    """Pointwise KP bilinear residual on a field over (T, X, A)."""
    if not all(ax.continuous for ax in F.axes):
        raise ValueError("KP residual needs three continuous axes")
    if F.shape[2] < 7:
        raise MarginError("need at least 3 nodes of margin on A")
    eq = equation("kp")
    return residual_field(eq, F, accuracy=accuracy, use_partials=False)


def residual_of_function(eq: BilinearEquation, func: Callable, point, spacing=(1.0, 1.0, 1.0),
                         order: int | None = None) -> tuple[float, float]:
    """Residual of ``eq`` for a closed-form field at a real point (exact derivatives).

    Discrete shifts move by ``spacing`` along each axis.
    """
    order = order or max(4, sum(eq.max_order))
    return residual_at(eq, FunctionSampler(func, order), tuple(float(p) for p in point), spacing)
