"""Zero-curvature checks at the level of scalar identities.

``k_field`` evaluates the curvature scalars K directly from F; a solution of
the bilinear equation makes K equal to a model constant (0 for RBM, -1 for
TASEP, 1 - p for Parallel TASEP).  ``zc_equivalence_check`` assembles the
commutator [M, Mbar] with a small algebra of difference/differential operators
whose coefficients carry first derivatives, and compares the surviving
coefficient with prefactor * (shifted K - K).  That comparison is an algebraic
identity, valid for any non-vanishing field with consistent partials.

Fields follow the boundary convention F_{t,a,m} = 1 for m <= 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridField

ZC_EQUATIONS = ("rbm", "tasep", "parallel")
MARGIN = 3


def expected_constant(eq: str, prob: float | None = None) -> float:
    if eq == "rbm":
        return 0.0
    if eq == "tasep":
        return -1.0
    if eq == "parallel":
        if prob is None:
            raise ValueError("parallel needs p")
        return 1.0 - prob
    raise ValueError(f"no zero-curvature form for {eq!r}")


class _Padded:
    """F and its stored partials, padded so shifted views stay in bounds.

    Entries outside the box are NaN except rows n <= 0, which are 1 (partials 0).
    Invalid entries of the field become NaN.
    """

    def __init__(self, F: GridField):
        self.shape = F.shape
        n_vals = F.axes[2].values
        pad = [(MARGIN, MARGIN)] * 3
        self.arrays = {}
        parts = {"v": F.values}
        for key in ("t", "a", "aa"):
            if F.partials is not None and key in F.partials:
                parts[key] = np.asarray(F.partials[key], dtype=float)
        n_pad = np.concatenate([n_vals[0] - np.arange(MARGIN, 0, -1) * F.axes[2].spacing, n_vals,
                                n_vals[-1] + np.arange(1, MARGIN + 1) * F.axes[2].spacing])
        boundary = n_pad <= 0
        for key, arr in parts.items():
            arr = np.where(F.valid, arr, np.nan)
            out = np.pad(arr, pad, constant_values=np.nan)
            out[:, :, boundary] = 1.0 if key == "v" else 0.0
            # along t and a the boundary rows extend as well
            self.arrays[key] = out

    def has(self, key):
        return key in self.arrays

    def get(self, key, shift=(0, 0, 0)):
        arr = self.arrays.get(key)
        if arr is None:
            return np.full(self.shape, np.nan)
        sl = tuple(slice(MARGIN + s, MARGIN + s + n) for s, n in zip(shift, self.shape))
        return arr[sl]


# ----------------------------------------------------------------------------
# derived quantities and K-fields
# ----------------------------------------------------------------------------

def _fd(F: GridField, P: _Padded, axis: int, order: int, shift=(0, 0, 0)):
    """Central difference of F along ``axis`` at the shifted point."""
    h = F.axes[axis].spacing
    e = [0, 0, 0]
    e[axis] = 1
    plus = tuple(s + d for s, d in zip(shift, e))
    minus = tuple(s - d for s, d in zip(shift, e))
    if order == 1:
        return (P.get("v", plus) - P.get("v", minus)) / (2 * h)
    return (P.get("v", plus) - 2 * P.get("v", shift) + P.get("v", minus)) / (h * h)


def _partial(F, P, key, shift=(0, 0, 0)):
    """Stored partial if available, else a central difference."""
    if P.has(key):
        return P.get(key, shift)
    axis, order = {"t": (0, 1), "a": (1, 1), "aa": (1, 2)}[key]
    if not F.axes[axis].continuous:
        raise ValueError(f"axis {key[0]} is discrete; no derivative available")
    return _fd(F, P, axis, order, shift)


def derived_quantities(F: GridField) -> dict:
    """a_n, u_n = d_a log F_n, its symmetric n-difference, and the ratios r.

    Lattice-a fields get ``r_a`` = F_{a-1,n+1}/F_{a,n}; fields with discrete t
    also get ``r_t`` = F_{t+1,a-1,n+1}/F_{t,a,n}.  Undefined entries are NaN.
    """
    P = _Padded(F)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = P.get("v")
        out = {"a_n": P.get("v", (0, 0, 1)) * P.get("v", (0, 0, -1)) / f ** 2}
        if F.axes[1].continuous:
            u = {d: _partial(F, P, "a", (0, 0, d)) / P.get("v", (0, 0, d)) for d in (-1, 0, 1)}
            out["u_n"] = u[0]
            out["grad_u"] = (u[1] - u[-1]) / 2
        else:
            out["r_a"] = P.get("v", (0, -1, 1)) / f
        if not F.axes[0].continuous:
            out["r_t"] = P.get("v", (1, -1, 1)) / f
    for k, v in out.items():
        out[k] = np.where(np.isfinite(v), v, np.nan)
    return out


@dataclass
class KField:
    equation: str
    values: np.ndarray
    expected: float
    shift: tuple
    field: GridField

    @property
    def defined(self) -> np.ndarray:
        return np.isfinite(self.values)

    def deviation(self) -> np.ndarray:
        return np.abs(self.values - self.expected)

    def shift_difference(self) -> np.ndarray:
        sl = tuple(slice(max(0, -s), n - max(0, s)) for s, n in zip(self.shift, self.values.shape))
        sh = tuple(slice(max(0, s), n - max(0, -s)) for s, n in zip(self.shift, self.values.shape))
        return np.abs(self.values[sh] - self.values[sl])

    def summary(self, tolerance: float | None = None) -> dict:
        dev = self.deviation()
        if not np.any(self.defined):
            raise ValueError("K is undefined everywhere on the box")
        idx = np.unravel_index(np.nanargmax(dev), dev.shape)
        sd = self.shift_difference()
        rep = {"equation": self.equation, "expected": self.expected, "max_dev": float(dev[idx]),
               "argmax": [float(c) for c in self.field.coords(idx)],
               "max_shift_difference": float(np.nanmax(sd)) if np.any(np.isfinite(sd)) else 0.0,
               "defined_points": int(self.defined.sum())}
        if tolerance is not None:
            rep["tolerance"] = tolerance
            rep["pass"] = bool(rep["max_dev"] <= tolerance)
        return rep


def k_field(eq: str, F: GridField, prob: float | None = None, floor: float = 0.0) -> KField:
    """Curvature scalar K on the box; NaN where F_n F_{n-1} <= floor or a stencil leaves the box."""
    expected = expected_constant(eq, prob)
    P = _Padded(F)
    f, g = P.get("v"), P.get("v", (0, 0, -1))
    with np.errstate(divide="ignore", invalid="ignore"):
        if eq == "rbm":
            ft, gt = _partial(F, P, "t"), _partial(F, P, "t", (0, 0, -1))
            fa, ga = _partial(F, P, "a"), _partial(F, P, "a", (0, 0, -1))
            faa, gaa = _partial(F, P, "aa"), _partial(F, P, "aa", (0, 0, -1))
            num = ft * g - f * gt - 0.5 * (faa * g - 2 * fa * ga + f * gaa)
            shift = (0, 0, 1)
        elif eq == "tasep":
            ft, gt = _partial(F, P, "t"), _partial(F, P, "t", (0, 0, -1))
            num = ft * g - f * gt - P.get("v", (0, -1, 0)) * P.get("v", (0, 1, -1))
            shift = (0, -1, 1)
        else:
            num = (P.get("v", (1, 0, 0)) * P.get("v", (-1, 0, -1))
                   - prob * P.get("v", (0, -1, 0)) * P.get("v", (0, 1, -1)))
            shift = (1, -1, 1)
        den = f * g
        K = np.where(np.abs(den) > floor, num / den, np.nan)
    K = np.where(np.isfinite(K), K, np.nan)
    return KField(eq, K, expected, shift, F)


# ----------------------------------------------------------------------------
# operator algebra
# ----------------------------------------------------------------------------

class Coef:
    """Grid function with first partials in t and a (NaN where unknown)."""

    __slots__ = ("v", "dt", "da")

    def __init__(self, v, dt=None, da=None):
        self.v = np.asarray(v, dtype=float)
        self.dt = np.zeros_like(self.v) if dt is None else np.asarray(dt, dtype=float)
        self.da = np.zeros_like(self.v) if da is None else np.asarray(da, dtype=float)

    def __mul__(self, o):
        if not isinstance(o, Coef):
            return Coef(self.v * o, self.dt * o, self.da * o)
        return Coef(self.v * o.v, self.dt * o.v + self.v * o.dt, self.da * o.v + self.v * o.da)

    __rmul__ = __mul__

    def __add__(self, o):
        return Coef(self.v + o.v, self.dt + o.dt, self.da + o.da)

    def __neg__(self):
        return Coef(-self.v, -self.dt, -self.da)

    def __sub__(self, o):
        return self + (-o)

    def reciprocal(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / self.v
            return Coef(inv, -self.dt * inv * inv, -self.da * inv * inv)

    def __truediv__(self, o):
        return self * o.reciprocal()

    def derivative(self, which: int):
        return self.dt if which == 0 else self.da


class _Shifter:
    """Builds shifted coefficients from a padded field."""

    def __init__(self, P: _Padded):
        self.P = P

    def F(self, shift):
        return Coef(self.P.get("v", shift), self.P.get("t", shift), self.P.get("a", shift))

    def log_a(self, shift):
        """u = d_a log F with d_a u from the stored second partial; d_t u unknown."""
        f, fa, faa = (self.P.get(k, shift) for k in ("v", "a", "aa"))
        with np.errstate(divide="ignore", invalid="ignore"):
            return Coef(fa / f, np.full(f.shape, np.nan), (faa * f - fa * fa) / (f * f))


class Operator:
    """Finite sum of c(x) e^{shift} d^{deriv}, deriv a (t, a) multi-index of order <= 1.

    Coefficients are callables ``shift -> Coef`` so that composition can
    evaluate them at shifted points.
    """

    def __init__(self, terms=None):
        self.terms = dict(terms or {})  # (shift, deriv) -> callable(shift) -> Coef

    def __add__(self, other):
        out = dict(self.terms)
        for k, c in other.terms.items():
            if k in out:
                a = out[k]
                out[k] = (lambda a, c: lambda s: a(s) + c(s))(a, c)
            else:
                out[k] = c
        return Operator(out)

    def scale(self, x: float):
        return Operator({k: (lambda c: lambda s: c(s) * x)(c) for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def compose(self, other: "Operator") -> dict:
        """Coefficient arrays (value only) of self o other, keyed by (shift, deriv)."""
        out = {}

        def add(key, arr):
            out[key] = out.get(key, 0.0) + arr

        for (s1, d1), c1 in self.terms.items():
            a = c1((0, 0, 0))
            for (s2, d2), c2 in other.terms.items():
                b = c2(s1)
                s = tuple(x + y for x, y in zip(s1, s2))
                add((s, tuple(x + y for x, y in zip(d1, d2))), a.v * b.v)
                for axis in (0, 1):
                    if d1[axis]:
                        rest = list(d1)
                        rest[axis] -= 1
                        add((s, tuple(x + y for x, y in zip(rest, d2))), a.v * b.derivative(axis))
        return out


def commutator(A: Operator, B: Operator) -> dict:
    ab, ba = A.compose(B), B.compose(A)
    keys = set(ab) | set(ba)
    return {k: np.asarray(ab.get(k, 0.0) - ba.get(k, 0.0), dtype=float) for k in keys}


def _const(x):
    return lambda s: x


def lax_operators(eq: str, F: GridField, prob: float | None = None, c: float | None = None):
    """(M, Mbar) of the zero-curvature formulation, coefficients built from F."""
    P = _Padded(F)
    B = _Shifter(P)
    shape = F.shape
    one = Coef(np.ones(shape))
    NONE = (0, 0)

    def add(s, d):
        return tuple(x + y for x, y in zip(s, d))

    if eq == "rbm":
        def a_n(s):
            return B.F(add(s, (0, 0, 1))) * B.F(add(s, (0, 0, -1))) / (B.F(s) * B.F(s))

        def grad_u(s):
            return (B.log_a(add(s, (0, 0, 1))) - B.log_a(add(s, (0, 0, -1)))) * 0.5

        def a_pair(s):
            return a_n(s) * a_n(add(s, (0, 0, -1)))

        M = Operator({((0, 0, 0), (1, 0)): _const(one),
                      ((0, 0, -1), NONE): lambda s: grad_u(s) * a_n(s),
                      ((0, 0, -2), NONE): lambda s: a_pair(s) * 0.5})
        Mbar = Operator({((0, 0, 0), (0, 1)): _const(one), ((0, 0, -1), NONE): a_n})
        return M, Mbar
    if eq == "tasep":
        def r(s):
            return B.F(add(s, (0, -1, 1))) / B.F(s)

        # with a minus sign on the shift term the commutator carries the
        # e^{-D_a} part with the wrong sign; the plus sign gives K = -1
        M = Operator({((0, 0, 0), (1, 0)): _const(one),
                      ((0, 1, -1), NONE): lambda s: r(s) / r(add(s, (0, 1, -1)))})
        Mbar = Operator({((0, -1, 0), NONE): _const(one),
                         ((0, 0, -1), NONE): lambda s: r(s) / r(add(s, (0, 0, -1)))})
        return M, Mbar
    if eq == "parallel":
        c = np.sqrt(prob) if c is None else c
        cbar = prob / c

        def r(s):
            return B.F(add(s, (1, -1, 1))) / B.F(s)

        M = Operator({((1, 0, 0), NONE): _const(one),
                      ((0, 1, -1), NONE): lambda s: (r(s) / r(add(s, (0, 1, -1)))) * (-c)})
        Mbar = Operator({((0, -1, 0), NONE): _const(one * (-cbar)),
                         ((-1, 0, -1), NONE): lambda s: r(s) / r(add(s, (-1, 0, -1)))})
        return M, Mbar
    raise ValueError(f"no zero-curvature form for {eq!r}")


def zc_prefactor(eq: str, F: GridField) -> np.ndarray:
    P = _Padded(F)
    v = P.get
    with np.errstate(divide="ignore", invalid="ignore"):
        if eq == "rbm":
            return v("v", (0, 0, 1)) * v("v", (0, 0, -1)) / v("v") ** 2
        if eq == "tasep":
            return (v("v", (0, -1, 1)) / v("v")) / (v("v", (0, -1, 0)) / v("v", (0, 0, -1)))
        return v("v", (1, -1, 1)) * v("v", (0, 0, -1)) / (v("v", (1, 0, 0)) * v("v", (0, -1, 0)))


def zc_equivalence_check(eq: str, F: GridField, prob: float | None = None, tolerance: float = 1e-10) -> dict:
    """Compare the assembled commutator with prefactor * (K_shifted - K).

    The e^{-d_n} coefficient must match; every other coefficient must vanish.
    Errors are relative to the scale of the terms entering the commutator.
    """
    M, Mbar = lax_operators(eq, F, prob)
    comm = commutator(M, Mbar)
    K = k_field(eq, F, prob)
    target_key = ((0, 0, -1), (0, 0))
    s = K.shift
    shifted = _Padded(GridField(np.nan_to_num(K.values, nan=0.0), F.axes, valid=np.isfinite(K.values)))
    Ks = shifted.get("v", s)
    # _Padded fills n <= 0 rows with 1; K there is the boundary constant instead
    n_vals = F.axes[2].values + s[2]
    Ks = np.where((n_vals <= 0)[None, None, :], K.expected, Ks)
    predicted = zc_prefactor(eq, F) * (Ks - K.values)
    entry = comm.get(target_key, np.zeros(F.shape))
    scale = np.ones(F.shape)
    parts = [np.abs(a) for a in M.compose(Mbar).values()]
    for a in parts:
        a = np.where(np.isfinite(a), a, 0.0)
        scale = np.maximum(scale, a)
    ok = np.isfinite(entry) & np.isfinite(predicted)
    if not np.any(ok):
        raise ValueError("no point of the box supports the commutator stencil")
    err = np.abs(entry - predicted)[ok] / scale[ok]
    other = 0.0
    for key, arr in comm.items():
        if key == target_key:
            continue
        good = np.isfinite(arr)
        if np.any(good):
            other = max(other, float(np.max(np.abs(arr[good]) / scale[good])))
    rep = {"equation": eq, "points": int(ok.sum()), "max_rel_error": float(err.max()),
           "max_other_coefficient": other, "tolerance": tolerance}
    rep["pass"] = bool(rep["max_rel_error"] <= tolerance and other <= tolerance)
    return rep


def random_field(eq: str, shape=(6, 7, 5), seed: int = 0, n_origin: int = 0) -> GridField:
    """Random positive field with independent random partials (not a solution)."""
    from .grid import Axis
    rng = np.random.default_rng(seed)
    vals = rng.uniform(0.5, 2.0, size=shape)
    cont_t = eq in ("rbm", "tasep")
    cont_a = eq == "rbm"
    axes = (Axis(0.0, 0.1 if cont_t else 1.0, shape[0], cont_t), Axis(0.0, 0.1 if cont_a else 1.0, shape[1], cont_a),
            Axis(float(n_origin), 1.0, shape[2], False))
    n_vals = axes[2].values
    vals[:, :, n_vals <= 0] = 1.0
    partials = None
    if cont_t:
        partials = {k: rng.normal(size=shape) for k in ("t", "a", "aa")}
        for k in partials:
            partials[k][:, :, n_vals <= 0] = 0.0
    return GridField(vals, axes, partials=partials, meta={"random_seed": seed})
