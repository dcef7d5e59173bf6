"""Special functions entering the kernels.

Hermite polynomials and the Gaussian basis used for reflected Brownian
motions, plus the lattice kernel factors of the five exclusion-type models.
The lattice factors are loop integrals around the origin; each is computed as
an exact Taylor (or Laurent) coefficient by convolving the coefficient lists
of its factors, so no contour quadrature is involved.

Model keys: ``tasep``, ``push_tasep``, ``parallel``, ``blocking``,
``pushing``.  ``prob`` is the jump probability ``p`` for ``parallel`` and
``blocking`` and the left-jump probability ``q`` for ``pushing``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

HERMITE_MAX = 60
PRECISE_DPS = 50
LATTICE_MODELS = ("tasep", "push_tasep", "parallel", "blocking", "pushing")
DISCRETE_TIME = ("parallel", "blocking", "pushing")


class TruncationError(RuntimeError):
    pass


# ----------------------------------------------------------------------------
# Hermite and Gaussian basis
# ----------------------------------------------------------------------------

def hermite(n: int, x):
    """Probabilists' Hermite polynomial He_n(x) by the three-term recurrence."""
    if n < 0:
        raise ValueError("negative Hermite order")
    if n > HERMITE_MAX:
        raise ValueError(f"Hermite order {n} beyond guard {HERMITE_MAX}")
    x = np.asarray(x, dtype=np.longdouble)
    h0 = np.ones_like(x)
    if n == 0:
        return h0.astype(float)
    h1 = x.copy()
    for k in range(1, n):
        h0, h1 = h1, x * h1 - k * h0
    return h1.astype(float)


def rbm_basis(kind: str, n: int, t: float, x):
    """Gaussian-Hermite basis: ``phi`` (decaying) or ``phibar`` (polynomial).

    phi_n(t,x)    = t^{-n/2} (2 pi t)^{-1/2} exp(-x^2/2t) He_n(x/sqrt t)
    phibar_n(t,x) = t^{n/2} He_n(x/sqrt t) / n!,  zero for n < 0
    """
    if t <= 0:
        raise ValueError("t must be positive")
    x = np.asarray(x, dtype=float)
    s = math.sqrt(t)
    if kind == "phi":
        if n < 0:
            raise ValueError("phi needs n >= 0")
        g = np.exp(-x * x / (2 * t)) / math.sqrt(2 * math.pi * t)
        return g * hermite(n, x / s) * t ** (-n / 2)
    if kind == "phibar":
        if n < 0:
            return np.zeros_like(x)
        return hermite(n, x / s) * (s ** n / math.factorial(n))
    raise ValueError(f"unknown kind {kind!r}")


# ----------------------------------------------------------------------------
# coefficient lists
# ----------------------------------------------------------------------------

def _binom_coeffs(alpha, beta, m: int, N: int, one=1.0):
    """First N+1 Taylor coefficients of (alpha + beta w)^m, m any integer."""
    out = [one * 0] * (N + 1)
    if N < 0:
        return out
    a_m = one * alpha ** m if m >= 0 else one / alpha ** (-m)
    ratio = one * beta / alpha
    c = a_m
    for j in range(N + 1):
        if j > 0:
            c = c * (m - j + 1) / j * ratio
        out[j] = c
        if m >= 0 and j >= m:
            break
    return out


def _exp_coeffs(t, N: int, one=1.0):
    out = [one * 0] * (N + 1)
    c = one
    for k in range(N + 1):
        if k > 0:
            c = c * t / k
        out[k] = c
    return out


def _expfrac_coeffs(t, N: int, one=1.0):
    """Coefficients of exp(-t w/(1-w)) via g' = h' g with h = -t sum_{k>=1} w^k."""
    g = [one * 0] * (N + 1)
    if N < 0:
        return g
    g[0] = one
    for k in range(1, N + 1):
        # k g_k = sum_{j=1}^k j h_j g_{k-j}, h_j = -t
        s = one * 0
        for j in range(1, k + 1):
            s = s + j * g[k - j]
        g[k] = -t * s / k
    return g


def _product_coeff(series, P: int, one=1.0):
    """[w^P] of a product of power series given as coefficient lists."""
    if P < 0:
        return one * 0
    acc = list(series[0][: P + 1]) + [one * 0] * max(0, P + 1 - len(series[0]))
    for s in series[1:]:
        s = list(s[: P + 1]) + [one * 0] * max(0, P + 1 - len(s))
        new = [one * 0] * (P + 1)
        for i, ai in enumerate(acc):
            if ai == 0:
                continue
            for j in range(P + 1 - i):
                if s[j] != 0:
                    new[i + j] = new[i + j] + ai * s[j]
        acc = new
    return acc[P]


def default_trunc(t: float) -> int:
    """Smallest k with t^k/k! < 1e-16 max(1, e^t)."""
    t = abs(float(t))
    bound = 1e-16 * max(1.0, math.exp(min(t, 700.0)))
    k, term = 0, 1.0
    while term >= bound:
        k += 1
        term *= t / k
    return max(k, 1)


def _exp_tail_bound(t: float, trunc: int) -> float:
    t = abs(float(t))
    term = t ** (trunc + 1) / math.factorial(trunc + 1) if trunc < 170 else 0.0
    return term * math.exp(min(t, 700.0))


# ----------------------------------------------------------------------------
# model integrands
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class GenFunSpec:
    """One lattice kernel factor: psi_{t,a,n}(arg) or phibar_{t,a,n}(arg)."""

    model: str
    kind: str  # "psi" or "phibar"
    t: float
    n: int
    a: int
    arg: int
    prob: float | None = None

    def __post_init__(self):
        if self.model not in LATTICE_MODELS:
            raise ValueError(f"unknown lattice model {self.model!r}")
        if self.kind not in ("psi", "phibar"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.model in DISCRETE_TIME:
            if self.prob is None or not 0.0 < self.prob < 1.0:
                raise ValueError("discrete-time models need prob in (0,1)")
            if int(self.t) != self.t or self.t < 0:
                raise ValueError("discrete-time models need integer t >= 0")


def _integrand(spec: GenFunSpec, one=1.0):
    """Return (prefactor, power, factor descriptors, laurent_t).

    The factor value equals prefactor * [w^power] prod(factors) * exp(laurent_t/w).
    """
    m, t, n = spec.model, spec.t, spec.n
    d = spec.a - spec.arg
    two = one * 2
    if spec.kind == "psi":
        power = n + d
        pre = two ** (-d)
        if m == "tasep":
            return pre * mpmath_exp(-t / 2, one), power, [("binom", 1, -1, n), ("exp", t)], None
        if m == "push_tasep":
            return pre * mpmath_exp(-2 * t, one), power, [("binom", 1, -1, n)], t
        p = spec.prob
        q = 1 - p
        if m == "parallel":
            pre = pre * (one * q) ** (n - 1) / (one * (q + p / 2)) ** int(t)
            return pre, power, [("binom", 1, -1, n), ("binom", q, p, int(t) - n + 1)], None
        if m == "blocking":
            pre = pre / (one * (q + p / 2)) ** int(t)
            return pre, power, [("binom", 1, -1, n), ("binom", q, p, int(t))], None
        # pushing: here prob is q and p = 1 - q; (p + q/w)^t = w^{-t} (q + p w)^t
        qq = p
        pp = 1 - qq
        pre = pre / (one * (pp + 2 * qq)) ** int(t)
        return pre, power + int(t), [("binom", 1, -1, n), ("binom", qq, pp, int(t))], None
    # phibar
    power = n - 1
    pre = two ** d
    e = d + n - 1
    if m == "tasep":
        return pre * mpmath_exp(-t / 2, one), power, [("binom", 1, -1, e), ("exp", t)], None
    if m == "push_tasep":
        # exp(t(2 - 1/(1-w))) = e^{t} exp(-t w/(1-w))
        return pre * mpmath_exp(t, one), power, [("binom", 1, -1, e), ("expfrac", t)], None
    p = spec.prob
    q = 1 - p
    if m == "parallel":
        pre = pre * (one * q) ** (1 - n) * (one * (q + p / 2)) ** int(t)
        return pre, power, [("binom", 1, -1, e), ("binom", 1, -p, -int(t) + n - 1)], None
    if m == "blocking":
        pre = pre * (one * (q + p / 2)) ** int(t)
        return pre, power, [("binom", 1, -1, e), ("binom", 1, -p, -int(t))], None
    # pushing: (p + q/(1-w))^{-t} = (1-w)^t (1 - p w)^{-t}
    qq = p
    pp = 1 - qq
    pre = pre * (one * (pp + 2 * qq)) ** int(t)
    return pre, power, [("binom", 1, -1, e + int(t)), ("binom", 1, -pp, -int(t))], None


def mpmath_exp(x, one):
    if isinstance(one, float):
        return math.exp(x)
    return mpmath.exp(x)


def _factor_coeffs(desc, N, trunc, one):
    kind = desc[0]
    if kind == "binom":
        _, alpha, beta, m = desc
        return _binom_coeffs(one * alpha, one * beta, m, N, one), 0.0
    t = desc[1]
    M = min(N, trunc)
    if kind == "exp":
        c = _exp_coeffs(one * t, M, one)
        tail = _exp_tail_bound(t, trunc) if N > trunc else 0.0
    else:
        c = _expfrac_coeffs(one * t, M, one)
        tail = 0.0 if N <= trunc else _exp_tail_bound(t, trunc)
    return c + [one * 0] * (N - M), tail


def series_coefficient(spec: GenFunSpec, power: int | None = None, trunc: int | None = None,
                       precise: bool = False, with_tail: bool = False, as_float: bool = True):
    """Exact Taylor/Laurent coefficient realising a lattice kernel factor.

    ``power`` overrides the model's power index (the prefactor is kept);
    negative powers of an analytic integrand give 0.  Entire factors are
    truncated at ``trunc`` terms (default: ``default_trunc(t)``) and a tail
    bound is reported when ``with_tail`` is set.  With ``precise`` the
    arithmetic runs at ``PRECISE_DPS`` digits; ``as_float=False`` then returns
    the mpmath number itself.
    """
    one = mpmath.mpf(1) if precise else 1.0
    if trunc is None:
        trunc = default_trunc(spec.t)
    ctx = mpmath.workdps(PRECISE_DPS) if precise else _Null()
    with ctx:
        pre, P, factors, laurent_t = _integrand(spec, one)
        if power is not None:
            shift = P - (spec.n + spec.a - spec.arg if spec.kind == "psi" else spec.n - 1)
            P = power + shift
        tail = 0.0
        if laurent_t is not None:
            # one polynomial factor (1-w)^n times exp(t/w): finite sum
            poly = _binom_coeffs(one, -one, spec.n, spec.n, one)
            val = one * 0
            lt = one * laurent_t
            k0 = max(0, -P)
            for k in range(k0, spec.n - P + 1):
                val = val + lt ** k / math.factorial(k) * poly[P + k] if k < 170 else val
            coeff = val
        elif P < 0:
            coeff = one * 0
        else:
            lists = []
            for f in factors:
                c, tb = _factor_coeffs(f, P, trunc, one)
                lists.append(c)
                tail = max(tail, tb)
            coeff = _product_coeff(lists, P, one)
        val = pre * coeff
        out = val if (precise and not as_float) else float(val)
    if with_tail:
        return out, tail * abs(float(pre))
    return out


class _Null:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def model_basis(model: str, kind: str, t, a: int, n: int, arg: int, prob: float | None = None,
                precise: bool = False, as_float: bool = True):
    """Lattice kernel factor psi_{t,a,n}(arg) or phibar_{t,a,n}(arg)."""
    if kind == "phibar" and n <= 0:
        return 0.0 if as_float or not precise else mpmath.mpf(0)
    spec = GenFunSpec(model, kind, float(t), int(n), int(a), int(arg), prob)
    return series_coefficient(spec, precise=precise, as_float=as_float)


@lru_cache(maxsize=4096)
def _basis_offset(model, kind, t, n, d, prob, precise):
    return model_basis(model, kind, t, d, n, 0, prob, precise, as_float=not precise)


def basis_by_offset(model: str, kind: str, t, n: int, offsets, prob=None, precise: bool = False) -> np.ndarray:
    """Vector of factors indexed by d = a - arg (they depend on a, arg only through d).

    With ``precise`` the result is an object array of mpmath numbers.
    """
    offsets = np.asarray(offsets, dtype=int)
    vals = [_basis_offset(model, kind, float(t), int(n), int(d), prob, precise) for d in offsets.ravel()]
    return np.array(vals, dtype=object if precise else float).reshape(offsets.shape)


def psi_support(model: str, t, n: int) -> tuple[float, float]:
    """Range of d = a - u where psi_{t,a,n}(u) can be nonzero (inclusive)."""
    t_int = int(t) if float(t).is_integer() else None
    if model in ("tasep",):
        return (-n, math.inf)
    if model == "blocking":
        return (-n, t_int)
    if model == "parallel":
        if t_int - n + 1 >= 0:
            return (-n, t_int + 1 - n)
        return (-n, math.inf)
    if model == "pushing":
        return (-n - t_int, 0)
    if model == "push_tasep":
        return (-math.inf, 0)
    raise ValueError(model)
