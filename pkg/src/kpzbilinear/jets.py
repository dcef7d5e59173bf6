"""Truncated multivariate Taylor jets.

A ``Jet`` stores the Taylor coefficients of a smooth function around a base
point, up to a fixed total order.  Arithmetic on jets is exact up to that
order, which gives exact partial derivatives of closed-form test fields
without finite differencing.
"""
from __future__ import annotations

import math
from itertools import product

import numpy as np


def _degree_mask(dim: int, order: int) -> np.ndarray:
    idx = np.indices((order + 1,) * dim).sum(axis=0)
    return idx <= order


class Jet:
    __slots__ = ("c", "order")
    __array_priority__ = 100

    def __init__(self, coeffs: np.ndarray, order: int):
        self.c = np.asarray(coeffs, dtype=float)
        self.order = order

    @classmethod
    def constant(cls, value: float, dim: int, order: int) -> "Jet":
        c = np.zeros((order + 1,) * dim)
        c[(0,) * dim] = value
        return cls(c, order)

    @classmethod
    def variable(cls, value: float, axis: int, dim: int, order: int) -> "Jet":
        j = cls.constant(value, dim, order)
        if order >= 1:
            idx = [0] * dim
            idx[axis] = 1
            j.c[tuple(idx)] = 1.0
        return j

    @property
    def dim(self) -> int:
        return self.c.ndim

    @property
    def value(self) -> float:
        return float(self.c[(0,) * self.dim])

    def deriv(self, *orders: int) -> float:
        """Partial derivative with the given multi-order at the base point."""
        if sum(orders) > self.order:
            raise ValueError("derivative order exceeds jet order")
        fact = math.prod(math.factorial(k) for k in orders)
        return float(self.c[tuple(orders)]) * fact

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(float(other), self.dim, self.order)

    def __add__(self, other):
        o = self._lift(other)
        return Jet(self.c + o.c, self.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.order)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * float(other), self.order)
        K = self.order
        out = np.zeros_like(self.c)
        nz = np.argwhere(self.c != 0)
        for idx in nz:
            deg = int(idx.sum())
            if deg > K:
                continue
            sl_src = tuple(slice(0, K + 1 - i) for i in idx)
            sl_dst = tuple(slice(i, K + 1) for i in idx)
            out[sl_dst] += self.c[tuple(idx)] * other.c[sl_src]
        out[~_degree_mask(self.dim, K)] = 0.0
        return Jet(out, K)

    __rmul__ = __mul__

    def _nilpotent(self):
        h = Jet(self.c.copy(), self.order)
        h.c[(0,) * self.dim] = 0.0
        return h

    def _series(self, coeffs) -> "Jet":
        # sum_k coeffs[k] h^k with h the non-constant part
        h = self._nilpotent()
        acc = Jet.constant(coeffs[0], self.dim, self.order)
        pw = Jet.constant(1.0, self.dim, self.order)
        for k in range(1, self.order + 1):
            pw = pw * h
            acc = acc + pw * coeffs[k]
        return acc

    def reciprocal(self) -> "Jet":
        c0 = self.value
        if c0 == 0.0:
            raise ZeroDivisionError("jet with zero constant term")
        return self._series([(-1.0) ** k / c0 ** (k + 1) for k in range(self.order + 1)])

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / float(other), self.order)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * float(other)

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("integer powers only")
        if k < 0:
            return (self ** (-k)).reciprocal()
        out = Jet.constant(1.0, self.dim, self.order)
        for _ in range(k):
            out = out * self
        return out

    def exp(self) -> "Jet":
        e0 = math.exp(self.value)
        return self._series([e0 / math.factorial(k) for k in range(self.order + 1)])

    def log(self) -> "Jet":
        c0 = self.value
        coeffs = [math.log(c0)] + [(-1.0) ** (k + 1) / (k * c0 ** k) for k in range(1, self.order + 1)]
        return self._series(coeffs)

    def shift_derivative(self, axis: int) -> "Jet":
        """Jet of the partial derivative along ``axis`` (order drops by one)."""
        K = self.order
        out = np.zeros_like(self.c)
        for idx in product(range(K + 1), repeat=self.dim):
            if sum(idx) > K or idx[axis] == 0:
                continue
            tgt = list(idx)
            tgt[axis] -= 1
            out[tuple(tgt)] += idx[axis] * self.c[idx]
        return Jet(out, max(K - 1, 0))

    def __repr__(self) -> str:
        return f"Jet(value={self.value:.6g}, dim={self.dim}, order={self.order})"


def exp(x):
    return x.exp() if isinstance(x, Jet) else math.exp(x)


def log(x):
    return x.log() if isinstance(x, Jet) else math.log(x)


def variables(point, order: int):
    """Independent jet variables anchored at ``point``."""
    d = len(point)
    return [Jet.variable(float(v), i, d, order) for i, v in enumerate(point)]
