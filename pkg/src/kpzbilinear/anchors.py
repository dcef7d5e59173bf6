"""Closed-form one-particle laws used as anchors."""
from __future__ import annotations

import math

import numpy as np
from scipy.stats import binom, norm, poisson


def survival_one_particle(model: str, y1: float, t, a, prob: float | None = None):
    """P(Y_1(t) > a) for a single particle started at y1."""
    a = np.asarray(a, dtype=float)
    if model == "rbm":
        return norm.sf((a - y1) / math.sqrt(t))
    if model == "tasep":
        return poisson.sf(np.floor(a - y1), t)
    if model == "push_tasep":
        return poisson.cdf(np.ceil(y1 - a) - 1, t)
    if model in ("parallel", "blocking"):
        return binom.sf(np.floor(a - y1), int(t), prob)
    if model == "pushing":
        return binom.cdf(np.ceil(y1 - a) - 1, int(t), prob)
    raise ValueError(f"unknown model {model!r}")


def drifted_max_cdf(z, t: float, mu: float):
    """P(sup_{s<=t} (B_s + mu s) <= z) for z >= 0."""
    z = np.asarray(z, dtype=float)
    st = math.sqrt(t)
    return norm.cdf((z - mu * t) / st) - np.exp(2 * mu * z) * norm.cdf((-z - mu * t) / st)


def wall_level_one(t: float, a, mu: float):
    """F_{t,a,1} for packed data y = 0 below the wall b(s) = mu s.

    Reversing time in the reflection map gives Y_1(t) = mu t - M_t with M_t the
    running maximum of a Brownian motion with drift +mu, so F = P(M_t < mu t - a).
    """
    a = np.asarray(a, dtype=float)
    z = mu * t - a
    return np.where(z > 0, drifted_max_cdf(np.maximum(z, 0.0), t, mu), 0.0)
