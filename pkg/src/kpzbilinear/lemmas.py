"""Randomized checks of the elementary Fredholm determinant identities.

Instances are weighted finite-dimensional operators: a kernel K(x_i, x_j) on
nodes with positive weights acts as the matrix K(x_i, x_j) w_j, and pairings
use <f, g> = sum_i w_i f_i g_i.  Every check returns the absolute error of one
identity, evaluated through ``det_fredholm`` and ``resolvent_inner``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fredholm import KernelAssembly, det_fredholm, resolvent_inner

ANALYTIC_TOL = 1e-10
DIFFERENCED_TOL = 1e-6


def weighted_operator(kernel: np.ndarray, weights: np.ndarray, psi=None, phi=None) -> KernelAssembly:
    n = len(weights)
    zero = np.zeros(n)
    return KernelAssembly("random", 0.0, 0.0, 0, np.arange(n, dtype=float), weights,
                          kernel * weights[None, :],
                          zero if psi is None else psi, zero if phi is None else phi)


def _kernel(rng, n, scale):
    return rng.normal(size=(n, n)) * scale / n


def random_instance(rng: np.random.Generator, size: int | None = None, scale: float = 0.9):
    """(weights, kernel, psi, phi) with I - K and I - K - psi x phi invertible."""
    n = int(size or rng.integers(3, 13))
    w = rng.uniform(0.2, 1.5, n)
    while True:
        K = _kernel(rng, n, scale)
        psi, phi = rng.normal(size=n) * 0.6, rng.normal(size=n) * 0.6
        B = weighted_operator(K, w)
        A = weighted_operator(K + np.outer(psi, phi), w)
        fb, fa = det_fredholm(B).value, det_fredholm(A).value
        if abs(fb) > 0.05 and abs(fa) > 0.05:
            return w, K, psi, phi


def _det(kernel, w) -> float:
    return det_fredholm(weighted_operator(kernel, w)).value


def cyclicity(rng: np.random.Generator) -> float:
    """|det(I - AB) - det(I - BA)| for A: H_2 -> H_1, B: H_1 -> H_2 of different sizes."""
    m, k = int(rng.integers(2, 10)), int(rng.integers(2, 10))
    w1, w2 = rng.uniform(0.2, 1.5, m), rng.uniform(0.2, 1.5, k)
    A = rng.normal(size=(m, k)) / np.sqrt(m * k)
    B = rng.normal(size=(k, m)) / np.sqrt(m * k)
    # kernels of the compositions: (AB)(x, z) = sum_y A(x, y) w2(y) B(y, z)
    AB = A @ (w2[:, None] * B)
    BA = B @ (w1[:, None] * A)
    return abs(_det(AB, w1) - _det(BA, w2))


def transpose_invariance(rng: np.random.Generator) -> float:
    w, K, _, _ = random_instance(rng)
    return abs(_det(K, w) - _det(K.T, w))


def parameter_differentiation(rng: np.random.Generator, h: float = 1e-4) -> float:
    """Relative gap between -F tr(R dK/dz) and a central difference of F in z."""
    w, K0, _, _ = random_instance(rng)
    K1, K2 = _kernel(rng, len(w), 0.5), _kernel(rng, len(w), 0.5)
    z = float(rng.uniform(-0.5, 0.5))

    def Fz(zz):
        return _det(K0 + zz * K1 + zz * zz * K2, w)

    op = weighted_operator(K0 + z * K1 + z * z * K2, w)
    dK = (K1 + 2 * z * K2) * w[None, :]
    R = np.linalg.solve(np.eye(len(w)) - op.matrix, np.eye(len(w)))
    analytic = -det_fredholm(op).value * float(np.trace(R @ dK))
    fd = (Fz(z + h) - Fz(z - h)) / (2 * h)
    return abs(analytic - fd) / max(1.0, abs(analytic))


def resolvent_derivative(rng: np.random.Generator, h: float = 1e-4) -> float:
    """Relative gap between R dK R and a central difference of R, paired with random f, g."""
    w, K0, f, g = random_instance(rng)
    K1 = _kernel(rng, len(w), 0.5)

    def pair(z):
        return resolvent_inner(weighted_operator(K0 + z * K1, w), f, g)

    op = weighted_operator(K0, w)
    analytic = op.inner(op.solve((K1 * w[None, :]) @ op.solve(f)), g)
    fd = (pair(h) - pair(-h)) / (2 * h)
    return abs(analytic - fd) / max(1.0, abs(analytic))


def rank_one(rng: np.random.Generator) -> float:
    """max of |F_A/F_B - (1 - <R_B psi, phi>)| and |F_B/F_A - (1 + <R_A psi, phi>)|."""
    w, K, psi, phi = random_instance(rng)
    B = weighted_operator(K, w)
    A = weighted_operator(K + np.outer(psi, phi), w)
    FA, FB = det_fredholm(A).value, det_fredholm(B).value
    e1 = abs(FA / FB - (1 - resolvent_inner(B, psi, phi)))
    e2 = abs(FB / FA - (1 + resolvent_inner(A, psi, phi)))
    return max(e1, e2)


def rank_one_resolvent(rng: np.random.Generator) -> float:
    """Error of <R_A f, g> = <R_B f, g> + (F_B/F_A)<R_B psi, g><R_B f, phi> and its two special cases."""
    w, K, psi, phi = random_instance(rng)
    f, g = rng.normal(size=len(w)), rng.normal(size=len(w))
    B = weighted_operator(K, w)
    A = weighted_operator(K + np.outer(psi, phi), w)
    ratio = det_fredholm(B).value / det_fredholm(A).value
    lhs = resolvent_inner(A, f, g)
    rhs = resolvent_inner(B, f, g) + ratio * resolvent_inner(B, psi, g) * resolvent_inner(B, f, phi)
    e_psi = abs(resolvent_inner(A, psi, g) - ratio * resolvent_inner(B, psi, g))
    e_phi = abs(resolvent_inner(A, f, phi) - ratio * resolvent_inner(B, f, phi))
    return max(abs(lhs - rhs), e_psi, e_phi)


CHECKS = {
    "cyclicity": (cyclicity, ANALYTIC_TOL),
    "transpose_invariance": (transpose_invariance, ANALYTIC_TOL),
    "parameter_differentiation": (parameter_differentiation, DIFFERENCED_TOL),
    "resolvent_derivative": (resolvent_derivative, DIFFERENCED_TOL),
    "rank_one_perturbation": (rank_one, ANALYTIC_TOL),
    "rank_one_resolvent": (rank_one_resolvent, ANALYTIC_TOL),
}


@dataclass
class LemmaReport:
    name: str
    instances: int
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance

    def to_json(self) -> dict:
        return {"lemma": self.name, "instances": self.instances, "max_error": self.max_error,
                "tolerance": self.tolerance, "pass": self.passed}


def run_lemmas(seed: int, instances: int = 100, names=None) -> list[LemmaReport]:
    out = []
    for name in names or CHECKS:
        check, tol = CHECKS[name]
        errs = [check(np.random.default_rng([seed, i, len(name)])) for i in range(instances)]
        out.append(LemmaReport(name, instances, float(max(errs)), tol))
    return out
