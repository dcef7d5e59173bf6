import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kpzbilinear.specfun import (GenFunSpec, HERMITE_MAX, hermite, model_basis, psi_support, rbm_basis,
                                 series_coefficient)

import oracles
from flow_checks import flow_errors

LATTICE = [("tasep", None), ("push_tasep", None), ("parallel", 0.4), ("blocking", 0.6), ("pushing", 0.3)]


def test_hermite_values():
    assert hermite(0, 1.7) == 1.0
    assert hermite(2, 0.0) == -1.0
    assert hermite(3, 2.0) == 2.0
    with pytest.raises(ValueError):
        hermite(HERMITE_MAX + 1, 0.0)
    with pytest.raises(ValueError):
        hermite(-1, 0.0)


@given(st.integers(0, 4), st.floats(-5, 5))
def test_hermite_closed_forms(n, x):
    assert hermite(n, x) == pytest.approx(oracles.hermite_closed(n, x), rel=1e-13, abs=1e-12)


@given(st.integers(1, 14), st.integers(-3, 3))
def test_hermite_recurrence_exact_on_integers(n, x):
    assert hermite(n + 1, x) == x * hermite(n, x) - n * hermite(n - 1, x)


def test_rbm_basis_values():
    assert rbm_basis("phibar", 0, 2.5, -1.3) == 1.0
    assert rbm_basis("phi", 0, 1.0, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)
    assert rbm_basis("phibar", -2, 1.0, 0.4) == 0.0
    with pytest.raises(ValueError):
        rbm_basis("phi", 1, 0.0, 0.0)


def test_raising_identity_spot_value():
    h = 1e-5
    fd = (rbm_basis("phi", 0, 1.0, 1 + h) - rbm_basis("phi", 0, 1.0, 1 - h)) / (2 * h)
    expected = -math.exp(-0.5) / math.sqrt(2 * math.pi)
    assert fd == pytest.approx(expected, abs=1e-9)
    assert -rbm_basis("phi", 1, 1.0, 1.0) == pytest.approx(expected, rel=1e-14)


def _d4(f, z, h=2e-4):
    return (-f(z + 2 * h) + 8 * f(z + h) - 8 * f(z - h) + f(z - 2 * h)) / (12 * h)


@settings(max_examples=60)
@given(st.integers(0, 6), st.floats(0.3, 3.0), st.floats(-3, 3))
def test_hermite_calculus_identities(n, t, x):
    def dx(kind, m):
        return _d4(lambda z: float(rbm_basis(kind, m, t, z)), x)
    def dt(kind, m):
        return _d4(lambda s: float(rbm_basis(kind, m, s, x)), t)
    pairs = [(dx("phi", n), -rbm_basis("phi", n + 1, t, x)),
             (dx("phibar", n), rbm_basis("phibar", n - 1, t, x)),
             (dt("phi", n), 0.5 * rbm_basis("phi", n + 2, t, x)),
             (dt("phibar", n), -0.5 * rbm_basis("phibar", n - 2, t, x))]
    for got, want in pairs:
        assert abs(got - want) <= 1e-8 * max(1.0, abs(want))


def test_tasep_psi_at_time_zero():
    # coefficient of w^1 in (1 - w), with no powers of two since a = u
    assert model_basis("tasep", "psi", 0.0, 3, 1, 3) == pytest.approx(-1.0, abs=1e-15)


@pytest.mark.parametrize("model,prob", [("tasep", None), ("parallel", 0.4), ("blocking", 0.6)])
def test_negative_power_is_zero(model, prob):
    spec = GenFunSpec(model, "psi", 2.0, 2, 0, 0, prob)
    assert series_coefficient(spec, power=-1) == 0.0


@pytest.mark.parametrize("model,prob", LATTICE)
@pytest.mark.parametrize("kind", ["psi", "phibar"])
def test_factors_match_contour_quadrature(model, prob, kind):
    rng = np.random.default_rng(hash((model, kind)) % 2**32)
    for _ in range(12):
        t = int(rng.integers(0, 6)) if prob is not None else float(rng.uniform(0, 3))
        a, u, n = (int(v) for v in (rng.integers(-4, 5), rng.integers(-4, 5), rng.integers(1, 5)))
        got = model_basis(model, kind, t, a, n, u, prob)
        ref = oracles.basis(model, kind, t, a, n, u, prob)
        assert got == pytest.approx(ref, rel=1e-10, abs=1e-11)


@settings(max_examples=40)
@given(st.floats(0, 4), st.integers(-6, 6), st.integers(1, 5))
def test_tasep_psi_support(t, d, n):
    a, u = d, 0
    if a < u - n:
        assert model_basis("tasep", "psi", t, a, n, u) == 0.0
    lo, _ = psi_support("tasep", t, n)
    assert lo == -n


@given(st.integers(0, 12))
def test_polynomial_integrand_exact(t):
    # blocking psi at a = u is the w^n coefficient of (1 - w)^n (q + p w)^t / (q + p/2)^t;
    # with n = 0 that is the constant term (q / (q + p/2))^t
    p = 0.3
    got = model_basis("blocking", "psi", t, 0, 0, 0, p)
    assert got == pytest.approx(((1 - p) / (1 - p / 2)) ** t, rel=1e-13)
    # n = 1: coefficient of w in (1 - w)(q + p w)^t equals (t p q^{t-1} - q^t) / (q + p/2)^t
    q = 1 - p
    got1 = model_basis("blocking", "psi", t, 0, 1, 0, p)
    ref1 = (t * p * q ** (t - 1) - q ** t) / (q + p / 2) ** t if t > 0 else -1.0
    assert got1 == pytest.approx(ref1, rel=1e-12, abs=1e-15)


def test_parallel_reduces_to_tasep_normalisation_at_time_zero():
    # at t = 0 the parallel psi integrand is (1-w)^n (q + p w)^{1-n} q^{n-1} / (2^d w^{n+1+d})
    p = 0.35
    q = 1 - p
    for n in (1, 2, 3):
        for d in range(-n, 4):
            par = model_basis("parallel", "psi", 0, d, n, 0, p)
            ref = oracles.basis("parallel", "psi", 0, d, n, 0, p)
            assert par == pytest.approx(ref, rel=1e-10, abs=1e-12)
            if n == 1:
                # (q + p w)^0: identical to the TASEP factor at t = 0
                assert par == pytest.approx(model_basis("tasep", "psi", 0.0, d, 1, 0), abs=1e-14)


# --- flow identities -----------------------------------------------------------


flow_index = st.tuples(st.integers(-4, 4), st.integers(2, 4), st.integers(-4, 4))


@settings(max_examples=25, deadline=None)
@given(flow_index, st.floats(0.3, 3.0), st.sampled_from(["tasep", "push_tasep"]))
def test_continuous_time_flows(idx, t, model):
    errors = flow_errors(model, t, *idx)
    assert len(errors) == 4
    assert max(errors.values()) < 1e-10, errors


@settings(max_examples=25, deadline=None)
@given(flow_index, st.integers(2, 6), st.floats(0.1, 0.9), st.sampled_from(["parallel", "blocking", "pushing"]))
def test_discrete_time_flows(idx, t, prob, model):
    errors = flow_errors(model, t, *idx, prob)
    assert len(errors) == 4
    assert max(errors.values()) < 1e-10, errors


def test_tasep_n_flow_spot_value():
    lhs = model_basis("tasep", "psi", 1.0, 0, 3, 0) - model_basis("tasep", "psi", 1.0, 0, 2, 0)
    rhs = 2 * (model_basis("tasep", "psi", 1.0, 1, 2, 0) - model_basis("tasep", "psi", 1.0, 0, 2, 0))
    assert abs(lhs - rhs) < 1e-12


def test_truncation_tail_reported():
    spec = GenFunSpec("tasep", "psi", 5.0, 2, 30, 0)
    _, short = series_coefficient(spec, trunc=5, with_tail=True)
    _, full = series_coefficient(spec, with_tail=True)
    assert short > 1e-8 and full < 1e-12


def test_discrete_time_validation():
    with pytest.raises(ValueError):
        GenFunSpec("parallel", "psi", 1.5, 1, 0, 0, 0.5)
    with pytest.raises(ValueError):
        GenFunSpec("parallel", "psi", 1, 1, 0, 0, 1.5)
