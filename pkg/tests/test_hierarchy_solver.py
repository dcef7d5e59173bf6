import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kpzbilinear.anchors import wall_level_one
from kpzbilinear.fredholm import fredholm_det
from kpzbilinear.hierarchy_solver import (Scheme, bootstrap_parallel, evolve_continuous, evolve_rbm,
                                          evolve_rbm_wall, recurse_discrete, wall_profile)
from kpzbilinear.hirota import equation, residual_field

import oracles

STEP = tuple(range(0, -12, -1))


def test_tasep_first_level_transport():
    a = np.arange(-3, 5)
    res = evolve_continuous("tasep", STEP, [0.5, 1.0], a, n_max=1)
    for i, t in enumerate([0.5, 1.0]):
        ref = [oracles.poisson_survival(0, t, int(v)) for v in a]
        assert np.max(np.abs(res.field.values[i, :, 1] - ref)) < 1e-4


def test_tasep_levels_against_determinants():
    a = np.arange(-6, 4)
    res = evolve_continuous("tasep", STEP, [1.0], a, n_max=3)
    for n in (2, 3):
        ref = np.array([fredholm_det("tasep", STEP, 1.0, int(v), n) for v in a])
        assert np.max(np.abs(res.field.values[0, :, n] - ref)) < 1e-3


def test_rbm_first_level_is_heat_flow():
    res = evolve_rbm((0.0, -0.5), [1.0], -3.0, 3.0, 1)
    a = res.field.axes[1].values
    ref = np.array([oracles.gaussian_survival(0.0, 1.0, v) for v in a])
    inner = np.abs(a) < 2.5
    assert np.max(np.abs(res.field.values[0, inner, 1] - ref[inner])) < 1e-3


def test_rbm_wall_first_level():
    res = evolve_rbm_wall(0.5, [1.0], 2)
    a = np.linspace(-3.0, 0.4, 18)
    got = wall_profile(res, 0, 1, a)
    assert np.max(np.abs(got - wall_level_one(1.0, a, 0.5))) < 1e-3
    second = wall_profile(res, 0, 2, a)
    assert np.all(second <= got + 1e-9)
    assert np.all(wall_profile(res, 0, 1, [0.6, 1.0]) == 0.0)


def test_blocking_second_particle_after_one_step():
    res = recurse_discrete("blocking", (0, -1), 0.5, 1, 2, a_values=[-1])
    assert res.field.values[1, 0, 2] == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("eq,sign", [("parallel", 1), ("blocking", 1), ("pushing", -1)])
def test_discrete_first_level_is_binomial(eq, sign):
    p, T = 0.3, 6
    res = recurse_discrete(eq, STEP, p, T, 1)
    a = res.field.axes[1].values
    for t in range(T + 1):
        ref = [oracles.binomial_survival(0, t, p, int(v), sign) for v in a]
        assert np.max(np.abs(res.field.values[t, :, 1] - ref)) < 1e-12


@pytest.mark.parametrize("eq", ["parallel", "blocking", "pushing"])
def test_discrete_levels_against_determinants(eq):
    p, T, n_max = 0.45, 4, 3
    res = recurse_discrete(eq, STEP, p, T, n_max)
    F = res.field
    for t in (2, 4):
        for n in (2, 3):
            yn = STEP[n - 1]
            bound = yn + t if eq != "pushing" else yn
            for a in range(yn - t - 1, bound):
                i = F.index_of(t, a, n)
                assert F.values[i] == pytest.approx(fredholm_det(eq, STEP, t, a, n, p), abs=1e-9)


@pytest.mark.parametrize("eq", ["parallel", "blocking", "pushing"])
def test_discrete_recursion_solves_its_equation(eq):
    res = recurse_discrete(eq, STEP, 0.6, 6, 4)
    r = residual_field(equation(eq, 0.6), res.field)
    assert r.max_abs(normalized=False) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=3, max_size=3), st.floats(0.05, 0.95), st.integers(1, 5))
def test_discrete_solution_is_a_survival_function(gaps, p, T):
    y = tuple(int(v) for v in -np.cumsum([0] + gaps))
    for eq in ("parallel", "blocking", "pushing"):
        F = recurse_discrete(eq, y, p, T, 4).field.values
        assert np.all(F >= -1e-12) and np.all(F <= 1 + 1e-12)
        assert np.all(np.diff(F, axis=1) <= 1e-12)  # non-increasing in a
        assert np.all(np.diff(F, axis=2) <= 1e-12)  # non-increasing in n


def test_parallel_bootstrap_single_step():
    a = np.arange(-3, 2)
    F = bootstrap_parallel((0, -1), 0.5, a, 2)
    # the second particle is blocked during the first step
    assert np.allclose(F[2], (-1 > a).astype(float))
    assert np.allclose(F[1], [1, 1, 1, 0.5, 0])


def test_invalid_requests():
    with pytest.raises(ValueError):
        recurse_discrete("tasep", STEP, 0.5, 2, 2)
    with pytest.raises(ValueError):
        recurse_discrete("blocking", STEP, 0.5, 2, 2, a_values=[40])
    with pytest.raises(ValueError):
        evolve_continuous("kp", STEP, [1.0], np.arange(3), 1)
    with pytest.raises(ValueError):
        evolve_continuous("tasep", STEP, [1.0], np.array([0, 2, 3]), 1)
    with pytest.raises(ValueError):
        evolve_continuous("tasep", STEP, [0.001, 1.0], np.arange(3), 1, scheme=Scheme(t0_fraction=0.1))
