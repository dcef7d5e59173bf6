import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kpzbilinear.grid import Axis, GridField
from kpzbilinear.hirota import (MarginError, equation, hirota_derivative, kp_residual, residual_field,
                                residual_of_function, shift_bilinear, EQUATIONS)
from kpzbilinear import jets

import oracles


def field_1d(func, axis="t", h=1e-3, count=21):
    """Field varying along one continuous axis, centred on 0."""
    x = (np.arange(count) - count // 2) * h
    shape = {"t": (count, 1, 1), "a": (1, count, 1)}[axis]
    vals = func(x).reshape(shape)
    cont = Axis(-(count // 2) * h, h, count, True)
    one = Axis(0.0, 1.0, 1, False)
    axes = (cont, one, one) if axis == "t" else (one, cont, one)
    return GridField(vals, axes)


def smooth_field(func, shape=(9, 11, 4), h=(0.05, 0.05, 1.0)):
    axes = tuple(Axis(-(k // 2) * s if i < 2 else 0.0, s, k, i < 2) for i, (k, s) in enumerate(zip(shape, h)))
    T, A, N = np.meshgrid(*[ax.values for ax in axes], indexing="ij")
    return GridField(func(T, A, N), axes)


def test_hirota_first_order_exponential_pair():
    f = field_1d(np.exp)
    g = field_1d(lambda x: np.exp(2 * x))
    mid = (10, 0, 0)
    assert hirota_derivative(f, g, "t", 1, mid) == pytest.approx(oracles.hirota_exp_pair(1, 2, 1, 0.0), abs=2e-6)


def test_hirota_second_order_gaussian():
    f = field_1d(lambda x: np.exp(x * x / 2), axis="a")
    assert hirota_derivative(f, f, "a", 2, (0, 10, 0)) == pytest.approx(2.0, abs=1e-6)


def test_odd_order_vanishes_on_identical_pair():
    f = field_1d(lambda x: np.sin(3 * x) + 2, axis="a", h=0.1)
    assert hirota_derivative(f, f, "a", 1, (0, 10, 0)) == 0.0
    assert hirota_derivative(f, f, "a", 3, (0, 10, 0)) == 0.0


def test_hirota_rejects_discrete_axis_and_edge():
    f = smooth_field(lambda T, A, N: 1 + 0 * T)
    with pytest.raises(ValueError):
        hirota_derivative(f, f, "n", 1, (4, 5, 2))
    with pytest.raises(MarginError):
        hirota_derivative(f, f, "a", 2, (4, 0, 2))


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.integers(1, 4))
def test_antisymmetry(c1, c2, order):
    f = field_1d(lambda x: np.exp(c1 * x) + 0.5, axis="a", h=0.05)
    g = field_1d(lambda x: np.exp(c2 * x) + 0.5, axis="a", h=0.05)
    mid = (0, 10, 0)
    assert hirota_derivative(f, g, "a", order, mid) == (-1) ** order * hirota_derivative(g, f, "a", order, mid)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.integers(1, 4))
def test_exponential_pair_matches_closed_form(c1, c2, order):
    f = field_1d(lambda x: np.exp(c1 * x), axis="a", h=2e-2, count=31)
    g = field_1d(lambda x: np.exp(c2 * x), axis="a", h=2e-2, count=31)
    got = hirota_derivative(f, g, "a", order, (0, 15, 0), accuracy=4)
    assert got == pytest.approx(oracles.hirota_exp_pair(c1, c2, order, 0.0), abs=1e-5)


def test_shift_bilinear():
    a = np.arange(-3.0, 4.0)
    axes = (Axis(0.0, 1.0, 1, False), Axis(-3.0, 1.0, 7, False), Axis(0.0, 1.0, 1, False))
    f = GridField(a.reshape(1, 7, 1), axes)
    assert shift_bilinear(f, f, (0, 0, 0), (0, 3, 0)) == 0.0
    assert shift_bilinear(f, f, (0, 1, 0), (0, 3, 0)) == -1.0
    ones = GridField(np.ones((1, 7, 1)), axes)
    assert shift_bilinear(ones, ones, (0, 2, 0), (0, 3, 0)) == 1.0
    with pytest.raises(MarginError):
        shift_bilinear(f, f, (0, 4, 0), (0, 3, 0))


@pytest.mark.parametrize("name", ["parallel", "blocking", "pushing"])
@pytest.mark.parametrize("prob", [0.2, 0.5, 0.9])
def test_discrete_equations_vanish_on_ones(name, prob):
    axes = tuple(Axis(0.0, 1.0, 6, False) for _ in range(3))
    res = residual_field(equation(name, prob), GridField(np.ones((6, 6, 6)), axes))
    assert res.max_abs(False) == 0.0


def test_rbm_equation_on_gaussian_profile():
    # F_n = F_{n-1} = e^{t + a^2/2}: D_t F.F = 0 and D_a^2 F.F = 2 F^2, so the
    # residual is -F^2 and its normalized form is -1
    func = lambda t, a, n: jets.exp(t + a * a / 2)
    for t in (0.0, 0.7):
        raw, norm = residual_of_function(equation("rbm"), func, (t, 0.0, 2.0))
        assert raw == pytest.approx(-math.exp(2 * t), rel=1e-12)
        assert norm == pytest.approx(-1.0, rel=1e-12)
    grid = smooth_field(lambda T, A, N: np.exp(T + A * A / 2), h=(1e-3, 1e-3, 1.0))
    res = residual_field(equation("rbm"), grid)
    assert np.allclose(res.normalized.values[res.normalized.valid], -1.0, atol=1e-5)


def test_tasep_equation_on_poisson_pair():
    # level 0 is identically one, level 1 is the Poisson survival of a particle from 0
    ts = np.linspace(0.5, 1.5, 21)
    a = np.arange(-3, 6)
    vals = np.ones((len(ts), len(a), 2))
    for i, t in enumerate(ts):
        vals[i, :, 1] = [oracles.poisson_survival(0, t, int(x)) for x in a]
    axes = (Axis(0.5, ts[1] - ts[0], len(ts), True), Axis(-3.0, 1.0, len(a), False), Axis(0.0, 1.0, 2, False))
    res = residual_field(equation("tasep"), GridField(vals, axes), accuracy=4)
    assert res.max_abs(False) < 1e-6


def test_kp_residual_trivial_fields():
    shape, h = (9, 9, 11), (0.1, 0.1, 0.1)
    axes = tuple(Axis(-(k // 2) * s, s, k, True) for k, s in zip(shape, h))
    T, X, A = np.meshgrid(*[ax.values for ax in axes], indexing="ij")
    assert kp_residual(GridField(np.ones(shape), axes)).max_abs(False) == 0.0
    # on the grid only the stencil error remains, and it is second order
    def at_origin(scale):
        ax = tuple(Axis(a.origin * scale, a.spacing * scale, a.count, True) for a in axes)
        _, _, AA = np.meshgrid(*[a.values for a in ax], indexing="ij")
        r = kp_residual(GridField(np.exp(0.8 * AA), ax)).field
        return r.values[tuple(k // 2 for k in r.shape)]
    coarse, fine = at_origin(1.0), at_origin(0.5)
    assert abs(fine) < 1e-3 and 3.8 < coarse / fine < 4.2
    raw, _ = residual_of_function(equation("kp"), lambda T, X, A: jets.exp(0.8 * A), (0.1, 0.2, 0.3))
    assert abs(raw) < 1e-12


def test_kp_one_soliton_against_hand_oracle():
    k, l, w = 1.0, 1.0, 1.0
    func = lambda T, X, A: 1 + jets.exp(k * A + l * X + w * T)
    for pt in [(0.0, 0.0, 0.0), (0.3, -0.2, 0.5)]:
        raw, _ = residual_of_function(equation("kp"), func, pt)
        assert raw == pytest.approx(oracles.kp_soliton_residual(k, l, w, *pt), rel=1e-12)
    shape, h = (7, 7, 11), (2e-3, 2e-3, 2e-3)
    axes = tuple(Axis(-(n // 2) * s, s, n, True) for n, s in zip(shape, h))
    T, X, A = np.meshgrid(*[ax.values for ax in axes], indexing="ij")
    grid = kp_residual(GridField(1 + np.exp(A + X + T), axes), accuracy=4)
    centre = tuple(n // 2 for n in grid.field.shape)
    assert grid.field.coords(centre) == pytest.approx((0.0, 0.0, 0.0), abs=1e-12)
    assert grid.field.values[centre] == pytest.approx(oracles.kp_soliton_residual(1, 1, 1, 0, 0, 0), rel=1e-4)


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
def test_kp_soliton_family(k, l, w):
    func = lambda T, X, A: 1 + jets.exp(k * A + l * X + w * T)
    raw, _ = residual_of_function(equation("kp"), func, (0.1, 0.2, -0.3))
    assert raw == pytest.approx(oracles.kp_soliton_residual(k, l, w, 0.1, 0.2, -0.3), rel=1e-10, abs=1e-12)


def test_kp_margin_error():
    axes = tuple(Axis(0.0, 0.1, 5, True) for _ in range(3))
    with pytest.raises(MarginError):
        kp_residual(GridField(np.ones((5, 5, 5)), axes))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 2, 0), (3, 0, 0), (2, 1, 2)]))
def test_odd_total_order_annihilates(seed, orders):
    """Odd total Hirota order on f.f vanishes for any smooth f (exact jets)."""
    rng = np.random.default_rng(seed)
    c = rng.normal(size=6)
    func = lambda x, y, z: jets.exp(c[0] * x + c[1] * y * y + c[2] * z) + c[3] * x * y + c[4] * z * z + 5
    from kpzbilinear.hirota import BilinearEquation, Term
    eq = BilinearEquation("odd", (Term(1.0, (0, 0, 0), orders),))
    raw, _ = residual_of_function(eq, func, tuple(rng.uniform(-1, 1, 3)), order=sum(orders))
    assert abs(raw) <= 1e-12 * (1 + abs(func(0.0, 0.0, 0.0)) ** 2)


def test_registry_matches_explicit_discrete_forms():
    rng = np.random.default_rng(3)
    axes = tuple(Axis(0.0, 1.0, 7, False) for _ in range(3))
    F = GridField(rng.uniform(0.5, 2, (7, 7, 7)), axes)
    v = F.values
    p = 0.35
    par = residual_field(equation("parallel", p), F, use_partials=False)
    blk = residual_field(equation("blocking", p), F, use_partials=False)
    psh = residual_field(equation("pushing", p), F, use_partials=False)
    for res, form in [
        (par, lambda t, a, n: v[t + 1, a, n] * v[t - 1, a, n - 1] - p * v[t, a - 1, n] * v[t, a + 1, n - 1]
         - (1 - p) * v[t, a, n] * v[t, a, n - 1]),
        (blk, lambda t, a, n: v[t + 1, a, n] * v[t, a, n - 1] - p * v[t, a - 1, n] * v[t + 1, a + 1, n - 1]
         - (1 - p) * v[t, a, n] * v[t + 1, a, n - 1]),
        (psh, lambda t, a, n: v[t + 1, a, n] * v[t, a + 1, n - 1] - p * v[t, a + 1, n] * v[t + 1, a, n - 1]
         - (1 - p) * v[t, a, n] * v[t + 1, a + 1, n - 1]),
    ]:
        checked = 0
        for idx in zip(*np.nonzero(res.field.valid)):
            at = F.index_of(*res.field.coords(idx))
            assert res.field.values[idx] == pytest.approx(form(*at), abs=1e-14)
            checked += 1
        assert checked > 20


def test_registry_lists_all_equations():
    for name in EQUATIONS:
        eq = equation(name, 0.4 if name in ("parallel", "blocking", "pushing", "hbde") else None)
        assert eq.terms


def test_residual_csv_header(tmp_path):
    axes = tuple(Axis(0.0, 1.0, 5, False) for _ in range(3))
    res = residual_field(equation("parallel", 0.5), GridField(np.ones((5, 5, 5)), axes))
    path = tmp_path / "r.csv"
    res.to_csv(path)
    assert path.read_text().splitlines()[0] == "t,a,n,residual,normalized"
