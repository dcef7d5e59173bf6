import math

import numpy as np
import pytest
from scipy import stats

from kpzbilinear.mc_models import (ModelConfig, Wall, check_ordering, empirical_cdf, simulate,
                                   simulate_rbm, simulate_tasep)

import oracles

STEP = tuple(range(0, -10, -1))


def test_single_tasep_particle_is_poisson():
    cfg = ModelConfig("tasep", (0,), 2.5, seed=3)
    x = simulate(cfg, 4000)[:, 0, 0]
    assert abs(x.mean() - 2.5) < 4 * math.sqrt(2.5 / 4000)
    assert abs(x.var() - 2.5) < 0.25


def test_single_parallel_particle_is_binomial():
    cfg = ModelConfig("parallel", (0,), 8, prob=0.3, seed=4)
    x = simulate(cfg, 4000)[:, 0, 0]
    assert abs(x.mean() - 2.4) < 4 * math.sqrt(8 * 0.21 / 4000)


def test_second_particle_after_one_step():
    # sequential update frees the second particle when the first moved: rate p^2
    p, runs = 0.5, 20000
    blk = simulate(ModelConfig("blocking", (0, -1), 1, prob=p, seed=9), runs)[:, 0, 1]
    par = simulate(ModelConfig("parallel", (0, -1), 1, prob=p, seed=9), runs)[:, 0, 1]
    moved = (blk == 0).mean()
    assert abs(moved - p * p) < 4 * math.sqrt(p * p * (1 - p * p) / runs)
    assert np.all(par == -1)


def test_push_tasep_two_particles_against_markov_chain():
    t, runs = 0.8, 20000
    law = oracles.push_tasep_two_particles(t)
    x = simulate(ModelConfig("push_tasep", (0, -1), t, seed=21), runs)[:, 0, :]
    d1, d2 = -x[:, 0], -1 - x[:, 1]
    for k in range(4):
        for who, marginal in ((d1, law.sum(axis=1)), (d2, law.sum(axis=0))):
            p = marginal[k]
            assert abs((who == k).mean() - p) < 4.5 * math.sqrt(p * (1 - p) / runs) + 1e-3


@pytest.mark.parametrize("model,prob", [("tasep", None), ("push_tasep", None), ("parallel", 0.6),
                                        ("blocking", 0.6), ("pushing", 0.6)])
def test_exclusion_ordering(model, prob):
    cfg = ModelConfig(model, STEP[:6], 5, prob=prob, seed=1)
    paths = simulate(cfg, 50, [0, 1, 2, 3, 4, 5])
    assert check_ordering(paths, strict=True)


def test_rbm_ordering_and_wall():
    wall = Wall.linear(0.5, 2.0)
    cfg = ModelConfig("rbm", (0.0, -0.3, -0.3, -1.0), 2.0, dt=1e-3, wall=wall, seed=2)
    paths = simulate(cfg, 40, [0.5, 1.0, 2.0])
    assert check_ordering(paths, strict=False)
    assert np.all(paths[:, :, 0] <= wall(np.array([0.5, 1.0, 2.0]))[None, :] + 1e-12)


def test_reflected_first_level_against_exact_sampler():
    t, mu, runs = 1.0, 0.5, 6000
    cfg = ModelConfig("rbm", (0.0,), t, dt=1e-3, wall=Wall.linear(mu, t), seed=17)
    sim = simulate_rbm(cfg, runs)[:, 0, 0]
    exact = oracles.reflected_level_one(t, mu, runs, seed=18)
    assert stats.ks_2samp(sim, exact).pvalue > 1e-3
    se = math.sqrt(sim.var() / runs + exact.var() / runs)
    assert abs(sim.mean() - exact.mean()) < 4 * se


def test_tasep_wall_blocks_first_particle():
    cfg = ModelConfig("tasep", (0, -1), 3.0, wall=Wall(jumps=(), start=1), seed=5)
    x = simulate_tasep(cfg, 200)
    assert np.all(x[:, 0, 0] == 0)


@pytest.mark.parametrize("model", ["parallel", "blocking"])
def test_degenerate_probabilities(model):
    still = simulate(ModelConfig(model, STEP[:3], 4, prob=0.0, seed=1), 5)
    assert np.all(still[:, 0, :] == np.array(STEP[:3]))
    sure = simulate(ModelConfig(model, STEP[:3], 4, prob=1.0, seed=1), 5)
    assert np.all(sure[:, 0, 0] == 4)


def test_degenerate_pushing():
    sure = simulate(ModelConfig("pushing", STEP[:3], 3, prob=1.0, seed=1), 3)
    assert np.all(sure[:, 0, :] == np.array(STEP[:3]) - 3)


def test_worker_split_is_bit_identical():
    cfg = ModelConfig("tasep", STEP[:5], 3.0, seed=123)
    one = simulate(cfg, 16, [1.0, 3.0], workers=1)
    eight = simulate(cfg, 16, [1.0, 3.0], workers=8)
    assert np.array_equal(one, eight)
    other = simulate(ModelConfig("tasep", STEP[:5], 3.0, seed=124), 16, [1.0, 3.0])
    assert not np.array_equal(one, other)


def test_empirical_cdf_fields():
    cfg = ModelConfig("tasep", (0,), 1.0, seed=8)
    e = empirical_cdf(cfg, 1, 1.0, [-1, 0, 1, 2], 1000)
    assert e.F_hat[0] == 1.0
    assert np.all(np.diff(e.F_hat) <= 0)
    assert e.to_csv().splitlines()[0] == "a,F_hat,stderr"
    assert np.allclose(e.band([0.5]), math.sqrt(0.25 / 1000))


def test_invalid_configs():
    with pytest.raises(ValueError):
        ModelConfig("tasep", (0, 0), 1.0)
    with pytest.raises(ValueError):
        ModelConfig("parallel", (0,), 1.5, prob=0.5)
    with pytest.raises(ValueError):
        ModelConfig("parallel", (0,), 1, prob=1.5)
    with pytest.raises(ValueError):
        ModelConfig("rbm", (0.0, 1.0), 1.0)
    with pytest.raises(ValueError):
        simulate(ModelConfig("tasep", (0,), 1.0), 3)
    with pytest.raises(ValueError):
        simulate(ModelConfig("tasep", (0,), 1.0, seed=1), 3, [2.0])
