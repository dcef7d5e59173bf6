"""Exact stochastic simulators and empirical one-point distributions.

Every (run, particle) pair owns an independent random stream derived from
``(seed, run, particle)``, so ensembles are bit-identical however the runs are
split across workers.  Particles are labelled 1, 2, ... from the right;
level 0 is the wall (absent unless configured).
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

MODELS = ("rbm", "tasep", "push_tasep", "parallel", "blocking", "pushing")


@dataclass(frozen=True)
class Wall:
    """Level-0 barrier.

    RBM: piecewise-linear samples ``(times, values)`` with ``values[0] = 0``.
    TASEP: increasing jump times ``jumps`` (each moves the wall one site right)
    and starting site ``start``.
    """

    times: tuple = ()
    values: tuple = ()
    jumps: tuple = ()
    start: int = 0

    @classmethod
    def linear(cls, rate: float, horizon: float, samples: int = 2) -> "Wall":
        ts = np.linspace(0.0, horizon, samples)
        return cls(tuple(ts), tuple(rate * ts))

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    def position(self, t: float) -> int:
        return self.start + int(np.searchsorted(self.jumps, t, side="right"))


@dataclass(frozen=True)
class ModelConfig:
    model: str
    y: tuple
    horizon: float
    prob: float | None = None
    dt: float | None = None
    wall: Wall | None = None
    n_max: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        y = np.asarray(self.y, dtype=float)
        n = self.levels
        if n < 1 or len(y) < n:
            raise ValueError("n_max must be between 1 and len(y)")
        d = np.diff(y[:n])
        if self.model == "rbm":
            if np.any(d > 0):
                raise ValueError("RBM initial data must be non-increasing")
            if self.dt is not None and self.dt <= 0:
                raise ValueError("dt must be positive")
            if self.wall is not None:
                if len(self.wall.times) < 2 or self.wall.values[0] != 0:
                    raise ValueError("RBM wall needs samples with b(0) = 0")
                if self.wall.values[0] < y[0]:
                    raise ValueError("initial data must lie below the wall")
        else:
            if np.any(d >= 0) or np.any(y[:n] != np.round(y[:n])):
                raise ValueError("exclusion models need strictly decreasing integer data")
            if self.wall is not None:
                if self.model != "tasep":
                    raise ValueError("walls are supported for RBM and TASEP")
                if np.any(np.diff(self.wall.jumps) <= 0):
                    raise ValueError("wall jump times must increase")
                if self.wall.start <= y[0]:
                    raise ValueError("wall must start to the right of particle 1")
        if self.model in ("parallel", "blocking", "pushing"):
            if self.prob is None or not 0.0 <= self.prob <= 1.0:
                raise ValueError("discrete-time models need prob in [0, 1]")
            if self.horizon != int(self.horizon):
                raise ValueError("discrete-time models need an integer horizon")

    @property
    def levels(self) -> int:
        return self.n_max or len(self.y)

    @property
    def step(self) -> float:
        return self.dt if self.dt is not None else 1e-3 * self.horizon


def _stream(seed: int, run: int, particle: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, run, particle])))


# ----------------------------------------------------------------------------
# continuous-time exclusion processes
# ----------------------------------------------------------------------------

def _rings(seed, run, particle, horizon):
    g = _stream(seed, run, particle)
    size = int(horizon + 6 * math.sqrt(horizon) + 16)
    times = np.cumsum(g.exponential(size=size))
    while times[-1] <= horizon:
        more = times[-1] + np.cumsum(g.exponential(size=size))
        times = np.concatenate([times, more])
    return times[times <= horizon]


def _ct_run(cfg: ModelConfig, run: int, times: np.ndarray) -> np.ndarray:
    n = cfg.levels
    pos = np.array(cfg.y[:n], dtype=np.int64)
    rings = [_rings(cfg.seed, run, k, cfg.horizon) for k in range(n)]
    ev_t = np.concatenate(rings)
    ev_k = np.concatenate([np.full(len(r), k) for k, r in enumerate(rings)])
    order = np.argsort(ev_t, kind="stable")
    ev_t, ev_k = ev_t[order], ev_k[order]
    out = np.empty((len(times), n), dtype=np.int64)
    q = 0
    push = cfg.model == "push_tasep"
    wall = cfg.wall
    for s, k in zip(ev_t.tolist(), ev_k.tolist()):
        while q < len(times) and times[q] < s:
            out[q] = pos
            q += 1
        if push:
            pos[k] -= 1
            j = k + 1
            while j < n and pos[j] >= pos[j - 1]:
                pos[j] = pos[j - 1] - 1
                j += 1
        else:
            if k == 0:
                blocked = wall is not None and wall.position(s) == pos[0] + 1
            else:
                blocked = pos[k - 1] == pos[k] + 1
            if not blocked:
                pos[k] += 1
    while q < len(times):
        out[q] = pos
        q += 1
    return out


# ----------------------------------------------------------------------------
# discrete-time models
# ----------------------------------------------------------------------------

def _dt_run(cfg: ModelConfig, run: int, times: np.ndarray) -> np.ndarray:
    n = cfg.levels
    T = int(cfg.horizon)
    coins = np.stack([_stream(cfg.seed, run, k).random(T) < cfg.prob for k in range(n)])
    pos = np.array(cfg.y[:n], dtype=np.int64)
    out = np.empty((len(times), n), dtype=np.int64)
    want = {int(t): i for i, t in enumerate(times)}
    if 0 in want:
        out[want[0]] = pos
    for t in range(T):
        c = coins[:, t]
        if cfg.model == "parallel":
            free = np.ones(n, dtype=bool)
            free[1:] = pos[:-1] != pos[1:] + 1
            pos = pos + (c & free)
        elif cfg.model == "blocking":
            for k in range(n):
                if c[k] and (k == 0 or pos[k - 1] != pos[k] + 1):
                    pos[k] += 1
        else:  # pushing
            for k in range(n):
                old = pos[k]
                forced = k > 0 and pos[k - 1] == old
                if c[k] or forced:
                    pos[k] = old - 1
        if t + 1 in want:
            out[want[t + 1]] = pos
    return out


# ----------------------------------------------------------------------------
# reflected Brownian motions
# ----------------------------------------------------------------------------

def _rbm_run(cfg: ModelConfig, run: int, times: np.ndarray) -> np.ndarray:
    """Skorokhod reflection on a time grid with a Brownian-bridge correction.

    Between grid points the gap process D = free - above is treated as a
    Brownian bridge (variance h below a deterministic wall, 2h below another
    Brownian level), whose maximum over the step is sampled exactly.  Without
    the correction the discrete running maximum is biased low by O(sqrt(h)),
    and the bias accumulates over stacked levels.
    """
    n = cfg.levels
    steps = int(round(cfg.horizon / cfg.step))
    h = cfg.horizon / steps
    grid = np.arange(steps + 1) * h
    sample = np.clip(np.rint(np.asarray(times) / h).astype(int), 0, steps)
    above = cfg.wall(grid) if cfg.wall is not None else None
    out = np.empty((len(times), n))
    for k in range(n):
        g = _stream(cfg.seed, run, k)
        free = cfg.y[k] + np.concatenate([[0.0], np.cumsum(g.standard_normal(steps) * math.sqrt(h))])
        if above is None:
            level = free
        else:
            var = h if k == 0 else 2 * h
            D = free - above
            jump = np.diff(D)
            peak = 0.5 * (D[:-1] + D[1:] + np.sqrt(jump * jump + 2 * var * g.exponential(size=steps)))
            gap = np.maximum(np.maximum.accumulate(np.concatenate([[D[0]], peak])), 0.0)
            level = free - gap
        out[:, k] = level[sample]
        above = level
    return out


_RUNNERS = {"tasep": _ct_run, "push_tasep": _ct_run, "parallel": _dt_run, "blocking": _dt_run,
            "pushing": _dt_run, "rbm": _rbm_run}


def _chunk(args):
    cfg, lo, hi, times = args
    run = _RUNNERS[cfg.model]
    return np.stack([run(cfg, r, times) for r in range(lo, hi)])


def simulate(cfg: ModelConfig, runs: int, times=None, workers: int = 1) -> np.ndarray:
    """Positions of levels 1..n_max at ``times`` for each run: shape (runs, len(times), n)."""
    if cfg.seed is None:
        raise ValueError("a seed is required")
    times = np.atleast_1d(np.asarray(cfg.horizon if times is None else times, dtype=float))
    if np.any(times > cfg.horizon) or np.any(times < 0):
        raise ValueError("query times must lie in [0, horizon]")
    if np.any(np.diff(times) < 0):
        raise ValueError("query times must be sorted")
    if workers <= 1:
        return _chunk((cfg, 0, runs, times))
    bounds = np.linspace(0, runs, workers + 1).astype(int)
    jobs = [(cfg, int(lo), int(hi), times) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(_chunk, jobs))
    return np.concatenate(parts)


def simulate_rbm(cfg, runs, times=None, workers=1):
    return simulate(_check(cfg, "rbm"), runs, times, workers)


def simulate_tasep(cfg, runs, times=None, workers=1):
    return simulate(_check(cfg, "tasep"), runs, times, workers)


def simulate_push_tasep(cfg, runs, times=None, workers=1):
    return simulate(_check(cfg, "push_tasep"), runs, times, workers)


def simulate_parallel(cfg, runs, times=None, workers=1):
    return simulate(_check(cfg, "parallel"), runs, times, workers)


def simulate_blocking(cfg, runs, times=None, workers=1):
    return simulate(_check(cfg, "blocking"), runs, times, workers)


def simulate_pushing(cfg, runs, times=None, workers=1):
    return simulate(_check(cfg, "pushing"), runs, times, workers)


def _check(cfg, model):
    if cfg.model != model:
        raise ValueError(f"config is for {cfg.model}, not {model}")
    return cfg


def check_ordering(paths: np.ndarray, strict: bool) -> bool:
    """Positions decrease with the label on every sample."""
    d = np.diff(paths, axis=-1)
    return bool(np.all(d < 0) if strict else np.all(d <= 0))


# ----------------------------------------------------------------------------
# empirical distribution
# ----------------------------------------------------------------------------

@dataclass
class EnsembleCDF:
    a_grid: np.ndarray
    F_hat: np.ndarray
    runs: int
    stderr: np.ndarray = field(init=False)

    def __post_init__(self):
        self.a_grid = np.asarray(self.a_grid, dtype=float)
        self.F_hat = np.asarray(self.F_hat, dtype=float)
        self.stderr = np.sqrt(self.F_hat * (1 - self.F_hat) / self.runs)

    def band(self, F_ref) -> np.ndarray:
        """CLT standard error evaluated at a reference survival function."""
        F_ref = np.clip(np.asarray(F_ref, dtype=float), 0.0, 1.0)
        return np.sqrt(F_ref * (1 - F_ref) / self.runs)

    def to_csv(self) -> str:
        lines = ["a,F_hat,stderr"]
        lines += [f"{a!r},{f!r},{s!r}" for a, f, s in zip(self.a_grid.tolist(), self.F_hat.tolist(),
                                                        self.stderr.tolist())]
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {"a": self.a_grid.tolist(), "F_hat": self.F_hat.tolist(), "stderr": self.stderr.tolist(),
                "runs": self.runs}


def empirical_cdf(cfg: ModelConfig, n: int, t: float, a_grid, runs: int, workers: int = 1) -> EnsembleCDF:
    """F_hat(a) = #{Y_n(t) > a} / runs."""
    if runs < 2:
        raise ValueError("need at least two runs")
    if not 1 <= n <= cfg.levels:
        raise ValueError("level outside simulated range")
    pos = simulate(cfg, runs, [t], workers)[:, 0, n - 1]
    a_grid = np.asarray(a_grid, dtype=float)
    F = (pos[:, None] > a_grid[None, :]).mean(axis=0)
    return EnsembleCDF(a_grid, F, runs)
