"""kpzlab command line.

Every command writes its data files, an SVG chart where one makes sense, and
``<command>_manifest.json`` into the output directory (``--out``, else
$KPZLAB_OUT, else ./kpzlab_out).  Options may also come from a JSON file
given with ``--config``; flags on the command line win.  The exit code is 1
when any tolerance check fails and 2 on invalid input.
"""
from __future__ import annotations

import functools
import math
import sys

import click
import numpy as np
from click.core import ParameterSource

from . import artifacts as art
from .fredholm import F_field, Discretization, assemble_kernel, fredholm_det
from .grid import Axis, GridField
from .hierarchy_solver import (evolve_lattice_continuous, evolve_rbm, evolve_rbm_wall, recurse_discrete,
                        wall_profile)
from .hirota import equation, residual_field
from .lax_zc import k_field, random_field, zc_equivalence_check
from .mc_models import MODELS, ModelConfig, Wall, empirical_cdf, simulate

DISCRETE = ("parallel", "blocking", "pushing")
ZC_DEFAULT_TOL = {"tasep": 1e-6, "parallel": 1e-9, "rbm": 1e-5}
RESIDUAL_DEFAULT_TOL = {"tasep": 1e-7, "push_tasep": 1e-7, "rbm": 1e-5, "parallel": 1e-9,
                        "blocking": 1e-9, "pushing": 1e-9}
DEFAULT_EPS = "0.01,0.00316455696202532,0.001,0.000316255534471853,0.0001"


# ----------------------------------------------------------------------------
# plumbing
# ----------------------------------------------------------------------------

def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _merge(ctx: click.Context, params: dict) -> dict:
    """Fill parameters left at their defaults from the JSON config."""
    cfg = art.load_config(params.pop("config", None))
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = sorted(set(cfg) - set(params))
    if unknown:
        raise click.UsageError(f"unknown config keys: {', '.join(unknown)}")
    for k, v in cfg.items():
        if ctx.get_parameter_source(k) in (ParameterSource.DEFAULT, None):
            params[k] = v
    return params


def command(stochastic: bool = False):
    """Common options plus config merging and error handling."""
    def deco(fn):
        @click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
                      help="JSON file with option values; flags override it.")
        @click.option("--out", default=None, help="Output directory.")
        @functools.wraps(fn)
        def wrapper(**params):
            ctx = click.get_current_context()
            params = _merge(ctx, params)
            if stochastic and params.get("seed") is None:
                raise click.UsageError("--seed is required for stochastic commands")
            out = art.output_dir(params.pop("out"))
            try:
                manifest = fn(out, **params)
            except (ValueError, IndexError) as exc:
                raise click.UsageError(str(exc)) from None
            manifest.write(out)
            for c in manifest.checks:
                mark = "PASS" if c["pass"] else "FAIL"
                click.echo(f"[{mark}] {c['name']}: {c['value']:.3e} (tolerance {c['tolerance']:.1e})")
            click.echo(f"wrote {out}")
            ctx.exit(0 if manifest.passed else 1)
        if stochastic:
            wrapper = click.option("--seed", type=int, default=None, help="Master seed (required).")(wrapper)
        return wrapper
    return deco


model_option = click.option("--model", type=click.Choice(MODELS), required=False, default="tasep")
y_option = click.option("--y", "y", default="step", show_default=True,
                        help="Initial data: step, packed, flat, shock or a comma list.")
prob_option = click.option("--prob", type=float, default=None,
                           help="p for parallel/blocking, q for pushing.")


def _prob(model, prob):
    if model in DISCRETE and prob is None:
        return 0.5
    return prob


def default_a_grid(model: str, y, t: float, n: int, prob=None, wall=None, step=None) -> np.ndarray:
    """An a-window covering the bulk of Y_n(t)."""
    yn = float(y[n - 1])
    spread = 6 * math.sqrt(max(t, 1e-9))
    if model == "rbm":
        step = step or 0.1
        if wall is not None:
            lo, hi = -2 * math.sqrt(n * t) - spread, wall * t
        else:
            lo, hi = yn - 2 * math.sqrt(n * t) - spread, float(y[0]) + spread
        return np.round(np.arange(lo, hi + step / 2, step), 10)
    mean = t * (prob if model in DISCRETE and prob is not None else 1.0)
    if model in ("push_tasep", "pushing"):
        lo, hi = yn - n * mean - 6 * math.sqrt(n * t) - 2, yn + 1
    else:
        lo, hi = yn - 2, yn + mean + spread + 2
    if model in DISCRETE:
        # the exact recursion only covers a within t + 2 of the data
        lo, hi = max(lo, yn - t - 2), min(hi, float(y[0]) + t + 2)
    return np.arange(math.floor(lo), math.ceil(hi) + 1)


def _a_grid(model, y, t, n, prob, wall, a_min, a_max, a_step):
    if a_min is not None and a_max is not None:
        step = a_step or (1.0 if model != "rbm" else 0.1)
        grid = np.round(np.arange(a_min, a_max + step / 2, step), 10)
        return grid if model == "rbm" else grid.astype(int)
    return default_a_grid(model, y, t, n, prob, wall, a_step)


def a_options(fn):
    fn = click.option("--a-step", type=float, default=None, help="Grid step for RBM.")(fn)
    fn = click.option("--a-max", type=float, default=None)(fn)
    fn = click.option("--a-min", type=float, default=None)(fn)
    return fn


def _certificate(model, y, t, a, n, prob):
    try:
        return assemble_kernel(model, y, t, a, n, prob).truncation
    except Exception as exc:  # noqa: BLE001 - recorded, not fatal
        return {"error": str(exc)}


# ----------------------------------------------------------------------------
# field builders
# ----------------------------------------------------------------------------

def solve_field(eq, y, times, a_grid, n, prob=None, wall=None) -> GridField:
    """Hierarchy solution on (times, a_grid, 0..n)."""
    if eq in DISCRETE:
        t_max = int(round(max(times)))
        res = recurse_discrete(eq, y, prob, t_max, n, a_grid)
        idx = [int(round(t)) for t in times]
        gf = res.field
        axes = (Axis.from_values(np.asarray(idx, float), False), gf.axes[1], gf.axes[2])
        return GridField(gf.values[idx], axes, valid=gf.valid[idx], meta=gf.meta)
    if eq == "rbm":
        if wall is not None:
            res = evolve_rbm_wall(wall, times, n)
            vals = np.ones((len(times), len(a_grid), n + 1))
            for i in range(len(times)):
                for k in range(1, n + 1):
                    vals[i, :, k] = wall_profile(res, i, k, a_grid)
        else:
            pad = 4 * math.sqrt(max(times))
            res = evolve_rbm(y, times, min(a_grid) - pad, max(a_grid) + pad, n)
            x = res.field.axes[1].values
            vals = np.stack([np.stack([np.interp(a_grid, x, res.field.values[i, :, k]) for k in range(n + 1)], -1)
                             for i in range(len(times))])
        axes = (Axis.from_values(np.asarray(times, float), True), Axis.from_values(a_grid, True),
                Axis.from_values(np.arange(n + 1.0), False))
        return GridField(vals, axes, meta={"model": "rbm", "wall": wall})
    pad = int(6 * math.sqrt(max(times)) + 2 * n + 6)
    ext = np.arange(int(min(a_grid)) - pad, int(max(a_grid)) + pad + 1)
    res = evolve_lattice_continuous(eq, y, times, ext, n)
    idx = np.asarray(a_grid, int) - ext[0]
    gf = res.field
    axes = (gf.axes[0], Axis.from_values(np.asarray(a_grid, float), False), gf.axes[2])
    return GridField(gf.values[:, idx], axes, valid=gf.valid[:, idx], meta=gf.meta)


def det_field(model, y, times, a_grid, n, prob=None, partials=False, precise=False) -> GridField:
    disc = Discretization(precise=True) if precise else None
    return F_field(model, y, times, a_grid, np.arange(n + 1), prob, disc, partials=partials)


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------

@click.group()
@click.version_option(package_name="artifact")
def main():
    """Fredholm determinants, bilinear hierarchies and simulations for KPZ models."""


@main.command("simulate")
@model_option
@y_option
@click.option("--n", type=int, default=1, show_default=True, help="Level whose law is estimated.")
@click.option("--t", type=float, default=1.0, show_default=True)
@click.option("--runs", type=int, default=1000, show_default=True)
@prob_option
@click.option("--dt", type=float, default=None, help="RBM time step.")
@click.option("--wall-rate", type=float, default=None, help="RBM wall b(t) = rate * t.")
@click.option("--workers", type=int, default=1, show_default=True)
@a_options
@command(stochastic=True)
def simulate_cmd(out, model, y, n, t, runs, prob, dt, wall_rate, workers, a_min, a_max, a_step, seed):
    """Monte Carlo estimate of F_{t,a,n} = P(Y_n(t) > a)."""
    prob = _prob(model, prob)
    y = art.initial_data(y, n, model)
    wall = Wall.linear(wall_rate, t) if wall_rate is not None else None
    cfg = ModelConfig(model, y, t, prob, dt, wall, n, seed)
    grid = _a_grid(model, y, t, n, prob, wall_rate, a_min, a_max, a_step)
    cdf = empirical_cdf(cfg, n, t, grid, runs, workers)
    m = art.Manifest("simulate", {"model": model, "y": y, "n": n, "t": t, "runs": runs, "prob": prob,
                                  "dt": cfg.step if model == "rbm" else None, "wall_rate": wall_rate,
                                  "workers": workers, "a": grid}, seed)
    p = out / "simulate_cdf.csv"
    p.write_text(cdf.to_csv())
    m.add_output(p)
    m.add_output(art.svg_chart(out / "simulate.svg", [("F_hat", grid, cdf.F_hat)],
                               [("F_hat +- 3 stderr", grid, cdf.F_hat - 3 * cdf.stderr, cdf.F_hat + 3 * cdf.stderr)],
                               title=f"{model} n={n} t={t}"))
    return m


@main.command("fredholm")
@model_option
@y_option
@click.option("--t", "times", default="1", show_default=True, help="Comma list of times.")
@click.option("--n", type=int, default=1, show_default=True, help="Highest level (0..n are written).")
@prob_option
@click.option("--partials/--no-partials", default=False, help="Also write analytic t (and a) derivatives.")
@click.option("--precise/--double", default=False, help="Extended-precision lattice coefficients.")
@a_options
@command()
def fredholm_cmd(out, model, y, times, n, prob, partials, precise, a_min, a_max, a_step):
    """Determinant field F_{t,a,n} on a box."""
    prob = _prob(model, prob)
    ts = _floats(times)
    y = art.initial_data(y, n, model)
    grid = _a_grid(model, y, max(ts), n, prob, None, a_min, a_max, a_step)
    F = det_field(model, y, ts, grid, n, prob, partials, precise)
    m = art.Manifest("fredholm", {"model": model, "y": y, "t": ts, "n": n, "prob": prob, "a": grid,
                                  "partials": partials, "precise": precise})
    m.certificates = {"corner": _certificate(model, y, max(ts), grid[-1], n, prob)}
    p = out / "fredholm_fields.csv"
    F.to_csv(p)
    m.add_output(p)
    m.add_output(art.dump_json(F.to_json(), out / "fredholm_fields.json"))
    lines = [(f"n={k}", grid, F.values[-1, :, k]) for k in range(1, n + 1)]
    m.add_output(art.svg_chart(out / "fredholm.svg", lines, title=f"{model} determinant, t={ts[-1]}"))
    return m


@main.command("solve")
@click.option("--eq", type=click.Choice(MODELS), default="tasep", show_default=True)
@y_option
@click.option("--t", "times", default="1", show_default=True, help="Comma list of output times.")
@click.option("--n", type=int, default=1, show_default=True)
@prob_option
@click.option("--wall-rate", type=float, default=None, help="RBM packed data below b(t) = rate * t.")
@a_options
@command()
def solve_cmd(out, eq, y, times, n, prob, wall_rate, a_min, a_max, a_step):
    """Hierarchy solution of the bilinear equations, level by level."""
    prob = _prob(eq, prob)
    ts = _floats(times)
    y = art.initial_data(y, n, eq) if wall_rate is None else tuple([0.0] * n)
    grid = _a_grid(eq, y, max(ts), n, prob, wall_rate, a_min, a_max, a_step)
    F = solve_field(eq, y, ts, grid, n, prob, wall_rate)
    m = art.Manifest("solve", {"eq": eq, "y": y, "t": ts, "n": n, "prob": prob, "wall_rate": wall_rate,
                               "a": grid})
    p = out / "solve_fields.csv"
    F.to_csv(p)
    m.add_output(p)
    m.add_output(art.dump_json(F.to_json(), out / "solve_fields.json"))
    lines = [(f"n={k}", grid, F.values[-1, :, k]) for k in range(1, n + 1)]
    m.add_output(art.svg_chart(out / "solve.svg", lines, title=f"{eq} hierarchy, t={ts[-1]}"))
    return m


def _field_from(source, eq, y, ts, n, prob, a_min, a_max, a_step, path, precise=None):
    if source == "file":
        if path is None:
            raise ValueError("--field is required with --source file")
        import json
        with open(path) as fh:
            return GridField.from_json(json.load(fh))
    y = art.initial_data(y, n, eq)
    grid = _a_grid(eq, y, max(ts), n, prob, None, a_min, a_max, a_step)
    if source == "fredholm":
        if precise is None:
            # double-precision partials lose about 1e-6 relative accuracy in the tails
            precise = eq in ("tasep", "push_tasep")
        return det_field(eq, y, ts, grid, n, prob, partials=eq in ("rbm", "tasep", "push_tasep"), precise=precise)
    return solve_field(eq, y, ts, grid, n, prob)


source_options = [
    click.option("--source", type=click.Choice(["fredholm", "solve", "file"]), default="fredholm",
                 show_default=True),
    click.option("--field", "field_path", type=click.Path(exists=True, dir_okay=False), default=None,
                 help="GridField JSON for --source file."),
    y_option,
    click.option("--t", "times", default="1", show_default=True),
    click.option("--n", type=int, default=2, show_default=True),
    prob_option,
    click.option("--tolerance", type=float, default=None),
    click.option("--precise/--double", default=None,
                 help="Extended-precision determinants (default: on for continuous-time lattice models)."),
]


def _apply(options):
    def deco(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return deco


@main.command("residual")
@click.option("--eq", type=click.Choice(MODELS), default="tasep", show_default=True)
@_apply(source_options)
@a_options
@command()
def residual_cmd(out, eq, source, field_path, y, times, n, prob, tolerance, precise, a_min, a_max, a_step):
    """Bilinear residual of a determinant, hierarchy or stored field."""
    prob = _prob(eq, prob)
    F = _field_from(source, eq, y, _floats(times), n, prob, a_min, a_max, a_step, field_path, precise)
    res = residual_field(equation(eq, prob), F)
    tol = tolerance if tolerance is not None else (1e-12 if source == "solve" and eq in DISCRETE
                                                   else RESIDUAL_DEFAULT_TOL[eq])
    m = art.Manifest("residual", {"eq": eq, "source": source, "y": y, "t": times, "n": n, "prob": prob})
    p = out / "residual.csv"
    res.to_csv(p)
    m.add_output(p)
    m.check(f"{eq} max normalized residual", res.max_abs(True), tol, points=int(res.normalized.valid.sum()))
    return m


@main.command("zc")
@click.option("--eq", type=click.Choice(["rbm", "tasep", "parallel"]), default="tasep", show_default=True)
@_apply(source_options)
@click.option("--random-seed", type=int, default=None,
              help="Check the commutator identity on a random field instead.")
@a_options
@command()
def zc_cmd(out, eq, source, field_path, y, times, n, prob, tolerance, precise, random_seed, a_min, a_max, a_step):
    """Zero-curvature scalar K on a field, or the commutator identity on a random field."""
    prob = _prob(eq, prob)
    m = art.Manifest("zc", {"eq": eq, "source": source, "y": y, "t": times, "n": n, "prob": prob,
                            "random_seed": random_seed})
    if random_seed is not None:
        rep = zc_equivalence_check(eq, random_field(eq, seed=random_seed), prob, tolerance or 1e-10)
        m.add_output(art.dump_json(rep, out / "zc_identity.json"))
        m.check(f"{eq} commutator identity", rep["max_rel_error"], rep["tolerance"])
        return m
    F = _field_from(source, eq, y, _floats(times), n, prob, a_min, a_max, a_step, field_path, precise)
    tol = tolerance if tolerance is not None else ZC_DEFAULT_TOL[eq]
    K = k_field(eq, F, prob, floor=1e-20)
    rep = K.summary(tol)
    m.add_output(art.dump_json(rep, out / "zc_report.json"))
    m.check(f"{eq} max |K - K_expected|", rep["max_dev"], tol, argmax=rep["argmax"])
    return m


@main.command("scaling")
@click.option("--map", "maps", multiple=True, help="Map id (repeatable); default all.")
@click.option("--eps", "eps", default=DEFAULT_EPS, show_default=True, help="Decreasing comma list.")
@prob_option
@click.option("--hbde-seed", type=int, default=0, show_default=True,
              help="Seed of the random field for the HBDE reindexing check.")
@command()
def scaling_cmd(out, maps, eps, prob, hbde_seed):
    """Residual decay rates under the scaling maps and the HBDE reindexing check."""
    from .scaling import MAPS, gaussian_bump, hbde_equivalence, scaling_rate
    maps = list(maps) or list(MAPS)
    eps_list = _floats(eps)
    m = art.Manifest("scaling", {"maps": maps, "eps": eps_list, "prob": prob, "hbde_seed": hbde_seed})
    table = []
    for mid in maps:
        rep = scaling_rate(MAPS[mid].source, mid, gaussian_bump, eps_list, prob)
        rep.to_csv(m.add_output(out / f"scaling_{mid}.csv"))
        table.append(rep.to_json())
        chk = rep.check()
        m.check(f"{mid} exponent", abs(rep.exponent - rep.expected_exponent), 0.1, chk["exponent_ok"],
                exponent=rep.exponent)
        m.check(f"{mid} ratio", abs(rep.final_ratio - 1), 0.05, chk["ratio_ok"])
    m.add_output(art.dump_json(table, out / "scaling.json"))
    rng = np.random.default_rng(hbde_seed)
    axes = (Axis.from_values(np.arange(8.0), False), Axis.from_values(np.arange(-4.0, 5.0), False),
            Axis.from_values(np.arange(1.0, 7.0), False))
    hb = hbde_equivalence(GridField(rng.uniform(0.5, 2.0, (8, 9, 6)), axes), 0.5 if prob is None else prob)
    m.check("hbde reindexing deviation", hb["max_deviation"], 1e-12)
    return m


@main.command("compare")
@model_option
@y_option
@click.option("--t", type=float, default=1.0, show_default=True)
@click.option("--n", type=int, default=1, show_default=True)
@click.option("--runs", type=int, default=2000, show_default=True)
@prob_option
@click.option("--dt", type=float, default=None)
@click.option("--wall-rate", type=float, default=None, help="RBM packed data below b(t) = rate * t.")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--allowance", type=float, default=None,
              help="Extra Monte Carlo allowance (default 2e-2 with an RBM wall, else 0).")
@a_options
@command(stochastic=True)
def compare_cmd(out, model, y, t, n, runs, prob, dt, wall_rate, workers, allowance, a_min, a_max, a_step, seed):
    """Overlay determinant, hierarchy and empirical F at fixed (t, n)."""
    prob = _prob(model, prob)
    if wall_rate is not None and model != "rbm":
        raise ValueError("--wall-rate is supported for rbm only")
    y = art.initial_data(y, n, model) if wall_rate is None else tuple([0.0] * n)
    grid = _a_grid(model, y, t, n, prob, wall_rate, a_min, a_max, a_step)
    wall = Wall.linear(wall_rate, t) if wall_rate is not None else None
    cfg = ModelConfig(model, y, t, prob, dt, wall, n, seed)
    cdf = empirical_cdf(cfg, n, t, grid, runs, workers)
    F_solve = solve_field(model, y, [t], grid, n, prob, wall_rate).values[0, :, n]
    F_det = None
    if wall_rate is None:
        F_det = np.array([fredholm_det(model, y, t, a, n, prob) for a in grid])
    ref = F_det if F_det is not None else F_solve
    m = art.Manifest("compare", {"model": model, "y": y, "t": t, "n": n, "runs": runs, "prob": prob,
                                 "dt": cfg.step if model == "rbm" else None, "wall_rate": wall_rate,
                                 "workers": workers, "a": grid}, seed)
    if F_det is not None:
        m.certificates = {"corner": _certificate(model, y, t, grid[-1], n, prob)}
    allowance = allowance if allowance is not None else (2e-2 if wall_rate is not None else 0.0)
    band = cdf.band(ref)
    window = runs * np.clip(ref, 0, 1) * (1 - np.clip(ref, 0, 1)) >= 10
    excess = np.abs(cdf.F_hat - ref) - (3 * band + allowance)
    label = "F_det" if F_det is not None else "F_solve"
    m.check(f"sup |F_hat - {label}| - (3 stderr + allowance), CLT window",
            float(np.max(excess[window])) if window.any() else 0.0, 0.0,
            sup_distance=float(np.max(np.abs(cdf.F_hat - ref))),
            full_range_excess=float(np.max(excess)), window_points=int(window.sum()), allowance=allowance)
    if F_det is not None:
        tol = 1e-9 if model in DISCRETE else 1e-3
        m.check("sup |F_solve - F_det|", float(np.max(np.abs(F_solve - F_det))), tol)
    rows = ["a,F_det,F_solve,F_hat,stderr"]
    for i, a in enumerate(grid):
        d = repr(float(F_det[i])) if F_det is not None else ""
        rows.append(f"{float(a)!r},{d},{float(F_solve[i])!r},{float(cdf.F_hat[i])!r},{float(cdf.stderr[i])!r}")
    p = out / "compare.csv"
    p.write_text("\n".join(rows) + "\n")
    m.add_output(p)
    lines = [("F_hat", grid, cdf.F_hat), ("F_solve", grid, F_solve)]
    if F_det is not None:
        lines.insert(0, ("F_det", grid, F_det))
    m.add_output(art.svg_chart(out / "compare.svg", lines,
                               [("3 stderr band", grid, ref - 3 * band, ref + 3 * band)],
                               title=f"{model} n={n} t={t}"))
    return m


@main.command("selftest")
@click.option("--instances", type=int, default=100, show_default=True)
@click.option("--lemma-seed", type=int, default=0, show_default=True)
@command()
def selftest_cmd(out, instances, lemma_seed):
    """Determinant lemmas, commutator identities, HBDE reindexing and seed determinism."""
    from .lemmas import run_lemmas
    from .scaling import hbde_equivalence
    m = art.Manifest("selftest", {"instances": instances, "lemma_seed": lemma_seed})
    reports = run_lemmas(lemma_seed, instances)
    for r in reports:
        m.check(f"lemma {r.name}", r.max_error, r.tolerance)
    for eq in ("rbm", "tasep", "parallel"):
        worst = max(zc_equivalence_check(eq, random_field(eq, seed=s), 0.5)["max_rel_error"] for s in range(5))
        m.check(f"{eq} commutator identity", worst, 1e-10)
    rng = np.random.default_rng(lemma_seed)
    axes = (Axis.from_values(np.arange(6.0), False), Axis.from_values(np.arange(-3.0, 4.0), False),
            Axis.from_values(np.arange(1.0, 6.0), False))
    hb = hbde_equivalence(GridField(rng.uniform(0.5, 2.0, (6, 7, 5)), axes), 0.3)
    m.check("hbde reindexing", hb["max_deviation"], 1e-12)
    cfg = ModelConfig("tasep", (-1, -2, -3), 2.0, seed=lemma_seed)
    one, two = simulate(cfg, 40, workers=1), simulate(cfg, 40, workers=2)
    m.check("seed determinism (1 vs 2 workers)", 0.0 if one.tobytes() == two.tobytes() else 1.0, 0.0)
    m.add_output(art.dump_json([r.to_json() for r in reports], out / "selftest_lemmas.json"))
    return m


def run(argv=None) -> int:
    """Entry point returning the exit code instead of exiting."""
    try:
        rv = main.main(args=argv, prog_name="kpzlab", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 2
    # without standalone mode click hands back ctx.exit codes as return values
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    sys.exit(run())
