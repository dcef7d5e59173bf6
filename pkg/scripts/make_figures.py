"""Desk-scale comparison figures: determinant, hierarchy and Monte Carlo overlays.

Each figure is a `kpzlab compare` run in its own subdirectory of the output
directory (first argument, default ./figures).
"""
import sys
from pathlib import Path

from kpzbilinear.cli import run

FIGURES = {
    "tasep_step": ["--model", "tasep", "--y", "step", "--t", "5", "--n", "3", "--runs", "4000"],
    "tasep_shock": ["--model", "tasep", "--y", "shock", "--t", "20", "--n", "10", "--runs", "4000"],
    "parallel_step": ["--model", "parallel", "--y", "step", "--t", "12", "--n", "4", "--prob", "0.5",
                      "--runs", "4000"],
    "rbm_wall": ["--model", "rbm", "--t", "4", "--n", "5", "--wall-rate", "0.5", "--dt", "1e-3",
                 "--runs", "4000"],
}


def main(out: Path) -> int:
    worst = 0
    for name, args in FIGURES.items():
        rc = run(["compare", *args, "--seed", "1", "--out", str(out / name)])
        print(f"{name}: exit {rc}")
        worst = max(worst, rc)
    return worst


if __name__ == "__main__":
    sys.exit(main(Path(sys.argv[1] if len(sys.argv) > 1 else "figures")))
