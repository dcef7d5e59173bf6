"""Regenerate the frozen Monte Carlo oracle in tests/oracles.py.

The Exp(1) walk starts at v = -0.5 below y_1 = 0 and takes one step; the
expectation collects e^{a - B_1} on the event B_1 > y_2 = -1.
"""
import numpy as np

SEED = 20240611
PATHS = 10_000_000


def main():
    rng = np.random.default_rng(SEED)
    b1 = -0.5 - rng.exponential(1.0, PATHS)
    sample = np.where(b1 > -1.0, np.exp(-b1), 0.0)
    print(f"EXP_WALK_MC = {sample.mean():.9f}")
    print(f"EXP_WALK_MC_STDERR = {sample.std(ddof=1) / np.sqrt(PATHS):.9f}")


if __name__ == "__main__":
    main()
