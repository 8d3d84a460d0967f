"""Grid-refinement study for the marital solver and the toy liability.

Prints, for a sequence of halving steps, the error of g(t) against its closed
form, the worst conservation error and the toy lifelong liability with its
error against the exact value. Successive error ratios near 4 indicate
second-order convergence.
"""

import argparse
import time

import numpy as np

from spousepension import (
    ConstantRate,
    GridSpec,
    HazardDeathDensity,
    IntensitySet,
    MortalitySurface,
    UniformAgeDensity,
    solve_marital,
)
from spousepension.payments import PolicySpec
from spousepension.valuation import ShortRate, value_policy

TOY_LIABILITY = 6.662868069696638  # t_max 125, r 0.03, q_ad 0.02


def toy(sigma: float, q: float) -> IntensitySet:
    return IntensitySet(
        gamma=ConstantRate(value=0.1),
        sigma=ConstantRate(value=sigma),
        q_spouse=MortalitySurface(ConstantRate(value=q, t_max=300.0)),
        phi=UniformAgeDensity(20.0, 40.0),
        death=HazardDeathDensity(ConstantRate(value=0.04)),
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=float, nargs="+", default=[0.5, 0.25, 0.125])
    args = parser.parse_args()

    policy = PolicySpec("lifelong", q_ad=MortalitySurface(ConstantRate(value=0.02, t_max=300.0)))
    rate = ShortRate.constant(0.03)
    print(f"{'step':>6} {'g error':>10} {'ratio':>6} {'conserv.':>10} {'L error':>10} {'ratio':>6} {'secs':>6}")
    prev_g = prev_l = None
    for step in args.steps:
        start = time.perf_counter()
        sol = solve_marital(toy(0.0, 0.0), GridSpec(step, 125.0, 170.0))
        g_err = float(np.max(np.abs(sol.g - (1 - np.exp(-0.1 * sol.grid.t)))))
        l_err = abs(value_policy(sol, policy, rate).liability - TOY_LIABILITY)
        cons = float(np.max(np.abs(solve_marital(toy(0.05, 0.02), GridSpec(step, 80.0, 130.0)).conservation_error())))
        elapsed = time.perf_counter() - start
        g_ratio = f"{prev_g / g_err:6.2f}" if prev_g else " " * 6
        l_ratio = f"{prev_l / l_err:6.2f}" if prev_l else " " * 6
        print(f"{step:6.3f} {g_err:10.2e} {g_ratio} {cons:10.2e} {l_err:10.2e} {l_ratio} {elapsed:6.1f}")
        prev_g, prev_l = g_err, l_err


if __name__ == "__main__":
    main()
