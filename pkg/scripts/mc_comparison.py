"""Analytic vs Monte Carlo comparison for one scenario, summarised by quantity.

Writes nothing; prints the number of tested points, the largest |z| and the
share within 3 standard errors for each quantity family.
"""

import argparse
import math
import time
from collections import defaultdict

from spousepension.compare import marital_rows, policy_rows
from spousepension.config import load_config
from spousepension.marital import solve_marital
from spousepension.simulator import estimate_marital, estimate_policy_values
from spousepension.valuation import value_policy


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("config")
    parser.add_argument("--paths", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    cfg = load_config(args.config)
    sim = cfg.simulation
    n = args.paths or sim.n_paths
    seed = sim.seed if args.seed is None else args.seed
    start = time.perf_counter()
    sol = solve_marital(cfg.intensities, cfg.grid, cfg.truncation.nu_cap, cfg.truncation.eps)
    est = estimate_marital(cfg.intensities, n, t_max=cfg.grid.t_max, g_times=sim.g_times, f_times=sim.f_times,
                           bin=sim.bin, y_max=cfg.grid.y_max, seed=seed, time_bin=sim.time_bin, layers=sim.layers)
    rows = marital_rows(sol, est)
    if cfg.policies and cfg.rate is not None:
        reports = [value_policy(sol, p, cfg.rate) for p in cfg.policies]
        rows += policy_rows(reports, estimate_policy_values(cfg.intensities, cfg.policies, cfg.rate, n,
                                                            t_max=cfg.grid.t_max, seed=seed))
    groups = defaultdict(list)
    for r in rows:
        if not math.isnan(r.z):
            groups[r.quantity].append(r.z)
    print(f"{n} paths, seed {seed}, {time.perf_counter() - start:.1f} s")
    print(f"{'quantity':<28} {'points':>6} {'max |z|':>8} {'within 3':>9}")
    for name, zs in sorted(groups.items()):
        share = sum(abs(z) <= 3 for z in zs) / len(zs)
        print(f"{name:<28} {len(zs):>6} {max(abs(z) for z in zs):>8.2f} {100 * share:>8.1f}%")


if __name__ == "__main__":
    main()
