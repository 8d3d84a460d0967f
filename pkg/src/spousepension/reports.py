"""CSV writers. Floats are written with ``repr`` (shortest string that round-trips)."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np

from .grid import interval_weights
from .marital import MaritalSolution
from .simulator import PolicyValueEstimate, SimulationEstimate
from .valuation import ValuationReport


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def write_json(path: Path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _stride_rows(solution: MaritalSolution, stride: float) -> List[int]:
    k = max(1, int(round(stride / solution.grid.step)))
    return list(range(0, solution.grid.n_t, k))


def write_marital(solution: MaritalSolution, out: Path, stride: float = 1.0) -> List[Path]:
    """``marital_g.csv`` on every grid node, ``marital_layers.csv`` and ``marital_f.csv`` every ``stride`` years.

    ``f`` rows are omitted where the marriage probability is below the floor.
    """
    out = Path(out)
    axis = solution.axis_label
    grid = solution.grid
    u_total = solution.u_total
    cons = solution.conservation_error()
    g_rows = ((t, g, u0, ut, c) for t, g, u0, ut, c in zip(grid.t, solution.g, solution.u0, u_total, cons))
    paths = [write_csv(out / "marital_g.csv", [axis, "g", "u0", "u_total", "conservation_error"], g_rows)]
    rows = _stride_rows(solution, stride)
    layer_rows = ((grid.t[i], layer.nu, layer.mass[i], layer.u[i]) for i in rows for layer in solution.layers)
    paths.append(write_csv(out / "marital_layers.csv", [axis, "nu", "mass", "u_nu"], layer_rows))

    def f_rows():
        for i in rows:
            if solution.g[i] < solution.g_floor:
                continue
            for y, f in zip(grid.y, solution.f[i]):
                yield grid.t[i], y, f

    paths.append(write_csv(out / "marital_f.csv", [axis, "y", "f"], f_rows()))
    return paths


def write_valuation(reports: Sequence[ValuationReport], out: Path) -> List[Path]:
    out = Path(out)
    paths = []
    for rep in reports:
        cf = rep.cashflow
        rows = zip(cf.t, cf.a, cf.A, cf.immediate, rep.discount, rep.discount * cf.a)
        paths.append(write_csv(out / f"cashflow_{cf.label}.csv",
                               ["t", "a", "A", "immediate", "discount", "discounted_a"], rows))
    summary = ((r.params["policy"], r.params["kind"], r.params["amount"], r.params["c"], r.liability,
                r.cashflow.A[-1], r.tail_bound) for r in reports)
    paths.append(write_csv(out / "summary.csv",
                           ["policy", "kind", "amount", "c", "liability", "A_t_max", "tail_bound"], summary))
    return paths


def write_simulation(est: SimulationEstimate, policies: Sequence[PolicyValueEstimate], out: Path) -> List[Path]:
    out = Path(out)
    paths = [write_csv(out / "sim_g.csv", ["t", "g", "se"], zip(est.g_times, est.g, est.g_se))]

    def layer_rows():
        for j, t in enumerate(est.g_times):
            for nu in range(est.single_layers.shape[0]):
                p = est.single_layers[nu, j]
                yield t, "single", nu, p, math.sqrt(p * (1 - p) / est.n_paths)
            for k in range(est.married_layers.shape[0]):
                p = est.married_layers[k, j]
                yield t, "married", k + 1, p, math.sqrt(p * (1 - p) / est.n_paths)

    paths.append(write_csv(out / "sim_layers.csv", ["t", "state", "nu", "probability", "se"], layer_rows()))

    def f_rows():
        for t, h in est.f.items():
            for lo, hi, d, se in zip(h.edges[:-1], h.edges[1:], h.density, h.se):
                yield t, lo, hi, d, se, h.n, h.available

    paths.append(write_csv(out / "sim_f.csv", ["t", "bin_lo", "bin_hi", "density", "se", "n_married", "available"],
                           f_rows()))

    def hist_rows():
        for name, hists in (("marriage", est.first_marriage), ("exit", est.exit_times)):
            for nu, h in hists.items():
                for lo, hi, d, se in zip(h.edges[:-1], h.edges[1:], h.density, h.se):
                    yield name, nu, lo, hi, d, se

    paths.append(write_csv(out / "sim_hist.csv", ["event", "nu", "bin_lo", "bin_hi", "density", "se"], hist_rows()))
    if policies:
        def policy_rows():
            for p in policies:
                yield p.label, "value", "", p.mean, p.se, p.n_paths
                for t, m, se in zip(p.cumulative_times, p.cumulative_mean, p.cumulative_se):
                    yield p.label, "cumulative", t, m, se, p.n_paths

        paths.append(write_csv(out / "sim_policy.csv", ["policy", "quantity", "t", "mean", "se", "n_paths"],
                               policy_rows()))
    return paths


def bin_average(nodes: np.ndarray, values: np.ndarray, lo: float, hi: float) -> float:
    """Mean over ``[lo, hi]`` of the linear interpolant of ``values``."""
    return float(interval_weights(nodes, lo, hi) @ values) / (hi - lo)
