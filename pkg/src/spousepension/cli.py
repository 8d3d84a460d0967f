"""Batch command line: ``spousepension <command> --config scenario.toml``.

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 comparison failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path
from typing import Optional, Sequence

from . import compare as cmp
from .config import ConfigError, ScenarioConfig, load_config
from .g82 import G82Inputs, check_equivalence, g82_solve, to_general
from .intensities import DomainError
from .marital import MaritalSolution, TruncationError, solve_marital
from .reports import write_csv, write_json, write_marital, write_simulation, write_valuation
from .simulator import estimate_marital, estimate_policy_values
from .valuation import ShortRate, portfolio_value, value_policy

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_COMPARE = 0, 1, 2, 3

log = logging.getLogger("spousepension")


class ComparisonFailure(RuntimeError):
    pass


def g82_inputs(cfg: ScenarioConfig) -> G82Inputs:
    ins = cfg.intensities
    return G82Inputs(ins.gamma, ins.sigma, ins.q_spouse.base, ins.phi, cfg.a_min, ins.death)


def solve(cfg: ScenarioConfig) -> MaritalSolution:
    if cfg.mode == "g82":
        return g82_solve(g82_inputs(cfg), cfg.grid, cfg.truncation.nu_cap, cfg.truncation.eps)
    return solve_marital(cfg.intensities, cfg.grid, cfg.truncation.nu_cap, cfg.truncation.eps)


def _need_rate(cfg: ScenarioConfig) -> ShortRate:
    if cfg.rate is None:
        raise ConfigError("missing required field `rate`")
    return cfg.rate


def _need_policies(cfg: ScenarioConfig):
    if not cfg.policies:
        raise ConfigError("missing required field `policies`")
    if cfg.intensities.death is None:
        raise ConfigError("missing required field `intensities.death`")
    return cfg.policies


def cmd_solve(cfg: ScenarioConfig, args) -> int:
    sol = solve(cfg)
    write_marital(sol, args.out, cfg.output_stride)
    log.info("solved %d layers, truncation residual %.3e, max conservation error %.3e",
             sol.nu_max_used, sol.truncation_residual, abs(sol.conservation_error()).max())
    return EXIT_OK


def value_all(cfg: ScenarioConfig, sol: MaritalSolution):
    rate = _need_rate(cfg)
    return [value_policy(sol, p, rate) for p in _need_policies(cfg)]


def cmd_value(cfg: ScenarioConfig, args) -> int:
    sol = solve(cfg)
    reports = value_all(cfg, sol)
    write_valuation(reports, args.out)
    write_json(Path(args.out) / "params.json", {"config": cfg.source, "reports": [r.params for r in reports]})
    for r in reports:
        log.info("%s: liability %r (tail bound %.3e)", r.params["policy"], r.liability, r.tail_bound)
    if cfg.portfolio is not None:
        result = portfolio_value(list(cfg.portfolio.members), cfg.portfolio.model, _need_rate(cfg),
                                 step=cfg.grid.step, y_max=cfg.grid.y_max, nu_cap=cfg.truncation.nu_cap,
                                 eps_trunc=cfg.truncation.eps)
        rows = [(m.x0, m.policy.label, m.weight, r.liability)
                for m, r in zip(cfg.portfolio.members, result.reports)]
        rows.append(("", "total", "", result.total))
        write_csv(Path(args.out) / "portfolio.csv", ["x0", "policy", "weight", "liability"], rows)
        log.info("portfolio liability %r", result.total)
    return EXIT_OK


def _simulate(cfg: ScenarioConfig, n_paths: int, seed: int):
    sim = cfg.simulation
    ins = cfg.intensities if cfg.mode == "general" else to_general(g82_inputs(cfg))
    est = estimate_marital(ins, n_paths, t_max=cfg.grid.t_max, g_times=sim.g_times, f_times=sim.f_times,
                           bin=sim.bin, y_max=cfg.grid.y_max, seed=seed, time_bin=sim.time_bin, layers=sim.layers)
    policies = []
    if cfg.policies and cfg.rate is not None and ins.death is not None:
        policies = estimate_policy_values(ins, cfg.policies, cfg.rate, n_paths, t_max=cfg.grid.t_max, seed=seed,
                                          cumulative_times=sim.cumulative_times)
    return est, policies


def cmd_simulate(cfg: ScenarioConfig, args) -> int:
    est, policies = _simulate(cfg, args.n_paths, args.seed)
    write_simulation(est, policies, args.out)
    log.info("simulated %d paths", est.n_paths)
    return EXIT_OK


def cmd_compare(cfg: ScenarioConfig, args) -> int:
    sol = solve(cfg)
    est, policies = _simulate(cfg, args.n_paths, args.seed)
    rows = cmp.marital_rows(sol, est)
    if policies:
        rows += cmp.policy_rows(value_all(cfg, sol), policies)
    write_csv(Path(args.out) / "compare.csv", cmp.HEADER, (r.as_tuple() for r in rows))
    worst = cmp.worst_z(rows)
    log.info("compared %d points, largest |z| = %.2f", len(rows), worst)
    if worst > cfg.z_max:
        raise ComparisonFailure(f"largest |z| = {worst:.2f} exceeds {cfg.z_max}")
    return EXIT_OK


def cmd_g82_check(cfg: ScenarioConfig, args) -> int:
    if cfg.mode != "g82":
        raise ConfigError("g82-check needs `mode = \"g82\"` and a `[g82]` table")
    rep = check_equivalence(g82_inputs(cfg), cfg.grid, cfg.truncation.nu_cap, cfg.truncation.eps)
    write_csv(Path(args.out) / "g82_check.csv", ["quantity", "max_abs_diff", "tolerance", "passed"],
              [("g", rep.max_dg, rep.g_tol, rep.max_dg <= rep.g_tol),
               ("f", rep.max_df, rep.f_tol, rep.max_df <= rep.f_tol)])
    write_marital(rep.g82, Path(args.out) / "g82", cfg.output_stride)
    log.info("g82 vs general: max |dg| = %.3e, max |df| = %.3e", rep.max_dg, rep.max_df)
    if not rep.passed:
        raise ComparisonFailure("g82 and general solutions disagree beyond tolerance")
    return EXIT_OK


COMMANDS = {
    "solve-marital": (cmd_solve, "solve for g(t) and f(y|t); writes marital_*.csv"),
    "value": (cmd_value, "cashflows and liabilities of the configured policies"),
    "simulate": (cmd_simulate, "Monte Carlo estimates; writes sim_*.csv"),
    "compare": (cmd_compare, "analytic vs Monte Carlo with z-scores; writes compare.csv"),
    "g82-check": (cmd_g82_check, "age-parameterised solver vs general solver"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spousepension", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, type=Path, help="scenario TOML file")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default ./out)")
        p.add_argument("--paths", type=int, default=None, help="number of simulated paths")
        p.add_argument("--seed", type=int, default=None, help="master seed")
        p.add_argument("--step", type=float, default=None, help="override grid.step")
        p.add_argument("--quiet", action="store_true", help="only report errors")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr, force=True)
    try:
        cfg = load_config(args.config)
        if args.step is not None:
            cfg = cfg.with_step(args.step)
        if args.paths is not None and args.paths < 1:
            raise ConfigError("--paths must be >= 1")
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        args.n_paths = args.paths if args.paths is not None else cfg.simulation.n_paths
        args.seed = args.seed if args.seed is not None else cfg.simulation.seed
        args.out.mkdir(parents=True, exist_ok=True)
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return COMMANDS[args.command][0](cfg, args)
    except (ConfigError, DomainError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except (TruncationError, FloatingPointError, ArithmeticError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except ComparisonFailure as exc:
        log.error("comparison failed: %s", exc)
        return EXIT_COMPARE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
