"""Experiment driver: config loading, parameter resolution, run logging, CLI.

Config files are JSON with a fixed schema; unknown keys are rejected so a
typo in a hyperparameter name fails loudly instead of silently running the
defaults.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import dataio, engine, masks, metrics, oracles, tuning
from .problems import ProblemSpec, logistic_problem, quadratic_problem

OUTPUT_DIR_ENV = "FEDCOMP_OUTPUT_DIR"

CSV_COLUMNS = ("t", "rounds", "upcom", "downcom", "totalcom", "gap", "psi",
               "ergodic_metric")

_TOP_KEYS = {"problem", "n", "mu", "algorithms", "c", "T", "seeds",
             "gap_target", "overrides", "output_dir", "log_every"}
_PROBLEM_KEYS = {"kind", "path", "d", "samples", "data_seed", "density", "scale"}
_MU_KEYS = {"value", "factor"}
_OVERRIDE_KEYS = {"gamma", "p", "eta", "s"}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    problem: dict
    n: int
    algorithms: list[str]
    c: float
    T: int
    seeds: list[int]
    mu: Optional[dict] = None
    gap_target: Optional[float] = None
    overrides: dict = field(default_factory=dict)
    output_dir: str = "runs"
    log_every: int = 1  # cadence for algorithms that communicate every iteration


def _check_keys(d: dict, allowed: set, where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys in {where}: {sorted(unknown)}")


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return parse_config(raw)


def parse_config(raw: dict) -> ExperimentConfig:
    _check_keys(raw, _TOP_KEYS, "top level")
    for req in ("problem", "n", "algorithms", "c", "T", "seeds"):
        if req not in raw:
            raise ConfigError(f"missing required config key {req!r}")
    _check_keys(raw["problem"], _PROBLEM_KEYS, "problem")
    if "mu" in raw and raw["mu"] is not None:
        _check_keys(raw["mu"], _MU_KEYS, "mu")
        if len(raw["mu"]) != 1:
            raise ConfigError("mu must set exactly one of 'value' or 'factor'")
    if "overrides" in raw:
        _check_keys(raw["overrides"], _OVERRIDE_KEYS, "overrides")
    for alg in raw["algorithms"]:
        if alg not in engine.ALGORITHMS:
            raise ConfigError(f"unknown algorithm {alg!r}")
    return ExperimentConfig(
        problem=raw["problem"],
        n=int(raw["n"]),
        algorithms=list(raw["algorithms"]),
        c=float(raw["c"]),
        T=int(raw["T"]),
        seeds=[int(s) for s in raw["seeds"]],
        mu=raw.get("mu"),
        gap_target=raw.get("gap_target"),
        overrides=dict(raw.get("overrides", {})),
        output_dir=str(raw.get("output_dir", "runs")),
        log_every=int(raw.get("log_every", 1)),
    )


def build_problem(config: ExperimentConfig) -> ProblemSpec:
    kind = config.problem.get("kind")
    if kind == "quadratic":
        rng = np.random.default_rng(int(config.problem.get("data_seed", 0)))
        b = rng.standard_normal((config.n, int(config.problem["d"])))
        spec, _ = quadratic_problem(b)
        return spec
    if kind == "libsvm":
        dataset = dataio.load_libsvm(config.problem["path"])
    elif kind == "synthetic_logistic":
        dataset = dataio.synthetic_classification(
            d=int(config.problem["d"]),
            M=int(config.problem["samples"]),
            seed=int(config.problem.get("data_seed", 0)),
            density=float(config.problem.get("density", 0.1)),
            scale=float(config.problem.get("scale", 1.0)),
        )
    else:
        raise ConfigError(f"unknown problem kind {kind!r}")
    shards = dataio.shard(dataset, config.n)
    mu = resolve_mu(config, shards)
    return logistic_problem(shards, mu)


def resolve_mu(config: ExperimentConfig, shards: dataio.ShardedDataset) -> float:
    if config.mu is None:
        raise ConfigError("logistic problems require a 'mu' rule")
    if "value" in config.mu:
        return float(config.mu["value"])
    from .problems import client_smoothness_bound

    return float(config.mu["factor"]) * client_smoothness_bound(shards)


@dataclass
class ResolvedExperiment:
    problem: ProblemSpec
    configs: dict[str, engine.RunConfig]
    rates: dict[str, float]
    tuning_report: Optional[tuning.TuningReport]


def resolve(config: ExperimentConfig,
            problem: Optional[ProblemSpec] = None) -> ResolvedExperiment:
    """Fill every unset hyperparameter from the tuning rules.

    gamma defaults to 2/(L+mu) with a strict-inequality guard; p defaults
    to 1/sqrt(kappa) for Scaffnew and min(sqrt(n/(s kappa)), 1) for the
    compressed algorithms; s and eta come from the tuning module. Explicit
    overrides win.
    """
    if problem is None:
        problem = build_problem(config)
    n, d = problem.n, problem.d
    L, mu = problem.L, problem.mu
    ov = config.overrides

    gamma = float(ov.get("gamma", 2.0 / (L + mu) * (1.0 - 1e-9)))
    strongly_convex = mu > 0
    kappa = L / mu if strongly_convex else None

    configs: dict[str, engine.RunConfig] = {}
    rates: dict[str, float] = {}
    report = None
    for alg in config.algorithms:
        if alg == "gd":
            cfg = engine.RunConfig(algorithm=alg, gamma=gamma, p=1.0, eta=1.0,
                                   s=n, c=config.c, T=config.T)
        elif alg == "scaffnew":
            if "p" in ov:
                p = float(ov["p"])
            elif strongly_convex:
                p = min(1.0, 1.0 / math.sqrt(kappa))
            else:
                raise ConfigError("convex mode requires explicit p")
            cfg = engine.RunConfig(algorithm=alg, gamma=gamma, p=p, eta=1.0,
                                   s=n, c=config.c, T=config.T)
        else:  # compressed_scaffnew or alg2
            s = int(ov.get("s", tuning.s_rec(n, d, config.c)))
            eta_max = tuning.eta_rec(n, s)
            if "eta" in ov:
                eta = float(ov["eta"])
            elif strongly_convex:
                eta = eta_max
            else:
                # convex-mode constant needs eta strictly below 1 - nu
                eta = 0.9 * eta_max
            if "p" in ov:
                p = float(ov["p"])
            elif strongly_convex:
                p = tuning.p_rec(n, s, kappa)
            else:
                raise ConfigError("convex mode requires explicit p")
            cfg = engine.RunConfig(algorithm=alg, gamma=gamma, p=p, eta=eta,
                                   s=s, c=config.c, T=config.T)
            if strongly_convex and report is None:
                report = tuning.complexity_factors(n, d, s, p, kappa, config.c)
        cfg.validate(problem)
        configs[alg] = cfg
        if strongly_convex and alg != "gd":
            rates[alg] = tuning.rate_rho(cfg.gamma, mu, L, cfg.p, cfg.eta,
                                         cfg.s, n)
        elif strongly_convex:
            rates[alg] = tuning.rho_sharp(cfg.gamma, mu, L)
    return ResolvedExperiment(problem, configs, rates, report)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_single(
    problem: ProblemSpec,
    ref: metrics.ReferenceSolution,
    cfg: engine.RunConfig,
    csv_path: str,
    gap_target: Optional[float] = None,
    log_every: int = 1,
) -> dict:
    """One deterministic (algorithm, seed) run with CSV logging.

    Logs at communication rounds plus t=0 and the final iterate; GD logs
    every log_every iterations (it communicates at every one).
    """
    n, d = problem.n, problem.d
    ledger = metrics.CommLedger(c=cfg.c)
    strongly_convex = problem.mu > 0
    erg = None if strongly_convex else metrics.ErgodicState.zeros(n, d)
    has_psi = cfg.algorithm != "gd" and strongly_convex
    psi_s = cfg.s if cfg.algorithm in ("compressed_scaffnew", "alg2") else n
    psi_eta = cfg.eta if cfg.algorithm in ("compressed_scaffnew", "alg2") else 1.0

    rows = []
    stopped = {"early": False}

    def log_row(state):
        xbar = state.x.mean(axis=0)
        gap = metrics.objective_gap(xbar, ref)
        psi = (
            metrics.lyapunov(state, ref, cfg.gamma, cfg.p, psi_eta, n, psi_s)
            if has_psi else None
        )
        em = metrics.ergodic_grad_metric(erg, problem) if erg is not None else None
        rows.append((state.t, ledger.rounds, ledger.upcom, ledger.downcom,
                     ledger.totalcom, gap, psi, em))
        return gap

    state0 = engine.WorldState.zeros(n, d)
    if erg is not None:
        erg.accumulate(state0.x)
    log_row(state0)

    def on_step(state, communicated):
        if erg is not None:
            erg.accumulate(state.x)
        should_log = communicated if cfg.algorithm != "gd" else (
            state.t % log_every == 0
        )
        if should_log:
            gap = log_row(state)
            if gap_target is not None and gap <= gap_target:
                stopped["early"] = True
                return True
        return False

    final = engine.run(problem, cfg, ledger=ledger, on_step=on_step)
    if not rows or rows[-1][0] != final.t:
        log_row(final)

    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])

    return {
        "iterations": final.t,
        "rounds": ledger.rounds,
        "upcom": ledger.upcom,
        "downcom": ledger.downcom,
        "totalcom": ledger.totalcom,
        "final_gap": rows[-1][5],
        "early_stop": stopped["early"],
        "csv": os.path.basename(csv_path),
    }


def run_experiment(config: ExperimentConfig) -> dict:
    """Run every (algorithm, seed) pair and write CSVs plus a JSON summary."""
    resolved = resolve(config)
    problem = resolved.problem
    tol = 1e-12 if problem.mu > 0 else 1e-9
    ref = metrics.reference_solve(problem, tol=tol)

    out_dir = os.environ.get(OUTPUT_DIR_ENV, config.output_dir)
    os.makedirs(out_dir, exist_ok=True)

    summary = {
        "n": problem.n,
        "d": problem.d,
        "L": problem.L,
        "mu": problem.mu,
        "kappa": problem.L / problem.mu if problem.mu > 0 else None,
        "c": config.c,
        "f_star": ref.f_star,
        "reference_residual": ref.residual,
        "rates": resolved.rates,
        "resolved": {
            alg: {"gamma": cfg.gamma, "p": cfg.p, "eta": cfg.eta, "s": cfg.s,
                  "c": cfg.c, "T": cfg.T}
            for alg, cfg in resolved.configs.items()
        },
        "complexity_factors": (
            None if resolved.tuning_report is None
            else resolved.tuning_report.__dict__
        ),
        "runs": {},
    }
    for alg, cfg in resolved.configs.items():
        for seed in config.seeds:
            run_cfg = engine.RunConfig(**{**cfg.__dict__, "master_seed": seed})
            csv_path = os.path.join(out_dir, f"{alg}_seed{seed}.csv")
            try:
                result = run_single(problem, ref, run_cfg, csv_path,
                                    gap_target=config.gap_target,
                                    log_every=config.log_every)
            except Exception as exc:  # record the failure, keep going
                result = {"error": f"{type(exc).__name__}: {exc}"}
            summary["runs"][f"{alg}_seed{seed}"] = result

    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return summary


def run_check(max_n: int = 5) -> bool:
    """Exact enumeration checks of the aggregation and dual identities."""
    ok = True
    rng = np.random.default_rng(12345)
    for n in range(2, max_n + 1):
        for s in range(2, n + 1):
            for d in (1, 3):
                pattern = masks.template(d, n, s)
                xhat = rng.standard_normal((n, d))
                mean_xbar, var = oracles.aggregate_moments(pattern, xhat)
                nu = tuning.nu_variance(n, s)
                energy = oracles.centered_energy(xhat)
                mean_ok = np.allclose(mean_xbar, xhat.mean(axis=0), atol=1e-12,
                                      rtol=0)
                var_ok = abs(var - nu * energy) <= 1e-12 * max(1.0, energy)
                p = 0.7
                a = (n - 1) / (p * (s - 1))
                mean_d, second, worst = oracles.dual_moments(pattern, xhat, p, a)
                dual_ok = (
                    np.allclose(mean_d, engine.center(xhat), atol=1e-12, rtol=0)
                    and abs(second - a * energy) <= 1e-12 * max(1.0, energy)
                    and worst <= 1e-12
                )
                status = mean_ok and var_ok and dual_ok
                ok = ok and status
                print(f"(d={d}, n={n}, s={s}): "
                      f"{'ok' if status else 'FAIL'}")
    return ok


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fedcomp",
        description="Deterministic federated-optimization simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the experiment described by a config")
    p_run.add_argument("config", help="path to a JSON experiment config")

    p_tune = sub.add_parser("tune", help="print the tuning report for (n, d, kappa, c)")
    p_tune.add_argument("n", type=int)
    p_tune.add_argument("d", type=int)
    p_tune.add_argument("kappa", type=float)
    p_tune.add_argument("c", type=float)

    sub.add_parser("check", help="run the exact enumeration oracle suite")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            summary = run_experiment(load_config(args.config))
            errors = [k for k, v in summary["runs"].items() if "error" in v]
            print(json.dumps({k: v for k, v in summary.items()
                              if k in ("rates", "resolved", "runs")}, indent=2))
            if errors:
                print(f"failed runs: {errors}", file=sys.stderr)
                return 1
            return 0
        if args.command == "tune":
            s = tuning.s_rec(args.n, args.d, args.c)
            p = tuning.p_rec(args.n, s, args.kappa)
            report = tuning.complexity_factors(args.n, args.d, s, p,
                                               args.kappa, args.c)
            print(json.dumps(report.__dict__, indent=2))
            return 0
        if args.command == "check":
            return 0 if run_check() else 1
    except (ConfigError, engine.ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
