"""Command-line entry point.

Subcommands: analyze, generate, condition, recover, regress, certify, and
experiment (recover | regress).  Exit codes: 0 success, 1 input error,
2 convergence failure, 3 I/O error.  Every randomized subcommand honors
``--seed`` and echoes it in its JSON sidecar; all file output is atomic.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import __version__
from .conditioning import conditioning_trials, monte_carlo_conditioning
from .dictgen import DictGenSpec, generate as generate_dictionary
from .errors import ConvergenceFailure, InputError
from .experiments import (
    ExperimentConfig,
    NoiseConfig,
    Selection,
    emit_summary,
    run_recovery_experiment,
    run_regression_experiment,
    write_trials,
)
from .certificates import (
    exact_recovery_certificate,
    invertibility_condition,
    orthogonality_condition,
    complementary_size_condition,
)
from .metrics import metrics_report
from .signals import BlockSparseSignal
from .solvers import SolverConfig, detect_block_support, group_lasso, l21_basis_pursuit
from .textio import (
    atomic_write_text,
    fmt_float,
    read_json,
    read_matrix,
    read_vector,
    write_json,
    write_matrix,
    write_vector,
)


def _emit_json(payload: dict, path: str | None) -> None:
    if path is None:
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    else:
        write_json(path, payload)


def _cmd_analyze(args) -> int:
    d = read_matrix(args.matrix, block_size=args.m)
    _emit_json(metrics_report(d, c0=args.c0, c1=args.c1, c2=args.c2), args.output)
    return 0


def _cmd_generate(args) -> int:
    kind = "spectral_multiplied" if args.tau > 1 else "random_unit_norm"
    spec = DictGenSpec(args.n, args.p, args.m, args.seed, args.tau, kind)
    d = generate_dictionary(spec)
    write_matrix(args.output, d)
    write_json(args.output + ".json", spec.to_json())
    return 0


def _cmd_condition(args) -> int:
    d = read_matrix(args.matrix, block_size=args.m)
    rows, _ = conditioning_trials(
        d, args.k, args.trials, epsilon=args.epsilon, master_seed=args.seed,
        exhaustive=False,
    )
    lines = ["trial,seed,k,sigma_min,sigma_max,within_interval"]
    for trial, seed, _support, smin, smax, within in rows:
        lines.append(
            f"{trial},{seed},{args.k},{fmt_float(smin)},{fmt_float(smax)},"
            f"{1 if within else 0}"
        )
    atomic_write_text(args.output, "\n".join(lines) + "\n")
    report = monte_carlo_conditioning(
        d, args.k, args.trials, epsilon=args.epsilon, master_seed=args.seed,
        exhaustive=False,
    )
    payload = {
        "seed": args.seed,
        "k": report.k,
        "trials": report.trials,
        "epsilon": report.epsilon,
        "fraction_within": report.fraction_within,
        "worst_sigma_min": report.worst_sigma_min,
        "worst_sigma_max": report.worst_sigma_max,
    }
    if report.warning:
        payload["warning"] = report.warning
    _emit_json(payload, args.report)
    return 0


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        max_iters=args.max_iters,
        abs_tol=args.tol * 1e-2,
        rel_tol=args.tol,
        debias=args.debias,
    )


def _write_solution(args, d, result) -> None:
    estimate = (
        result.beta_debiased if result.beta_debiased is not None else result.beta_hat
    )
    m = d.block_size
    support = detect_block_support(estimate, m)
    write_vector(args.output, BlockSparseSignal(_clean_offsupport(estimate, m, support), m, support))
    write_json(
        args.output + ".json",
        {
            "iterations": result.iterations,
            "converged": result.converged,
            "primal_residual": result.primal_residual,
            "dual_residual": result.dual_residual,
            "kkt_residual": result.kkt_residual,
            "objective": result.objective,
            "debiased": result.beta_debiased is not None,
        },
    )


def _clean_offsupport(beta: np.ndarray, m: int, support) -> np.ndarray:
    """Zero the blocks below the detection threshold so files are block-sparse."""
    cleaned = np.zeros_like(beta)
    for i in support:
        cleaned[i * m : (i + 1) * m] = beta[i * m : (i + 1) * m]
    return cleaned


def _cmd_recover(args) -> int:
    d = read_matrix(args.matrix, block_size=args.m)
    y = read_vector(args.observation).beta
    result = l21_basis_pursuit(d, y, _solver_config(args))
    _write_solution(args, d, result)
    if not result.converged:
        raise ConvergenceFailure(
            f"basis pursuit stopped after {result.iterations} iterations with "
            f"primal residual {result.primal_residual:.3e}"
        )
    return 0


def _cmd_regress(args) -> int:
    d = read_matrix(args.matrix, block_size=args.m)
    y = read_vector(args.observation).beta
    result = group_lasso(d, y, args.lam, args.sigma, _solver_config(args))
    _write_solution(args, d, result)
    if not result.converged:
        raise ConvergenceFailure(
            f"group lasso stopped after {result.iterations} iterations with "
            f"KKT residual {result.kkt_residual:.3e}"
        )
    return 0


def _cmd_certify(args) -> int:
    d = read_matrix(args.matrix, block_size=args.m)
    signal = read_vector(args.signal)
    if signal.block_size != d.block_size:
        raise InputError(
            f"signal block size {signal.block_size} does not match dictionary "
            f"block size {d.block_size}"
        )
    payload: dict = {"mode": args.mode}
    if args.mode == "exact":
        report = exact_recovery_certificate(d, signal.support, signal.beta)
        payload["passed"] = report.passed
        payload.update(report.details)
    else:
        mode = "group" if args.mode == "group" else "lasso"
        if args.sigma <= 0:
            raise InputError("regression certificates need sigma > 0")
        z = read_vector(args.noise).beta if args.noise else np.zeros(d.n)
        inv_ok, norm_inv = invertibility_condition(d, signal.support)
        orth_ok, orth_stat = orthogonality_condition(d, z / args.sigma, args.lam, mode)
        csc_ok, z0, z1 = complementary_size_condition(
            d, signal.support, signal.beta, z, args.lam, sigma=args.sigma, mode=mode
        )
        payload.update(
            {
                "passed": inv_ok and orth_ok and csc_ok,
                "invertibility_passed": inv_ok,
                "norm_inv": norm_inv,
                "orthogonality_passed": orth_ok,
                "orthogonality_statistic": orth_stat,
                "csc_passed": csc_ok,
                "Z0": z0,
                "Z1": z1,
                "lambda": args.lam,
                "sigma": args.sigma,
            }
        )
    _emit_json(payload, args.output)
    return 0


def _selection_from_json(raw) -> Selection:
    if isinstance(raw, str):
        return Selection(raw)
    return Selection(raw["kind"], raw.get("target"))


def _config_from_json(raw: dict, args) -> ExperimentConfig:
    if args.full_scale:
        raw = dict(raw)
        raw.update(n=858, p=5000, m=10, candidate_pool=2000, trials_per_point=1000)
    noise = raw.get("noise")
    solver = raw.get("solver", {})
    return ExperimentConfig(
        n=raw["n"],
        p=raw["p"],
        m=raw["m"],
        k_sweep=tuple(raw["k_sweep"]),
        multipliers=tuple(raw.get("multipliers", [1])),
        candidate_pool=raw.get("candidate_pool", 50),
        selection=_selection_from_json(
            raw.get("selection", {"kind": "coherence_nearest", "target": 0.2})
        ),
        trials_per_point=raw.get("trials_per_point", 200),
        master_seed=args.seed if args.seed is not None else raw.get("master_seed", 0),
        noise=NoiseConfig(
            target_snr=noise.get("target_snr", 0.84), lam=noise.get("lambda", 1.4592)
        )
        if noise is not None
        else None,
        solver=SolverConfig(**solver) if solver else SolverConfig(),
        threads=args.threads if args.threads is not None else raw.get("threads", 1),
    )


def _cmd_experiment(args) -> int:
    config = _config_from_json(read_json(args.config), args)
    if args.experiment_kind == "recover":
        summary, trials = run_recovery_experiment(config)
    else:
        if config.noise is None:
            config = dataclasses.replace(config, noise=NoiseConfig())
        summary, trials = run_regression_experiment(config)
    out = args.output_dir.rstrip("/")
    os.makedirs(out, exist_ok=True)
    emit_summary(summary, f"{out}/summary.csv", f"{out}/metrics.json")
    write_trials(trials, f"{out}/trials.csv")
    write_json(
        f"{out}/config.json",
        {
            "kind": args.experiment_kind,
            "master_seed": config.master_seed,
            "n": config.n,
            "p": config.p,
            "m": config.m,
            "k_sweep": list(config.k_sweep),
            "multipliers": list(config.multipliers),
            "candidate_pool": config.candidate_pool,
            "trials_per_point": config.trials_per_point,
        },
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blocksparse",
        description="Block-sparse dictionary analysis, recovery, and regression",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="dictionary metrics and BIC verdict")
    analyze.add_argument("--matrix", required=True)
    analyze.add_argument("--m", type=int, default=None, help="override block size")
    analyze.add_argument("--c0", type=float, default=1.0)
    analyze.add_argument("--c1", type=float, default=1.0)
    analyze.add_argument("--c2", type=float, default=1.0)
    analyze.add_argument("--output", default=None)
    analyze.set_defaults(handler=_cmd_analyze)

    gen = sub.add_parser("generate", help="write a random dictionary")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--p", type=int, required=True)
    gen.add_argument("--m", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--tau", type=int, default=1, help="spectral norm multiplier")
    gen.add_argument("--output", required=True)
    gen.set_defaults(handler=_cmd_generate)

    cond = sub.add_parser("condition", help="subdictionary conditioning trials")
    cond.add_argument("--matrix", required=True)
    cond.add_argument("--m", type=int, default=None)
    cond.add_argument("--k", type=int, required=True)
    cond.add_argument("--trials", type=int, default=500)
    cond.add_argument("--epsilon", type=float, default=0.5)
    cond.add_argument("--seed", type=int, default=0)
    cond.add_argument("--output", required=True, help="per-trial CSV path")
    cond.add_argument("--report", default=None, help="aggregate JSON path")
    cond.set_defaults(handler=_cmd_condition)

    def solver_flags(cmd):
        cmd.add_argument("--matrix", required=True)
        cmd.add_argument("--observation", required=True)
        cmd.add_argument("--m", type=int, default=None)
        cmd.add_argument("--tol", type=float, default=1e-6)
        cmd.add_argument("--max-iters", dest="max_iters", type=int, default=20000)
        cmd.add_argument("--debias", action="store_true")
        cmd.add_argument("--output", required=True)

    rec = sub.add_parser("recover", help="mixed-norm basis pursuit")
    solver_flags(rec)
    rec.set_defaults(handler=_cmd_recover)

    reg = sub.add_parser("regress", help="group lasso regression")
    solver_flags(reg)
    reg.add_argument("--lambda", dest="lam", type=float, default=1.4592)
    reg.add_argument("--sigma", type=float, default=1.0)
    reg.set_defaults(handler=_cmd_regress)

    cert = sub.add_parser("certify", help="recovery / regression certificates")
    cert.add_argument("--matrix", required=True)
    cert.add_argument("--signal", required=True, help="vector file with support")
    cert.add_argument("--m", type=int, default=None)
    cert.add_argument("--mode", choices=("exact", "lasso", "group"), default="exact")
    cert.add_argument("--noise", default=None, help="vector file holding z")
    cert.add_argument("--lambda", dest="lam", type=float, default=1.4592)
    cert.add_argument("--sigma", type=float, default=1.0)
    cert.add_argument("--output", default=None)
    cert.set_defaults(handler=_cmd_certify)

    exp = sub.add_parser("experiment", help="Monte Carlo sweeps")
    exp.add_argument("experiment_kind", choices=("recover", "regress"))
    exp.add_argument("--config", required=True, help="JSON experiment config")
    exp.add_argument("--output-dir", required=True)
    exp.add_argument("--seed", type=int, default=None, help="override master seed")
    exp.add_argument("--threads", type=int, default=None)
    exp.add_argument("--full-scale", action="store_true")
    exp.set_defaults(handler=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConvergenceFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
