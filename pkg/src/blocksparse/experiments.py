"""Monte Carlo experiment harness for recovery and regression sweeps.

Two experiment families:

* recovery: noiseless observations of random block-sparse signals solved by
  mixed-norm basis pursuit, scored by exact block-support match (plus a full
  rank check on the true support columns), swept over the block sparsity k
  and the spectral-norm multiplier tau;
* regression: noisy observations (noise calibrated so that
  ``||beta||^2 / (n sigma^2)`` hits the configured ratio, with signals
  normalized to unit energy so the noise level is constant across k) solved
  by the group lasso with debiasing, recording ``||Phi beta - Phi bhat||^2``
  and the regression certificate bundle per trial.

Dictionaries are drawn from a candidate pool and picked by a coherence rule
(nearest to a target, minimum, or maximum), mirroring how one isolates the
effect of the spectral norm from the effect of coherence.  Everything is
deterministic given the master seed: candidate c uses seed
``mix64(master_seed, POOL_SALT, c)`` and trial t of point (tau, k) uses
``mix64(master_seed, tau, k, t)``.  Trials are independent and aggregation
is order-free, so results are identical under any thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .certificates import regression_bundle
from .dictgen import apply_spectral_multiplier, mix64, random_unit_norm
from .errors import InputError
from .metrics import (
    Dictionary,
    DictionaryMetrics,
    dictionary_metrics,
    spectral_norm,
)
from .signals import calibrate_noise, normalized, observe, sample_block_support, sample_signal
from .solvers import (
    EqualityProjector,
    SolverConfig,
    detect_block_support,
    group_lasso,
    l21_basis_pursuit,
)
from .textio import atomic_write_text, fmt_float, write_json

POOL_SALT = 0x700_1

#: Constant in the group-mode regression error bound
#: ``2 (2 + sqrt(2))^2 lambda^2 m k sigma^2``.
ERROR_BOUND_COEFF = 2.0 * (2.0 + math.sqrt(2.0)) ** 2

SUMMARY_COLUMNS = (
    "tau",
    "k",
    "trials",
    "successes",
    "success_rate",
    "mean_err",
    "stderr",
    "nonconverged",
)

TRIAL_COLUMNS = (
    "tau",
    "k",
    "trial",
    "seed",
    "success",
    "regression_error",
    "sigma_min",
    "sigma_max",
    "iterations",
    "converged",
    "bundle_passed",
)


@dataclass(frozen=True)
class Selection:
    """Coherence-based pick from a candidate pool."""

    kind: str  # coherence_nearest | coherence_min | coherence_max
    target: float | None = None

    def __post_init__(self):
        kinds = ("coherence_nearest", "coherence_min", "coherence_max")
        if self.kind not in kinds:
            raise InputError(f"selection kind must be one of {kinds}, got {self.kind!r}")
        if self.kind == "coherence_nearest" and self.target is None:
            raise InputError("coherence_nearest selection needs a target value")


@dataclass(frozen=True)
class NoiseConfig:
    target_snr: float = 0.84
    lam: float = 1.4592

    def __post_init__(self):
        if self.target_snr <= 0 or self.lam <= 0:
            raise InputError("noise parameters must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    p: int
    m: int
    k_sweep: tuple[int, ...]
    multipliers: tuple[int, ...] = (1,)
    candidate_pool: int = 50
    selection: Selection = field(default_factory=lambda: Selection("coherence_nearest", 0.2))
    trials_per_point: int = 200
    master_seed: int = 0
    noise: NoiseConfig | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    threads: int = 1

    def __post_init__(self):
        if self.p % self.m != 0:
            raise InputError(f"p={self.p} not divisible by m={self.m}")
        if self.trials_per_point < 1:
            raise InputError("trials_per_point must be >= 1")
        if self.candidate_pool < 1:
            raise InputError("candidate pool must be nonempty")
        if self.threads < 1:
            raise InputError("threads must be >= 1")
        object.__setattr__(self, "k_sweep", tuple(int(k) for k in self.k_sweep))
        object.__setattr__(self, "multipliers", tuple(int(t) for t in self.multipliers))
        r = self.p // self.m
        if any(k < 0 or k > r for k in self.k_sweep):
            raise InputError(f"k_sweep entries must lie in [0, {r}]")
        if any(t < 1 for t in self.multipliers):
            raise InputError("multipliers must be positive integers")

    @property
    def r(self) -> int:
        return self.p // self.m


@dataclass(frozen=True)
class TrialRecord:
    tau: int
    k: int
    trial_index: int
    seed: int
    success: bool | None
    regression_error: float | None
    sigma_min: float
    sigma_max: float
    iterations: int
    converged: bool
    bundle_passed: bool | None = None


@dataclass(frozen=True)
class SummaryRow:
    tau: int
    k: int
    trials: int
    successes: int | None
    success_rate: float | None
    mean_err: float | None
    stderr: float | None
    nonconverged: int


@dataclass(frozen=True)
class ExperimentSummary:
    rows: tuple[SummaryRow, ...]
    metrics: dict  # per-tau metrics table (Tables analogue)


def desk_scale_config(**overrides) -> ExperimentConfig:
    """CI-runnable defaults: n=100, p=500, m=5, pool=50, 200 trials."""
    r = 500 // 5
    base = dict(
        n=100,
        p=500,
        m=5,
        k_sweep=tuple(range(1, r // 4 + 1)),
        multipliers=(1,),
        candidate_pool=50,
        trials_per_point=200,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def full_scale_config(**overrides) -> ExperimentConfig:
    """Full-size protocol (n=858, p=5000, m=10, pool=2000, 1000 trials).

    Expect a multi-hour runtime; the desk-scale defaults exist because this
    one is not CI material.
    """
    base = dict(
        n=858,
        p=5000,
        m=10,
        k_sweep=tuple(range(1, 126)),
        multipliers=(1, 2, 3, 4),
        candidate_pool=2000,
        trials_per_point=1000,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def build_candidate_pool(config: ExperimentConfig, tau: int) -> list[Dictionary]:
    """The tau-multiplied candidate dictionaries, deterministic in the seed.

    The base Gaussian pool is shared across multipliers; each candidate is
    then inflated by tau and re-normalized.
    """
    pool = []
    for c in range(config.candidate_pool):
        base = random_unit_norm(
            config.n, config.p, config.m, mix64(config.master_seed, POOL_SALT, c)
        )
        pool.append(apply_spectral_multiplier(base, tau))
    return pool


def select_dictionary(
    candidates, selection: Selection
) -> tuple[int, Dictionary, DictionaryMetrics]:
    """Pick a dictionary from a pool by its coherence; returns full metrics.

    Only coherences are measured across the pool; the remaining measures are
    computed for the winner alone.
    """
    candidates = list(candidates)
    if not candidates:
        raise InputError("candidate pool is empty")
    coherences = []
    for d in candidates:
        gram = d.entries.T @ d.entries
        np.fill_diagonal(gram, 0.0)
        coherences.append(float(np.max(np.abs(gram))))
    if selection.kind == "coherence_min":
        idx = int(np.argmin(coherences))
    elif selection.kind == "coherence_max":
        idx = int(np.argmax(coherences))
    else:
        idx = int(np.argmin([abs(c - selection.target) for c in coherences]))
    return idx, candidates[idx], dictionary_metrics(candidates[idx])


def recovery_success(
    beta_true,
    beta_hat,
    d: Dictionary,
    m: int,
    tau_abs: float = 1e-6,
    tau_rel: float = 1e-4,
) -> bool:
    """Exact block-support match plus full rank of the true support columns."""
    beta_true = np.asarray(beta_true, dtype=float)
    true_support = tuple(
        int(i)
        for i in np.flatnonzero(np.linalg.norm(beta_true.reshape(-1, m), axis=1) > 0)
    )
    detected = detect_block_support(beta_hat, m, tau_abs=tau_abs, tau_rel=tau_rel)
    if detected != true_support:
        return False
    if not true_support:
        return True
    sub = d.entries[:, d.block_columns(true_support)]
    smin = float(np.linalg.svd(sub, compute_uv=False)[-1])
    return smin > 1e-8


def _support_extrema(d: Dictionary, support) -> tuple[float, float]:
    if not support:
        return 0.0, 0.0
    sub = d.entries[:, d.block_columns(support)]
    s = np.linalg.svd(sub, compute_uv=False)
    return float(s[-1]), float(s[0])


def _run_point(trial_fn, config: ExperimentConfig, tau: int, k: int) -> list[TrialRecord]:
    indices = range(config.trials_per_point)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            records = list(pool.map(lambda t: trial_fn(tau, k, t), indices))
    else:
        records = [trial_fn(tau, k, t) for t in indices]
    return sorted(records, key=lambda rec: rec.trial_index)


def _metrics_entry(metrics: DictionaryMetrics, pool_index: int) -> dict:
    return {
        "spectral_norm": metrics.spectral_norm,
        "coherence": metrics.coherence,
        "mu_B": metrics.inter_block,
        "mu_I": metrics.intra_block,
        "pool_index": pool_index,
    }


def run_recovery_experiment(
    config: ExperimentConfig,
) -> tuple[ExperimentSummary, list[TrialRecord]]:
    """Success-rate curves of mixed-norm basis pursuit over (tau, k).

    Solver failures (non-convergence, infeasibility) count as recovery
    failures and are tallied in the ``nonconverged`` column rather than
    aborting the sweep.
    """
    rows: list[SummaryRow] = []
    all_records: list[TrialRecord] = []
    metrics_table: dict = {}
    r = config.r
    for tau in config.multipliers:
        pool = build_candidate_pool(config, tau)
        pool_idx, d, metrics = select_dictionary(pool, config.selection)
        metrics_table[str(tau)] = _metrics_entry(metrics, pool_idx)
        projector = EqualityProjector(d)

        def trial(tau_, k, t, d=d, projector=projector):
            seed = mix64(config.master_seed, tau_, k, t)
            rng = np.random.Generator(np.random.Philox(seed))
            support = sample_block_support(r, k, rng)
            signal = sample_signal(support, r, config.m, rng, seed=seed)
            obs = observe(d, signal, 0.0)
            smin, smax = _support_extrema(d, support)
            try:
                result = l21_basis_pursuit(d, obs.y, config.solver, projector=projector)
            except InputError:
                return TrialRecord(
                    tau_, k, t, seed, False, None, smin, smax, 0, False
                )
            ok = result.converged and recovery_success(
                signal.beta, result.beta_hat, d, config.m
            )
            return TrialRecord(
                tau_,
                k,
                t,
                seed,
                ok,
                None,
                smin,
                smax,
                result.iterations,
                result.converged,
            )

        for k in config.k_sweep:
            records = _run_point(trial, config, tau, k)
            all_records.extend(records)
            successes = sum(1 for rec in records if rec.success)
            nonconverged = sum(1 for rec in records if not rec.converged)
            rows.append(
                SummaryRow(
                    tau=tau,
                    k=k,
                    trials=len(records),
                    successes=successes,
                    success_rate=successes / len(records),
                    mean_err=None,
                    stderr=None,
                    nonconverged=nonconverged,
                )
            )
    rows.sort(key=lambda row: (row.tau, row.k))
    all_records.sort(key=lambda rec: (rec.tau, rec.k, rec.trial_index))
    return ExperimentSummary(tuple(rows), metrics_table), all_records


def regression_error_bound(lam: float, m: int, k: int, sigma: float) -> float:
    """Bound ``2 (2 + sqrt(2))^2 lambda^2 m k sigma^2`` for bundle-passing trials."""
    return ERROR_BOUND_COEFF * lam**2 * m * k * sigma**2


def run_regression_experiment(
    config: ExperimentConfig,
) -> tuple[ExperimentSummary, list[TrialRecord]]:
    """Group-lasso regression error curves over (tau, k).

    Per trial: sample a block-sparse signal, normalize it to unit energy,
    calibrate the noise to the configured energy ratio (constant across k
    because of the normalization), observe with Gaussian noise, solve the
    group lasso with debiasing, and record the regression error together
    with the certificate-bundle outcome.
    """
    if config.noise is None:
        raise InputError("regression experiments need a noise configuration")
    if any(k < 1 for k in config.k_sweep):
        raise InputError("regression sweeps need k >= 1 (noise calibration)")
    noise = config.noise
    rows: list[SummaryRow] = []
    all_records: list[TrialRecord] = []
    metrics_table: dict = {}
    r = config.r
    for tau in config.multipliers:
        pool = build_candidate_pool(config, tau)
        pool_idx, d, metrics = select_dictionary(pool, config.selection)
        metrics_table[str(tau)] = _metrics_entry(metrics, pool_idx)
        lipschitz = spectral_norm(d.entries) ** 2

        def trial(tau_, k, t, d=d, lipschitz=lipschitz):
            seed = mix64(config.master_seed, tau_, k, t)
            rng = np.random.Generator(np.random.Philox(seed))
            support = sample_block_support(r, k, rng)
            signal = normalized(sample_signal(support, r, config.m, rng, seed=seed))
            sigma = calibrate_noise(d, signal, noise.target_snr)
            obs = observe(d, signal, sigma, rng, noise_seed=seed)
            smin, smax = _support_extrema(d, support)
            solver_config = replace(config.solver, debias=True)
            try:
                result = group_lasso(
                    d, obs.y, noise.lam, sigma, solver_config, lipschitz=lipschitz
                )
                estimate = (
                    result.beta_debiased
                    if result.beta_debiased is not None
                    else result.beta_hat
                )
                iterations, converged = result.iterations, result.converged
            except InputError:
                estimate = np.zeros(d.p)
                iterations, converged = 0, False
            err = float(np.linalg.norm(d.entries @ (signal.beta - estimate)) ** 2)
            z = obs.y - d.entries @ signal.beta
            bundle = regression_bundle(
                d, support, signal.beta, z, noise.lam, sigma=sigma, mode="group"
            )
            return TrialRecord(
                tau_,
                k,
                t,
                seed,
                None,
                err,
                smin,
                smax,
                iterations,
                converged,
                bundle_passed=bundle.passed,
            )

        for k in config.k_sweep:
            records = _run_point(trial, config, tau, k)
            all_records.extend(records)
            errors = np.array([rec.regression_error for rec in records])
            nonconverged = sum(1 for rec in records if not rec.converged)
            stderr = (
                float(np.std(errors, ddof=1) / math.sqrt(len(errors)))
                if len(errors) > 1
                else 0.0
            )
            rows.append(
                SummaryRow(
                    tau=tau,
                    k=k,
                    trials=len(records),
                    successes=None,
                    success_rate=None,
                    mean_err=float(np.mean(errors)),
                    stderr=stderr,
                    nonconverged=nonconverged,
                )
            )
    rows.sort(key=lambda row: (row.tau, row.k))
    all_records.sort(key=lambda rec: (rec.tau, rec.k, rec.trial_index))
    return ExperimentSummary(tuple(rows), metrics_table), all_records


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return fmt_float(value)
    return str(value)


def summary_to_csv(rows) -> str:
    lines = [",".join(SUMMARY_COLUMNS)]
    for row in rows:
        lines.append(
            ",".join(
                _cell(getattr(row, col)) for col in SUMMARY_COLUMNS
            )
        )
    return "\n".join(lines) + "\n"


def emit_summary(summary: ExperimentSummary, csv_path: str, metrics_path: str | None = None):
    """Write the summary CSV (and optionally the per-tau metrics JSON).

    Output bytes are a pure function of the summary contents.
    """
    atomic_write_text(csv_path, summary_to_csv(summary.rows))
    if metrics_path is not None:
        write_json(metrics_path, summary.metrics)


def parse_summary(csv_path: str) -> tuple[SummaryRow, ...]:
    with open(csv_path) as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise InputError(f"{csv_path}: empty summary file")
    header = tuple(lines[0].split(","))
    if header != SUMMARY_COLUMNS:
        raise InputError(
            f"{csv_path}: unexpected header {header!r}; expected {SUMMARY_COLUMNS!r}"
        )
    rows = []
    for line in lines[1:]:
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != len(SUMMARY_COLUMNS):
            raise InputError(f"{csv_path}: malformed row {line!r}")
        rows.append(
            SummaryRow(
                tau=int(cells[0]),
                k=int(cells[1]),
                trials=int(cells[2]),
                successes=int(cells[3]) if cells[3] else None,
                success_rate=float(cells[4]) if cells[4] else None,
                mean_err=float(cells[5]) if cells[5] else None,
                stderr=float(cells[6]) if cells[6] else None,
                nonconverged=int(cells[7]),
            )
        )
    return tuple(rows)


def trials_to_csv(records) -> str:
    lines = [",".join(TRIAL_COLUMNS)]
    for rec in records:
        cells = (
            rec.tau,
            rec.k,
            rec.trial_index,
            rec.seed,
            rec.success,
            rec.regression_error,
            rec.sigma_min,
            rec.sigma_max,
            rec.iterations,
            rec.converged,
            rec.bundle_passed,
        )
        lines.append(",".join(_cell(c) for c in cells))
    return "\n".join(lines) + "\n"


def write_trials(records, path: str) -> None:
    atomic_write_text(path, trials_to_csv(records))
