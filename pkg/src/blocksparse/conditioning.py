"""Empirical conditioning of random block subdictionaries.

Two experiments live here.  The first samples uniformly random k-subsets of
blocks and records the extreme singular values of the resulting ``n x km``
subdictionaries, reporting how often all singular values stay inside
``[sqrt(1-eps), sqrt(1+eps)]``.  The second estimates the q-th moment
(q = 4 log p) of the spectral norm of the randomly block-masked hollow Gram
matrix and compares it against its closed-form upper bound.

Both switch to exact exhaustive enumeration automatically when the subset or
mask space is small enough.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .dictgen import mix64, stream
from .errors import InputError
from .metrics import Dictionary, dictionary_metrics, masked_gram_norm_bound
from .signals import sample_block_support

#: Exhaustive enumeration kicks in below this many subsets or masks.
EXHAUSTIVE_LIMIT = 10_000

_TRIAL_SALT = 0x5D1A1


@dataclass(frozen=True)
class ConditioningReport:
    """Aggregate of singular-value extremes over sampled block subsets."""

    trials: int
    k: int
    epsilon: float
    fraction_within: float
    worst_sigma_min: float
    worst_sigma_max: float
    exhaustive: bool = False
    warning: str | None = None


def extract_block_subdictionary(d: Dictionary, support) -> np.ndarray:
    """Columns of the selected blocks, in ascending block order."""
    cols = d.block_columns(support)
    return d.entries[:, cols]


def singular_extrema(X) -> tuple[float, float]:
    """(smallest, largest) singular value of a nonempty matrix."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        raise InputError("singular values of an empty matrix are undefined")
    s = np.linalg.svd(X, compute_uv=False)
    return float(s[-1]), float(s[0])


def _within(smin: float, smax: float, epsilon: float) -> bool:
    lo = math.sqrt(1.0 - epsilon) if epsilon < 1.0 else 0.0
    hi = math.sqrt(1.0 + epsilon)
    return smin >= lo - 1e-12 and smax <= hi + 1e-12


def conditioning_trials(
    d: Dictionary,
    k: int,
    trials: int,
    epsilon: float = 0.5,
    master_seed: int = 0,
    exhaustive: bool | None = None,
):
    """Per-trial rows ``(trial, seed, support, sigma_min, sigma_max, within)``.

    ``exhaustive=None`` enumerates all C(r, k) subsets exactly once when that
    count is at most ``min(trials, EXHAUSTIVE_LIMIT)``; otherwise subsets are
    sampled independently with per-trial seeds ``mix64(master_seed, salt, t)``.
    """
    r = d.num_blocks
    if not 0 < k <= r:
        raise InputError(f"k must lie in [1, {r}], got {k}")
    if trials < 1:
        raise InputError("need at least one trial")
    if not 0.0 < epsilon <= 1.0:
        raise InputError(f"epsilon must lie in (0, 1], got {epsilon}")
    n_subsets = math.comb(r, k)
    if exhaustive is None:
        exhaustive = n_subsets <= min(trials, EXHAUSTIVE_LIMIT)
    rows = []
    if exhaustive:
        if n_subsets > EXHAUSTIVE_LIMIT:
            raise InputError(
                f"C({r},{k}) = {n_subsets} subsets is too many to enumerate"
            )
        supports = (tuple(c) for c in itertools.combinations(range(r), k))
        seeds = itertools.repeat(0)
    else:
        seeds = [mix64(master_seed, _TRIAL_SALT, t) for t in range(trials)]
        supports = (
            sample_block_support(r, k, np.random.Generator(np.random.Philox(s)))
            for s in seeds
        )
    for t, (support, seed) in enumerate(zip(supports, seeds)):
        smin, smax = singular_extrema(extract_block_subdictionary(d, support))
        rows.append((t, seed, support, smin, smax, _within(smin, smax, epsilon)))
    return rows, exhaustive


def monte_carlo_conditioning(
    d: Dictionary,
    k: int,
    trials: int,
    epsilon: float = 0.5,
    master_seed: int = 0,
    exhaustive: bool | None = None,
) -> ConditioningReport:
    """Fraction of random block subsets whose subdictionary is well conditioned."""
    rows, used_exhaustive = conditioning_trials(
        d, k, trials, epsilon=epsilon, master_seed=master_seed, exhaustive=exhaustive
    )
    warning = None
    if k * d.block_size > d.n:
        warning = (
            f"km = {k * d.block_size} exceeds n = {d.n}: subdictionaries cannot "
            "have full column rank (sigma_min = 0)"
        )
    smins = [row[3] for row in rows]
    smaxs = [row[4] for row in rows]
    within = [row[5] for row in rows]
    return ConditioningReport(
        trials=len(rows),
        k=k,
        epsilon=epsilon,
        fraction_within=sum(within) / len(rows),
        worst_sigma_min=min(smins),
        worst_sigma_max=max(smaxs),
        exhaustive=used_exhaustive,
        warning=warning,
    )


def hollow_gram(d: Dictionary) -> np.ndarray:
    """``Phi^T Phi - I`` (diagonal is zero up to rounding on unit columns)."""
    return d.entries.T @ d.entries - np.eye(d.p)


def _masked_norm(gram: np.ndarray, kept_blocks: np.ndarray, m: int) -> float:
    """Spectral norm of the principal submatrix on the kept blocks."""
    if kept_blocks.size == 0:
        return 0.0
    cols = (kept_blocks[:, None] * m + np.arange(m)[None, :]).reshape(-1)
    sub = gram[np.ix_(cols, cols)]
    return float(np.max(np.abs(np.linalg.eigvalsh(sub))))


def masked_gram_norm_estimate(
    d: Dictionary,
    delta: float,
    trials: int,
    master_seed: int = 0,
    exhaustive: bool | None = None,
) -> tuple[float, float]:
    """Monte Carlo estimate of the q-th moment of the masked hollow Gram norm,
    together with its closed-form upper bound.

    Each trial keeps every block independently with probability ``delta`` and
    takes the spectral norm of the retained principal submatrix of the hollow
    Gram matrix.  The q-th moment mean (q = 4 log p) is accumulated in
    log-space, since norm**q overflows double precision at realistic p.
    With ``2**r`` at most ``EXHAUSTIVE_LIMIT`` (and ``exhaustive`` not
    disabled) all masks are enumerated with their Bernoulli weights instead.
    """
    if not 0.0 < delta <= 1.0:
        raise InputError(f"delta must lie in (0, 1], got {delta}")
    if trials < 1:
        raise InputError("need at least one trial")
    r, m, p = d.num_blocks, d.block_size, d.p
    if p < 2:
        raise InputError("need p >= 2 so that log(p) > 0")
    q = 4.0 * math.log(p)
    gram = hollow_gram(d)
    if exhaustive is None:
        exhaustive = 2**r <= EXHAUSTIVE_LIMIT
    with np.errstate(divide="ignore"):
        if exhaustive:
            if 2**r > EXHAUSTIVE_LIMIT:
                raise InputError(f"2^{r} masks is too many to enumerate")
            log_terms = []
            for bits in itertools.product((0, 1), repeat=r):
                kept = np.flatnonzero(np.asarray(bits))
                count = kept.size
                log_w = count * math.log(delta) if count else 0.0
                if count < r:
                    if delta == 1.0:
                        continue  # zero-probability mask
                    log_w += (r - count) * math.log1p(-delta)
                norm = _masked_norm(gram, kept, m)
                log_terms.append(log_w + q * np.log(norm))
            log_moment = logsumexp(log_terms)
        else:
            log_norms = np.empty(trials)
            for t in range(trials):
                rng = stream(master_seed, _TRIAL_SALT, t)
                kept = np.flatnonzero(rng.random(r) < delta)
                log_norms[t] = np.log(_masked_norm(gram, kept, m))
            log_moment = logsumexp(q * log_norms) - math.log(trials)
    estimate = 0.0 if log_moment == -np.inf else float(np.exp(log_moment / q))
    bound = masked_gram_norm_bound(dictionary_metrics(d), delta, p)
    return estimate, bound
