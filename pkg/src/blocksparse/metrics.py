"""Dictionary measures: coherences, block coherences, spectral norm, and the
block incoherence condition (BIC).

A dictionary here is a dense ``n x p`` real matrix with unit-norm columns,
partitioned into ``r`` consecutive blocks of ``m`` columns each.  The three
scalar measures computed by this module are

* coherence ``mu``: largest absolute inner product between distinct columns,
* intra-block coherence ``mu_I``: largest spectral norm of ``B_i^T B_i - I``
  over blocks ``B_i`` (deviation of a block from orthonormality),
* inter-block coherence ``mu_B``: largest spectral norm of ``B_i^T B_j`` over
  distinct block pairs.

All three are exactly computable in polynomial time, which is the point of
the BIC: ``mu_I <= c1`` and ``mu_B <= c2 / log(p)`` together with a sparsity
budget ``k <= c0 * r / (||Phi||_2^2 * log(p))`` characterise dictionaries
whose random block subdictionaries are well conditioned.  Natural logarithms
are used throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

#: Tolerance on unit column norms accepted without renormalization.
UNIT_NORM_TOL = 1e-10

_POWER_ITER_MAX = 10_000


@dataclass(frozen=True)
class Dictionary:
    """Dense dictionary with an attached block structure.

    ``entries`` is the ``n x p`` matrix, ``block_size`` the number of columns
    per block.  Columns are unit norm; use :meth:`from_entries` to build a
    dictionary from arbitrary (nonzero) columns, which normalizes them and
    records whether normalization was needed.
    """

    entries: np.ndarray
    block_size: int
    renormalized: bool = field(default=False, compare=False)

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2:
            raise InputError("dictionary entries must be a 2-d matrix")
        n, p = entries.shape
        m = self.block_size
        if n < 1 or p < 1:
            raise InputError(f"degenerate dictionary shape {n}x{p}")
        if m < 1:
            raise InputError(f"block size must be >= 1, got {m}")
        if p % m != 0:
            raise InputError(f"column count {p} not divisible by block size {m}")
        if not np.all(np.isfinite(entries)):
            raise InputError("dictionary entries must be finite")
        norms = np.linalg.norm(entries, axis=0)
        if np.max(np.abs(norms - 1.0)) > UNIT_NORM_TOL:
            raise InputError(
                "columns are not unit norm (max deviation "
                f"{np.max(np.abs(norms - 1.0)):.3e}); use Dictionary.from_entries"
            )
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_entries(cls, entries, block_size: int) -> "Dictionary":
        """Build a dictionary, normalizing columns to unit norm if needed."""
        entries = np.array(entries, dtype=float)
        if entries.ndim != 2:
            raise InputError("dictionary entries must be a 2-d matrix")
        if not np.all(np.isfinite(entries)):
            raise InputError("dictionary entries must be finite")
        norms = np.linalg.norm(entries, axis=0)
        if np.any(norms == 0.0):
            raise InputError("cannot normalize a zero column")
        renorm = bool(np.max(np.abs(norms - 1.0)) > UNIT_NORM_TOL)
        if renorm:
            entries = entries / norms
        return cls(entries, block_size, renormalized=renorm)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def p(self) -> int:
        return self.entries.shape[1]

    @property
    def num_blocks(self) -> int:
        return self.p // self.block_size

    def block(self, i: int) -> np.ndarray:
        """Columns of block ``i`` (0-based), as an ``n x m`` view."""
        r = self.num_blocks
        if not 0 <= i < r:
            raise InputError(f"block index {i} out of range [0, {r})")
        m = self.block_size
        return self.entries[:, i * m : (i + 1) * m]

    def block_columns(self, blocks) -> np.ndarray:
        """Flat column indices covered by the given block indices."""
        m = self.block_size
        blocks = np.asarray(sorted(blocks), dtype=int)
        if blocks.size and (blocks[0] < 0 or blocks[-1] >= self.num_blocks):
            raise InputError("block index out of range")
        return (blocks[:, None] * m + np.arange(m)[None, :]).reshape(-1)


@dataclass(frozen=True)
class DictionaryMetrics:
    """Scalar measures of a dictionary."""

    coherence: float
    intra_block: float
    inter_block: float
    spectral_norm: float


@dataclass(frozen=True)
class BicVerdict:
    """Outcome of the block incoherence condition with its constants.

    ``satisfied`` is true iff ``mu_I <= c1`` and ``mu_B <= c2 / log(p)``.
    ``sparsity_budget_k`` is ``floor(c0 * r / (||Phi||_2^2 * log(p)))``, the
    number of blocks for which random block subdictionaries are expected to
    stay well conditioned.
    """

    satisfied: bool
    c0: float
    c1: float
    c2: float
    sparsity_budget_k: int


def spectral_norm(matrix, tol: float = 1e-10, max_iters: int = _POWER_ITER_MAX) -> float:
    """Largest singular value of a dense matrix.

    Power iteration on the smaller of ``M M^T`` / ``M^T M`` with a fixed,
    platform-independent start vector (a seeded counter-based Gaussian draw;
    an all-ones start is systematically orthogonal to the top eigenspace of
    some structured Grams) and relative tolerance ``tol`` on the Rayleigh
    quotient.  Convergence additionally requires a small eigen-residual;
    otherwise a full SVD is used as the fallback.
    """
    if tol <= 0:
        raise InputError(f"tolerance must be positive, got {tol}")
    A = np.asarray(matrix, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.size == 0:
        raise InputError("spectral norm of an empty matrix is undefined")
    if not np.all(np.isfinite(A)):
        raise InputError("matrix entries must be finite")
    if not A.any():
        return 0.0
    gram = A @ A.T if A.shape[0] <= A.shape[1] else A.T @ A
    dim = gram.shape[0]
    v = np.random.Generator(np.random.Philox(0x5150)).standard_normal(dim)
    v /= np.linalg.norm(v)
    lam_prev = 0.0
    for _ in range(max_iters):
        w = gram @ v
        lam = float(v @ w)
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            break  # start vector fell in the nullspace; use the SVD
        if lam > 0 and abs(lam - lam_prev) <= tol * lam:
            residual = float(np.linalg.norm(w - lam * v))
            if residual <= math.sqrt(tol) * lam:
                return math.sqrt(lam)
        v = w / norm_w
        lam_prev = lam
    return float(np.linalg.svd(A, compute_uv=False)[0])


def _sym_norm(matrix: np.ndarray) -> float:
    """Spectral norm of a symmetric matrix via exact eigenvalues."""
    if matrix.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(matrix))))


def _block_pair_norms(gram: np.ndarray, m: int, r: int):
    """Spectral norms of all off-diagonal m x m blocks of a p x p Gram."""
    for i in range(r):
        for j in range(i + 1, r):
            block = gram[i * m : (i + 1) * m, j * m : (j + 1) * m]
            yield float(np.linalg.svd(block, compute_uv=False)[0])


def coherence(d: Dictionary) -> float:
    """Largest absolute inner product between distinct columns."""
    if d.p < 2:
        raise InputError("coherence requires at least two columns")
    gram = d.entries.T @ d.entries
    np.fill_diagonal(gram, 0.0)
    return float(np.max(np.abs(gram)))


def intra_block_coherence(d: Dictionary) -> float:
    """Largest spectral norm of ``B_i^T B_i - I`` over blocks.

    Exactly zero when every block has orthonormal columns; for ``m = 1`` the
    unit-norm constraint makes it identically zero.
    """
    m = d.block_size
    if m == 1:
        return 0.0
    worst = 0.0
    for i in range(d.num_blocks):
        blk = d.block(i)
        hollow = blk.T @ blk - np.eye(m)
        worst = max(worst, _sym_norm(hollow))
    return worst


def inter_block_coherence(d: Dictionary) -> float:
    """Largest spectral norm of ``B_i^T B_j`` over distinct block pairs."""
    r = d.num_blocks
    if r < 2:
        raise InputError("inter-block coherence undefined for a single block")
    if d.block_size == 1:
        return coherence(d)
    gram = d.entries.T @ d.entries
    return max(_block_pair_norms(gram, d.block_size, r))


def dictionary_metrics(d: Dictionary, tol: float = 1e-10) -> DictionaryMetrics:
    """All scalar measures of a dictionary in one pass over its Gram."""
    if d.p < 2:
        raise InputError("metrics require at least two columns")
    m, r = d.block_size, d.num_blocks
    gram = d.entries.T @ d.entries
    hollow = gram.copy()
    np.fill_diagonal(hollow, 0.0)
    mu = float(np.max(np.abs(hollow)))
    if m == 1:
        mu_i = 0.0
        mu_b = mu
    else:
        mu_i = max(
            _sym_norm(gram[i * m : (i + 1) * m, i * m : (i + 1) * m] - np.eye(m))
            for i in range(r)
        )
        mu_b = max(_block_pair_norms(gram, m, r)) if r >= 2 else 0.0
    return DictionaryMetrics(
        coherence=mu,
        intra_block=mu_i,
        inter_block=mu_b,
        spectral_norm=spectral_norm(d.entries, tol=tol),
    )


def check_bic(
    metrics: DictionaryMetrics,
    p: int,
    r: int,
    c0: float = 1.0,
    c1: float = 1.0,
    c2: float = 1.0,
) -> BicVerdict:
    """Evaluate the block incoherence condition and the sparsity budget.

    The constants are configuration, not canon: no particular numeric values
    are privileged, so every report carries the constants it was checked
    against.  Defaults are ``c0 = c1 = c2 = 1``.
    """
    if p < 2:
        raise InputError("need p >= 2 so that log(p) > 0")
    if r < 1:
        raise InputError("need at least one block")
    if c0 <= 0 or c1 <= 0 or c2 <= 0:
        raise InputError("BIC constants must be positive")
    log_p = math.log(p)
    satisfied = metrics.intra_block <= c1 and metrics.inter_block <= c2 / log_p
    budget = math.floor(c0 * r / (metrics.spectral_norm**2 * log_p))
    return BicVerdict(
        satisfied=satisfied,
        c0=c0,
        c1=c1,
        c2=c2,
        sparsity_budget_k=max(0, int(budget)),
    )


def block_norm_b1(matrix, block_cols: int) -> float:
    """Max spectral norm over column blocks: ``max_i ||M_i||_2``."""
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2:
        raise InputError("expected a 2-d matrix")
    if block_cols < 1 or M.shape[1] % block_cols != 0:
        raise InputError(
            f"column count {M.shape[1]} not divisible by block size {block_cols}"
        )
    r = M.shape[1] // block_cols
    return max(
        float(np.linalg.svd(M[:, i * block_cols : (i + 1) * block_cols], compute_uv=False)[0])
        for i in range(r)
    )


def block_norm_b2(matrix, block_rows: int, block_cols: int) -> float:
    """Max spectral norm over all ``block_rows x block_cols`` subblocks."""
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2:
        raise InputError("expected a 2-d matrix")
    if block_rows < 1 or M.shape[0] % block_rows != 0:
        raise InputError(
            f"row count {M.shape[0]} not divisible by block size {block_rows}"
        )
    if block_cols < 1 or M.shape[1] % block_cols != 0:
        raise InputError(
            f"column count {M.shape[1]} not divisible by block size {block_cols}"
        )
    rr = M.shape[0] // block_rows
    rc = M.shape[1] // block_cols
    worst = 0.0
    for i in range(rr):
        for j in range(rc):
            sub = M[i * block_rows : (i + 1) * block_rows, j * block_cols : (j + 1) * block_cols]
            worst = max(worst, float(np.linalg.svd(sub, compute_uv=False)[0]))
    return worst


def masked_gram_norm_bound(metrics: DictionaryMetrics, delta: float, p) -> float:
    """Closed-form upper bound on the q-th moment (q = 4 log p) of the
    spectral norm of a randomly block-masked hollow Gram matrix.

    With blocks kept independently with probability ``delta``, the bound is

        48 mu_B log(p) + 17 sqrt(delta log(p) (1 + mu_I)) ||Phi||_2
        + 2 delta ||Phi||_2^2 + 3 mu_I.

    ``p`` may be any real > 1 (only ``log p`` enters).
    """
    if not 0.0 <= delta <= 1.0:
        raise InputError(f"delta must lie in [0, 1], got {delta}")
    if p <= 1:
        raise InputError(f"need p > 1 so that log(p) > 0, got {p}")
    log_p = math.log(p)
    s = metrics.spectral_norm
    return (
        48.0 * metrics.inter_block * log_p
        + 17.0 * math.sqrt(delta * log_p * (1.0 + metrics.intra_block)) * s
        + 2.0 * delta * s**2
        + 3.0 * metrics.intra_block
    )


def metrics_report(
    d: Dictionary,
    c0: float = 1.0,
    c1: float = 1.0,
    c2: float = 1.0,
) -> dict:
    """JSON-ready metrics report with the BIC verdict."""
    m = dictionary_metrics(d)
    verdict = check_bic(m, d.p, d.num_blocks, c0=c0, c1=c1, c2=c2)
    report = {
        "coherence": m.coherence,
        "mu_I": m.intra_block,
        "mu_B": m.inter_block,
        "spectral_norm": m.spectral_norm,
        "bic_satisfied": verdict.satisfied,
        "sparsity_budget_k": verdict.sparsity_budget_k,
        "c0": verdict.c0,
        "c1": verdict.c1,
        "c2": verdict.c2,
    }
    if d.renormalized:
        report["warning"] = "input columns were not unit norm and were renormalized"
    return report
