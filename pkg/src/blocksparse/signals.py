"""Block-sparse signal sampling and noisy observation.

The statistical model: the block support is a uniformly random k-subset of
the r blocks, nonzero entries are (by default) i.i.d. standard Gaussian, and
observations are ``y = Phi beta + sigma * g`` with ``g`` standard Gaussian.
A per-block sampler hook allows correlated entries within a block, which
keeps block "directions" independent across blocks while dropping the
independent-signs assumption.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .metrics import Dictionary


@dataclass(frozen=True)
class BlockSparseSignal:
    """Coefficient vector with exact block sparsity.

    ``beta`` has length ``p = num_blocks * block_size``; blocks outside
    ``support`` (0-based block indices, sorted) are exactly zero.
    """

    beta: np.ndarray
    block_size: int
    support: tuple[int, ...]
    seed: int = 0

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        m = self.block_size
        if beta.ndim != 1 or m < 1 or beta.size % m != 0:
            raise InputError("signal length must be a multiple of the block size")
        r = beta.size // m
        support = tuple(sorted(int(i) for i in self.support))
        if len(set(support)) != len(support):
            raise InputError("support contains repeated block indices")
        if support and (support[0] < 0 or support[-1] >= r):
            raise InputError(f"support index out of range [0, {r})")
        blocks = beta.reshape(r, m)
        norms = np.linalg.norm(blocks, axis=1)
        on = np.zeros(r, dtype=bool)
        on[list(support)] = True
        if np.any(norms[~on] != 0.0):
            raise InputError("blocks outside the support must be exactly zero")
        if np.any(norms[on] == 0.0):
            raise InputError("supported blocks must be nonzero")
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "support", support)

    @property
    def p(self) -> int:
        return self.beta.size

    @property
    def num_blocks(self) -> int:
        return self.beta.size // self.block_size

    @property
    def k(self) -> int:
        return len(self.support)

    def block_norms(self) -> np.ndarray:
        return np.linalg.norm(self.beta.reshape(self.num_blocks, self.block_size), axis=1)


@dataclass(frozen=True)
class Observation:
    """Observation vector with its noise level and seed metadata."""

    y: np.ndarray
    sigma: float
    noise_seed: int = 0

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if self.sigma < 0:
            raise InputError("noise level must be nonnegative")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)


def sample_block_support(r: int, k: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Uniformly random k-subset of ``{0, ..., r-1}`` via partial Fisher-Yates.

    Returned sorted ascending.  ``k = 0`` gives the empty tuple, ``k = r``
    the full set.
    """
    if r < 0 or k < 0:
        raise InputError("r and k must be nonnegative")
    if k > r:
        raise InputError(f"cannot choose {k} blocks out of {r}")
    pool = np.arange(r)
    for i in range(k):
        j = i + int(rng.integers(r - i))
        pool[i], pool[j] = pool[j], pool[i]
    return tuple(sorted(int(b) for b in pool[:k]))


def sample_signal(
    support,
    num_blocks: int,
    m: int,
    rng: np.random.Generator,
    block_sampler=None,
    seed: int = 0,
) -> BlockSparseSignal:
    """Fill the supported blocks of a length ``num_blocks * m`` vector.

    By default each nonzero block gets i.i.d. standard Gaussian entries
    (symmetric signs, independent directions).  ``block_sampler(rng, m)``
    may be supplied to draw a whole block at once, e.g. with correlated
    entries.
    """
    support = tuple(sorted(int(i) for i in support))
    if support and (support[0] < 0 or support[-1] >= num_blocks):
        raise InputError(f"support index out of range [0, {num_blocks})")
    beta = np.zeros(num_blocks * m)
    for i in support:
        while True:
            block = (
                rng.standard_normal(m)
                if block_sampler is None
                else np.asarray(block_sampler(rng, m), dtype=float)
            )
            if block.shape != (m,):
                raise InputError("block sampler must return a vector of length m")
            if np.linalg.norm(block) > 0:
                break
        beta[i * m : (i + 1) * m] = block
    return BlockSparseSignal(beta, m, support, seed=seed)


def observe(
    d: Dictionary,
    s: BlockSparseSignal,
    sigma: float,
    rng: np.random.Generator | None = None,
    noise_seed: int = 0,
) -> Observation:
    """Observe ``y = Phi beta + sigma * g`` with standard Gaussian ``g``.

    ``sigma = 0`` returns the exact product (no generator draw).
    """
    if s.p != d.p or s.block_size != d.block_size:
        raise InputError(
            f"signal (p={s.p}, m={s.block_size}) incompatible with "
            f"dictionary (p={d.p}, m={d.block_size})"
        )
    if sigma < 0:
        raise InputError("noise level must be nonnegative")
    y = d.entries @ s.beta
    if sigma > 0:
        if rng is None:
            raise InputError("an rng is required when sigma > 0")
        y = y + sigma * rng.standard_normal(d.n)
    return Observation(y, sigma, noise_seed=noise_seed)


def calibrate_noise(d: Dictionary, s: BlockSparseSignal, target_snr: float = 0.84) -> float:
    """Noise level giving ``||beta||_2^2 / (n sigma^2) = target_snr`` exactly."""
    if target_snr <= 0:
        raise InputError("target signal-to-noise ratio must be positive")
    energy = float(np.dot(s.beta, s.beta))
    if energy == 0.0:
        raise InputError("cannot calibrate noise against a zero signal")
    return float(np.sqrt(energy / (d.n * target_snr)))


def normalized(s: BlockSparseSignal) -> BlockSparseSignal:
    """Copy of the signal scaled to unit Euclidean norm."""
    norm = float(np.linalg.norm(s.beta))
    if norm == 0.0:
        raise InputError("cannot normalize a zero signal")
    return BlockSparseSignal(s.beta / norm, s.block_size, s.support, seed=s.seed)
