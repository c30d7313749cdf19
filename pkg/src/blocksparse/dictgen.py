"""Random dictionary construction.

Three families are provided: i.i.d. Gaussian matrices with columns scaled to
unit norm, variants whose top singular value is inflated by an integer
multiplier ``tau`` (then re-normalized), and Kronecker products ``P (x) Q``
of a unit-norm matrix with an orthonormal-column matrix.

Randomness contract: every generator is a pure function of its seed.  Seeds
are 64-bit integers mixed with splitmix64 and fed to the counter-based
Philox 4x64 bit generator, so streams are reproducible bit-for-bit across
platforms.  Gaussian draws for a matrix are consumed in column-major order
(column 0 uses the first n draws of the stream, column 1 the next n, and so
on).
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .errors import InputError
from .metrics import Dictionary

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(state: int) -> int:
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix64(*parts: int) -> int:
    """Fold integers into one 64-bit seed.

    Each part is reduced mod 2^64 and absorbed with a splitmix64 round, so
    distinct tuples give statistically independent seeds and the mapping is
    identical on every platform.
    """
    acc = _splitmix64(len(parts) & _MASK64)
    for part in parts:
        acc = _splitmix64((acc ^ (int(part) & _MASK64)) & _MASK64)
    return acc


def stream(*parts: int) -> np.random.Generator:
    """Deterministic Philox-backed generator keyed by ``mix64(*parts)``."""
    return np.random.Generator(np.random.Philox(mix64(*parts)))


@dataclass(frozen=True)
class DictGenSpec:
    """Parameters describing one generated dictionary."""

    n: int
    p: int
    m: int
    seed: int
    multiplier: int = 1
    kind: str = "random_unit_norm"  # random_unit_norm | spectral_multiplied | kronecker

    def __post_init__(self):
        if self.p % self.m != 0:
            raise InputError(f"p={self.p} not divisible by m={self.m}")
        if self.multiplier < 1:
            raise InputError(f"multiplier must be >= 1, got {self.multiplier}")

    def to_json(self) -> dict:
        return asdict(self)


def random_unit_norm(n: int, p: int, m: int, seed: int) -> Dictionary:
    """Gaussian dictionary with columns scaled to exactly unit norm."""
    if n < 1 or p < m or m < 1:
        raise InputError(f"degenerate dimensions n={n}, p={p}, m={m}")
    if p % m != 0:
        raise InputError(f"p={p} not divisible by m={m}")
    rng = stream(seed)
    # (p, n) fill transposed: the stream is consumed one column at a time.
    entries = rng.standard_normal((p, n)).T
    return Dictionary.from_entries(entries, m)


def apply_spectral_multiplier(d: Dictionary, tau: int) -> Dictionary:
    """Inflate the top singular value by ``tau`` and re-normalize columns.

    The SVD edit multiplies only the largest singular value, which inflates
    the spectral norm by almost exactly ``tau`` once columns are scaled back
    to unit norm (the rank-one perturbation barely changes column norms when
    p is large).  Block structure is preserved; ``tau = 1`` returns a
    dictionary equal to the input up to re-normalization noise.
    """
    if tau < 1:
        raise InputError(f"multiplier must be a positive integer, got {tau}")
    if tau == 1:
        return d
    u, s, vt = np.linalg.svd(d.entries, full_matrices=False)
    s = s.copy()
    s[0] *= tau
    inflated = (u * s) @ vt
    return Dictionary.from_entries(inflated, d.block_size)


def generate(spec: DictGenSpec) -> Dictionary:
    """Build the dictionary described by a spec (kronecker excluded)."""
    if spec.kind == "random_unit_norm":
        return random_unit_norm(spec.n, spec.p, spec.m, spec.seed)
    if spec.kind == "spectral_multiplied":
        base = random_unit_norm(spec.n, spec.p, spec.m, spec.seed)
        return apply_spectral_multiplier(base, spec.multiplier)
    raise InputError(f"unknown generator kind {spec.kind!r}")


def kronecker_dictionary(P, Q, tol: float = 1e-8) -> Dictionary:
    """Kronecker dictionary ``P (x) Q`` with orthonormal-column ``Q``.

    Block ``i`` of the result is ``P_i (x) Q``, so the block size equals the
    number of columns of ``Q`` and the number of blocks equals the number of
    columns of ``P``.  For such dictionaries the intra-block coherence is
    exactly zero and the inter-block coherence equals the coherence of ``P``.
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.ndim != 2 or Q.ndim != 2:
        raise InputError("P and Q must be 2-d matrices")
    gram_defect = np.max(np.abs(Q.T @ Q - np.eye(Q.shape[1])))
    if gram_defect > tol:
        raise InputError(
            f"Q must have orthonormal columns: max |Q^T Q - I| = {gram_defect:.3e} "
            f"exceeds tolerance {tol:.1e}"
        )
    col_norms = np.linalg.norm(P, axis=0)
    if np.max(np.abs(col_norms - 1.0)) > tol:
        raise InputError(
            f"P must have unit-norm columns: max deviation "
            f"{np.max(np.abs(col_norms - 1.0)):.3e} exceeds tolerance {tol:.1e}"
        )
    return Dictionary.from_entries(np.kron(P, Q), Q.shape[1])
