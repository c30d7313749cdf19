"""Sufficient-condition checkers for exact recovery and penalized regression.

The exact-recovery certificate builds the minimum-norm dual vector ``h``
solving ``Phi_S^T h = sign(beta_S)`` (blockwise unit directions) and passes
when every off-support block satisfies ``||Phi_j^T h||_2 < 1``; a passing
certificate guarantees that mixed-norm basis pursuit recovers ``beta``
uniquely from noiseless data.  A failing certificate proves nothing (the
condition is sufficient, not necessary), so reports phrase failure as
"certificate not established".

The regression-side conditions come in a scalar ("lasso") and a block
("group") mode:

* invertibility: ``||(Phi_S^T Phi_S)^{-1}||_2 <= 2``,
* orthogonality: ``||Phi^T z||_inf <= sqrt(2) lambda`` or its block variant
  ``||Phi^T z||_{2,inf} <= sqrt(2m) lambda``,
* complementary size: ``Z0 <= 1/4`` and ``Z1 <= (3/2 - sqrt(2)) lambda``
  (times ``sqrt(m)`` in group mode), where ``Z0``/``Z1`` probe the
  off-support columns through ``Phi_{S^C}^T Phi_S (Phi_S^T Phi_S)^{-1}``.

When all three hold in group mode, the group-lasso regression error obeys
the ``2 (2 + sqrt(2))^2 lambda^2 m k sigma^2`` bound checked by the
experiment harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .metrics import Dictionary
from .signals import BlockSparseSignal

_MODES = ("lasso", "group")

#: Thresholds fixed by the analysis of the penalized programs.
Z0_THRESHOLD = 0.25
Z1_COEFF = 1.5 - math.sqrt(2.0)


@dataclass(frozen=True)
class CertificateReport:
    kind: str  # exact_recovery | lasso | group_lasso
    passed: bool
    details: dict


def _block_directions(beta: np.ndarray, support, m: int) -> np.ndarray:
    """Stacked unit directions ``beta_i / ||beta_i||`` over the support."""
    pieces = []
    for i in support:
        block = beta[i * m : (i + 1) * m]
        norm = float(np.linalg.norm(block))
        if norm == 0.0:
            raise InputError(
                f"block {i} is zero inside the declared support; its direction "
                "is undefined"
            )
        pieces.append(block / norm)
    return np.concatenate(pieces) if pieces else np.zeros(0)


def _pinv_from_svd(matrix: np.ndarray, cutoff_ratio: float = 1e-12):
    """SVD factors with small singular values dropped; None when empty."""
    u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    if s.size == 0:
        return u, s, vt, 0
    keep = s > cutoff_ratio * s[0]
    rank = int(np.sum(keep))
    return u[:, :rank], s[:rank], vt[:rank], rank


def _support_arrays(d: Dictionary, support):
    support = tuple(sorted(int(i) for i in support))
    if not support:
        raise InputError("support must be nonempty")
    if support[0] < 0 or support[-1] >= d.num_blocks:
        raise InputError(f"support index out of range [0, {d.num_blocks})")
    cols = d.block_columns(support)
    comp_blocks = tuple(i for i in range(d.num_blocks) if i not in set(support))
    return support, d.entries[:, cols], comp_blocks


def exact_recovery_certificate(
    d: Dictionary, support, beta
) -> CertificateReport:
    """Dual certificate for unique noiseless recovery by mixed-norm pursuit.

    Computes ``h`` as the minimum-norm solution of ``Phi_S^T h = s`` with
    ``s`` the stacked block directions of ``beta`` on ``support``, reports
    the equation residual (must be at most 1e-8) and
    ``Z0 = max_{j not in S} ||Phi_j^T h||_2``; passes iff both the residual
    is met and ``Z0 < 1``.
    """
    if isinstance(beta, BlockSparseSignal):  # convenience, not required
        beta = beta.beta
    beta = np.asarray(beta, dtype=float)
    m = d.block_size
    support, sub, comp_blocks = _support_arrays(d, support)
    signs = _block_directions(beta, support, m)
    u, s, vt, rank = _pinv_from_svd(sub)
    details: dict = {"support_size": len(support)}
    if rank < sub.shape[1]:
        details["reason"] = "invertibility"
        details["rank"] = rank
        return CertificateReport("exact_recovery", False, details)
    # h = (Phi_S^+)^T s, the minimum-norm solution of Phi_S^T h = s
    h = u @ ((vt @ signs) / s)
    residual = float(np.linalg.norm(sub.T @ h - signs))
    z0 = 0.0
    for j in comp_blocks:
        z0 = max(z0, float(np.linalg.norm(d.block(j).T @ h)))
    details.update(
        {
            "Z0": z0,
            "sign_equation_residual": residual,
            "min_singular_value": float(s[-1]),
        }
    )
    passed = residual <= 1e-8 and z0 < 1.0
    if not passed and "reason" not in details:
        details["reason"] = "certificate not established"
    return CertificateReport("exact_recovery", passed, details)


def invertibility_condition(d: Dictionary, support) -> tuple[bool, float]:
    """``||(Phi_S^T Phi_S)^{-1}||_2 = 1 / sigma_min(Phi_S)^2``, pass iff <= 2."""
    _, sub, _ = _support_arrays(d, support)
    s = np.linalg.svd(sub, compute_uv=False)
    smin = float(s[-1]) if s.size else 0.0
    if smin <= 1e-14 * float(s[0] if s.size else 1.0):
        return False, float("inf")
    norm_inv = 1.0 / smin**2
    return norm_inv <= 2.0, norm_inv


def orthogonality_condition(
    d: Dictionary, z, lam: float, mode: str
) -> tuple[bool, float]:
    """Check the correlation of the noise with the dictionary columns.

    Lasso mode: ``||Phi^T z||_inf <= sqrt(2) lambda``.  Group mode:
    ``||Phi^T z||_{2,inf} <= sqrt(2 m) lambda``.  The group statistic never
    exceeds ``sqrt(m)`` times the scalar one.
    """
    if mode not in _MODES:
        raise InputError(f"mode must be one of {_MODES}, got {mode!r}")
    z = np.asarray(z, dtype=float)
    if z.shape != (d.n,):
        raise InputError(f"noise vector length {z.size} does not match n = {d.n}")
    corr = d.entries.T @ z
    if mode == "lasso":
        statistic = float(np.max(np.abs(corr))) if corr.size else 0.0
        threshold = math.sqrt(2.0) * lam
    else:
        m = d.block_size
        statistic = float(np.max(np.linalg.norm(corr.reshape(-1, m), axis=1)))
        threshold = math.sqrt(2.0 * m) * lam
    return statistic <= threshold, statistic


def complementary_size_condition(
    d: Dictionary,
    support,
    beta,
    z,
    lam: float,
    sigma: float = 1.0,
    mode: str = "group",
) -> tuple[bool, float, float]:
    """Size of the off-support correlations induced by signs and noise.

    ``Z0`` applies ``Phi_{S^C}^T Phi_S (Phi_S^T Phi_S)^{-1}`` to the sign
    pattern (entrywise signs and the max-entry norm in lasso mode, block
    directions and the max-block norm in group mode) and must not exceed
    1/4.  ``Z1`` applies the same operator to ``Phi_S^T z`` and must stay
    below ``(3/2 - sqrt(2)) lambda sigma`` (times ``sqrt(m)`` in group
    mode); the noise threshold scales with ``sigma`` so that the check is
    invariant under rescaling ``(z, sigma)`` jointly.

    Requires the invertibility condition; raises when the support Gram is
    singular.
    """
    if mode not in _MODES:
        raise InputError(f"mode must be one of {_MODES}, got {mode!r}")
    beta = np.asarray(beta, dtype=float)
    z = np.asarray(z, dtype=float)
    m = d.block_size
    support, sub, comp_blocks = _support_arrays(d, support)
    u, s, vt, rank = _pinv_from_svd(sub)
    if rank < sub.shape[1]:
        raise InputError(
            "support Gram matrix is singular; the invertibility condition fails"
        )
    if mode == "lasso":
        signs = np.sign(beta[d.block_columns(support)])
    else:
        signs = _block_directions(beta, support, m)
    # (Phi_S^T Phi_S)^{-1} applied through the SVD of Phi_S
    gram_inv_signs = vt.T @ ((vt @ signs) / s**2)
    gram_inv_noise = vt.T @ ((vt @ (sub.T @ z)) / s**2)
    comp_cols = d.block_columns(comp_blocks) if comp_blocks else np.zeros(0, int)
    comp = d.entries[:, comp_cols]
    v0 = comp.T @ (sub @ gram_inv_signs)
    v1 = comp.T @ (sub @ gram_inv_noise)
    if mode == "lasso":
        z0 = float(np.max(np.abs(v0))) if v0.size else 0.0
        z1 = float(np.max(np.abs(v1))) if v1.size else 0.0
        z1_threshold = Z1_COEFF * lam * sigma
    else:
        z0 = float(np.max(np.linalg.norm(v0.reshape(-1, m), axis=1))) if v0.size else 0.0
        z1 = float(np.max(np.linalg.norm(v1.reshape(-1, m), axis=1))) if v1.size else 0.0
        z1_threshold = Z1_COEFF * lam * sigma * math.sqrt(m)
    passed = z0 <= Z0_THRESHOLD and z1 <= z1_threshold
    return passed, z0, z1


def group_lasso_optimality_check(
    d: Dictionary, y, beta_hat, lam: float, sigma: float, m: int
) -> tuple[bool, float]:
    """Stationarity bound every group-lasso minimizer must satisfy:
    ``||Phi^T (y - Phi b)||_{2,inf} <= 2 lambda sigma sqrt(m) + 1e-6``."""
    y = np.asarray(y, dtype=float)
    beta_hat = np.asarray(beta_hat, dtype=float)
    if y.shape != (d.n,) or beta_hat.shape != (d.p,):
        raise InputError("dimension mismatch between dictionary, y, and estimate")
    if d.p % m != 0:
        raise InputError(f"p={d.p} not divisible by block size {m}")
    corr = d.entries.T @ (y - d.entries @ beta_hat)
    statistic = float(np.max(np.linalg.norm(corr.reshape(-1, m), axis=1)))
    return statistic <= 2.0 * lam * sigma * math.sqrt(m) + 1e-6, statistic


def regression_bundle(
    d: Dictionary,
    support,
    beta,
    z,
    lam: float,
    sigma: float = 1.0,
    mode: str = "group",
) -> CertificateReport:
    """All three regression conditions evaluated together.

    ``passed`` requires invertibility, orthogonality, and complementary size
    to hold simultaneously in the requested mode.
    """
    inv_ok, norm_inv = invertibility_condition(d, support)
    orth_ok, orth_stat = orthogonality_condition(d, np.asarray(z) / max(sigma, 1e-300), lam, mode)
    details = {
        "invertibility_passed": inv_ok,
        "norm_inv": norm_inv,
        "orthogonality_passed": orth_ok,
        "orthogonality_statistic": orth_stat,
    }
    if math.isinf(norm_inv):
        details["reason"] = "invertibility"
        kind = "group_lasso" if mode == "group" else "lasso"
        return CertificateReport(kind, False, details)
    csc_ok, z0, z1 = complementary_size_condition(
        d, support, beta, z, lam, sigma=sigma, mode=mode
    )
    details.update({"csc_passed": csc_ok, "Z0": z0, "Z1": z1})
    kind = "group_lasso" if mode == "group" else "lasso"
    return CertificateReport(kind, inv_ok and orth_ok and csc_ok, details)
