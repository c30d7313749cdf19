"""Independent oracles used to validate the library implementations.

Every oracle here deliberately avoids the code paths it is meant to check:
closed-form eigendecompositions, exhaustive enumeration, coordinate descent,
and dense pseudoinverse formulas.
"""

import itertools
import math

import numpy as np


def top_singular_value_2x2(M) -> float:
    """Largest singular value of a 2x2 matrix via the characteristic
    polynomial of M^T M: lambda^2 - tr * lambda + det = 0."""
    M = np.asarray(M, dtype=float)
    G = M.T @ M
    tr = G[0, 0] + G[1, 1]
    det = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
    disc = math.sqrt(max(tr * tr - 4.0 * det, 0.0))
    return math.sqrt((tr + disc) / 2.0)


def svd_spectral_norm(M) -> float:
    return float(np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)[0])


def per_block_column_norm(M, m) -> float:
    """Definition-level column-block norm via one SVD per block."""
    M = np.asarray(M, dtype=float)
    r = M.shape[1] // m
    return max(svd_spectral_norm(M[:, i * m : (i + 1) * m]) for i in range(r))


def per_subblock_norm(M, mr, mc) -> float:
    """Definition-level subblock norm via one SVD per (i, j) subblock."""
    M = np.asarray(M, dtype=float)
    out = 0.0
    for i in range(M.shape[0] // mr):
        for j in range(M.shape[1] // mc):
            out = max(out, svd_spectral_norm(M[i * mr : (i + 1) * mr, j * mc : (j + 1) * mc]))
    return out


def naive_hollow_gram(entries) -> np.ndarray:
    """Triple-loop Phi^T Phi - I, no BLAS."""
    A = np.asarray(entries, dtype=float)
    n, p = A.shape
    G = np.empty((p, p))
    for i in range(p):
        for j in range(p):
            acc = 0.0
            for t in range(n):
                acc += A[t, i] * A[t, j]
            G[i, j] = acc - (1.0 if i == j else 0.0)
    return G


def masked_gram_bound_reference(mu_b, mu_i, spec, delta, p) -> float:
    """Second, independently coded evaluation of the moment-bound formula."""
    lp = math.log(p)
    terms = [
        48.0 * mu_b * lp,
        17.0 * spec * math.sqrt((1.0 + mu_i) * delta * lp),
        2.0 * spec * spec * delta,
        3.0 * mu_i,
    ]
    return math.fsum(terms)


def prox_grid_oracle(v, theta, grid_points=241):
    """Grid minimizer of 0.5||x - v||^2 + theta ||x||_2 over a 2-d box."""
    v = np.asarray(v, dtype=float)
    radius = float(np.linalg.norm(v)) + theta + 1.0
    axis = np.linspace(-radius, radius, grid_points)
    best = None
    best_val = np.inf
    for a in axis:
        for b in axis:
            x = np.array([a, b])
            val = 0.5 * np.sum((x - v) ** 2) + theta * np.linalg.norm(x)
            if val < best_val:
                best_val = val
                best = x
    return best, best_val


def lasso_objective(A, y, beta, penalty) -> float:
    res = y - A @ beta
    return 0.5 * float(res @ res) + penalty * float(np.sum(np.abs(beta)))


def coordinate_descent_lasso(A, y, penalty, max_sweeps=1_000_000, stall_tol=1e-16):
    """Cyclic coordinate descent on the lasso with unit-norm columns.

    One sweep updates every coordinate once; runs until the sweep budget or
    until no coordinate moves beyond double precision.  Compiled with numba
    when available so a 10^6-sweep budget stays tractable.
    """
    A = np.ascontiguousarray(np.asarray(A, dtype=float))
    y = np.ascontiguousarray(np.asarray(y, dtype=float))
    col_sq = np.sum(A * A, axis=0)
    return _cd_kernel(A, y, col_sq, float(penalty), int(max_sweeps), float(stall_tol))


def _cd_kernel_py(A, y, col_sq, penalty, max_sweeps, stall_tol):
    n, p = A.shape
    beta = np.zeros(p)
    resid = y.copy()
    for _ in range(max_sweeps):
        max_move = 0.0
        for j in range(p):
            old = beta[j]
            rho = 0.0
            for t in range(n):
                rho += A[t, j] * resid[t]
            rho += col_sq[j] * old
            if rho > penalty:
                new = (rho - penalty) / col_sq[j]
            elif rho < -penalty:
                new = (rho + penalty) / col_sq[j]
            else:
                new = 0.0
            if new != old:
                delta = new - old
                for t in range(n):
                    resid[t] -= A[t, j] * delta
                beta[j] = new
                if abs(delta) > max_move:
                    max_move = abs(delta)
        if max_move <= stall_tol:
            break
    return beta


try:
    from numba import njit

    _cd_kernel = njit(cache=True)(_cd_kernel_py)
except ImportError:  # pragma: no cover
    _cd_kernel = _cd_kernel_py


def l1_min_objective_by_vertex_enumeration(A, y, tol=1e-9):
    """Optimal value of min ||b||_1 s.t. A b = y via basic feasible solutions.

    Splitting b into positive and negative parts gives the standard-form
    program min 1^T x s.t. [A, -A] x = y, x >= 0, whose optimum sits at a
    vertex: a basis of n columns with a nonnegative solution.  Enumerate all
    bases (problem sizes here keep C(2p, n) small).
    """
    A = np.asarray(A, dtype=float)
    n, p = A.shape
    W = np.hstack([A, -A])
    best = np.inf
    for basis in itertools.combinations(range(2 * p), n):
        B = W[:, basis]
        try:
            x = np.linalg.solve(B, y)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(x)) or np.min(x) < -tol:
            continue
        best = min(best, float(np.sum(np.maximum(x, 0.0))))
    return best


def pinv_complementary_statistics(entries, support_cols, comp_cols, sign_vec, z):
    """Z0/Z1 ingredients via the explicit dense pseudoinverse."""
    A = np.asarray(entries, dtype=float)
    sub = A[:, support_cols]
    comp = A[:, comp_cols]
    gram_inv = np.linalg.pinv(sub.T @ sub)
    v0 = comp.T @ sub @ gram_inv @ sign_vec
    v1 = comp.T @ sub @ gram_inv @ sub.T @ z
    return v0, v1


def exhaustive_subset_extrema(entries, m, k):
    """Singular extrema over every k-subset of blocks (ascending order)."""
    A = np.asarray(entries, dtype=float)
    r = A.shape[1] // m
    out = []
    for subset in itertools.combinations(range(r), k):
        cols = [b * m + j for b in subset for j in range(m)]
        s = np.linalg.svd(A[:, cols], compute_uv=False)
        out.append((subset, float(s[-1]), float(s[0])))
    return out
