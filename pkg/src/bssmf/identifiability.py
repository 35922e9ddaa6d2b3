"""Uniqueness diagnostics: scatteredness checks, column matching scores,
gauge-transform witnesses, and synthetic ground-truth generation."""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .matrixcore import ShapeError


@dataclass
class SSCRowResult:
    zero_count: int
    zero_set_rank: int
    passes: bool


@dataclass
class SSCReport:
    matrix_role: str
    per_row: list
    overall_pass: bool
    tol_zero: float


def ssc_necessary_check(H, tol_zero=1e-9, matrix_role="H"):
    """Necessary condition for sufficient scatteredness of an r x n matrix:
    every row needs >= r-1 (numerical) zeros whose columns have rank r-1."""
    H = np.asarray(H, dtype=np.float64)
    r, n = H.shape
    if r < 2:
        raise ValueError("scatteredness check needs rank r >= 2")
    scale = np.max(np.abs(H))
    thresh = tol_zero * (scale if scale > 0 else 1.0)
    per_row = []
    for k in range(r):
        zero_cols = np.flatnonzero(np.abs(H[k, :]) <= thresh)
        if zero_cols.size == 0:
            per_row.append(SSCRowResult(0, 0, False))
            continue
        sub = H[:, zero_cols]
        sv = np.linalg.svd(sub, compute_uv=False)
        rank = int(np.sum(sv > 1e-9 * sv[0])) if sv.size and sv[0] > 0 else 0
        per_row.append(
            SSCRowResult(int(zero_cols.size), rank, zero_cols.size >= r - 1 and rank == r - 1)
        )
    return SSCReport(matrix_role, per_row, all(p.passes for p in per_row), tol_zero)


def stack_for_theorem3(W, bounds):
    """Vertical stack [W - a e^T; b e^T - W] (2m x r); its transpose is the
    matrix whose scatteredness certifies uniqueness of the bounded model."""
    W = np.asarray(W, dtype=np.float64)
    if W.shape[0] != len(bounds):
        raise ShapeError("W row count does not match bounds")
    if not bounds.is_finite:
        raise ValueError("stacking requires finite bounds")
    a, b = bounds.lower[:, None], bounds.upper[:, None]
    if np.any(W < a - 1e-12) or np.any(W > b + 1e-12):
        raise ValueError("W has columns outside [a, b]")
    return np.vstack([W - a, b - W])


def unstack_theorem3(S, bounds):
    m = len(bounds)
    return S[:m, :] + bounds.lower[:, None]


def mrsa(u, v):
    """Mean-removed spectral angle in [0, 100]: (100/pi) * arccos of the
    cosine between mean-centered vectors."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ShapeError("mrsa needs equal-length vectors")
    uc = u - u.mean()
    vc = v - v.mean()
    nu, nv = np.linalg.norm(uc), np.linalg.norm(vc)
    if nu == 0 or nv == 0:
        raise ValueError("mrsa undefined for constant vectors")
    cos = float(np.clip(uc @ vc / (nu * nv), -1.0, 1.0))
    return 100.0 / np.pi * np.arccos(cos)


@dataclass
class MatchReport:
    permutation: list
    per_column_mrsa: list
    mean_mrsa: float


def match_and_score(W_true, W_est):
    """Optimal column matching (exact assignment) under the MRSA cost."""
    W_true = np.asarray(W_true, dtype=np.float64)
    W_est = np.asarray(W_est, dtype=np.float64)
    if W_true.shape != W_est.shape:
        raise ShapeError(f"shape mismatch {W_true.shape} vs {W_est.shape}")
    r = W_true.shape[1]
    cost = np.empty((r, r))
    for i in range(r):
        for j in range(r):
            cost[i, j] = mrsa(W_true[:, i], W_est[:, j])
    rows, cols = linear_sum_assignment(cost)
    perm = [int(cols[np.flatnonzero(rows == i)[0]]) for i in range(r)]
    per_col = [float(cost[i, perm[i]]) for i in range(r)]
    return MatchReport(perm, per_col, float(np.mean(per_col)))


def scaling_ambiguity_check(H, D):
    """Whether e^T (D H) = e^T for a row scaling D of a full-row-rank
    column-stochastic H; holds iff D is the identity."""
    H = np.asarray(H, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    r = H.shape[0]
    if np.linalg.matrix_rank(H) < r:
        raise ValueError("H must have full row rank")
    d = np.diag(D) if D.ndim == 2 else D
    row_sums = d @ H
    return bool(np.allclose(row_sums, np.ones(H.shape[1]), atol=1e-9))


def ssmf_gauge_transform(W, H, alpha):
    """The explicit non-uniqueness witness for simplex-structured models:
    W(alpha) = W((1+alpha)I - (alpha/r)J),
    H(alpha) = H/(1+alpha) + alpha/((1+alpha) r) J;
    the product WH is preserved and H(alpha) stays column stochastic."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    W = np.asarray(W, dtype=np.float64)
    H = np.asarray(H, dtype=np.float64)
    r = W.shape[1]
    J = np.ones((r, r))
    W_a = W @ ((1.0 + alpha) * np.eye(r) - (alpha / r) * J)
    H_a = H / (1.0 + alpha) + (alpha / ((1.0 + alpha) * r)) * np.ones_like(H)
    return W_a, H_a


@dataclass
class SyntheticSpec:
    m: int = 100
    n: int = 100
    r: int = 10
    h_zero_fraction: float = 0.30
    p01: float = 0.0
    seed: int = 0


def generate_synthetic(spec):
    """Ground-truth instance: H uniform with a fraction of entries zeroed and
    columns normalized to the simplex (regenerated until the scatteredness
    necessary condition holds), W uniform in [0,1] with floor(p01*m*r) entries
    pinned to {0, 1}; X = W H exactly."""
    rng = np.random.default_rng(spec.seed)
    H = None
    for _ in range(50):
        cand = rng.uniform(size=(spec.r, spec.n))
        if spec.h_zero_fraction > 0:
            zero = rng.uniform(size=cand.shape) < spec.h_zero_fraction
            cand[zero] = 0.0
        sums = cand.sum(axis=0)
        for j in np.flatnonzero(sums == 0):
            cand[:, j] = rng.uniform(size=spec.r)
            sums[j] = cand[:, j].sum()
        cand /= sums
        if ssc_necessary_check(cand).overall_pass:
            H = cand
            break
    if H is None:
        raise RuntimeError(
            f"no scattered H found in 50 attempts (seed {spec.seed}); try another seed"
        )
    W = rng.uniform(size=(spec.m, spec.r))
    n_pin = int(np.floor(spec.p01 * spec.m * spec.r))
    if n_pin:
        flat = rng.choice(spec.m * spec.r, size=n_pin, replace=False)
        vals = rng.integers(0, 2, size=n_pin).astype(np.float64)
        W.ravel()[flat] = vals
    return W, H, W @ H


def ssc_grid_experiment(cells, tol_zero=1e-9):
    """Pass-ratio table: cells maps a grid key (tuple) to a list of factor
    matrices; returns [(key..., ratio)] rows for CSV emission."""
    rows = []
    for key, mats in sorted(cells.items()):
        if not mats:
            rows.append((*key, 0.0))
            continue
        passed = sum(1 for A in mats if ssc_necessary_check(A, tol_zero).overall_pass)
        rows.append((*key, passed / len(mats)))
    return rows


def brute_force_assignment(cost):
    """All-permutations minimum of an r x r assignment (test oracle, r <= 8)."""
    cost = np.asarray(cost)
    r = cost.shape[0]
    if r > 8:
        raise ValueError("brute force limited to r <= 8")
    best = np.inf
    best_perm = None
    for perm in itertools.permutations(range(r)):
        c = sum(cost[i, perm[i]] for i in range(r))
        if c < best:
            best, best_perm = c, perm
    return best, list(best_perm)
