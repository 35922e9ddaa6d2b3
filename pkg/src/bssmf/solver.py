"""Inertial block-coordinate solver for X ~ WH with bounded W and stochastic H.

Alternates extrapolated projected-gradient passes on W and H with Lipschitz
step sizes (1/||HH^T||_2 and 1/||W^T W||_2), Nesterov-style momentum counters
shared across outer iterations, and a safeguard cap on the extrapolation
weight. Setting extrapolate=False recovers plain block coordinate descent
(PALM), which is monotone.
"""

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import matrixcore as mc
from .projections import BoundsVector, project_box, project_simplex_columns


class ConfigError(ValueError):
    """Invalid solver configuration."""


BSSMF = "bssmf"
NMF = "nmf"
MF = "mf"


@dataclass
class ModelVariant:
    """Constraint set selector: bounded W + stochastic H, nonnegative, or free."""

    kind: str
    bounds: BoundsVector
    simplex_on_H: bool

    @classmethod
    def bssmf(cls, bounds):
        if not bounds.is_finite:
            raise ConfigError("bssmf variant requires finite bounds")
        return cls(BSSMF, bounds, True)

    @classmethod
    def nmf(cls, m):
        return cls(NMF, BoundsVector.nonnegative(m), False)

    @classmethod
    def mf(cls, m):
        return cls(MF, BoundsVector.unbounded(m), False)

    def project_W(self, W):
        if self.kind == MF:
            return W
        return project_box(W, self.bounds)

    def project_H(self, H):
        if self.simplex_on_H:
            return project_simplex_columns(H)
        if self.kind == NMF:
            return np.maximum(H, 0.0)
        return H


@dataclass
class SolverConfig:
    rank: int
    max_outer: int = 500
    max_inner_W: int = 20
    max_inner_H: int = 20
    rel_tol: float = 1e-7
    extrapolate: bool = True
    center: bool = False
    seed: int = 0
    record_trace: bool = True

    def validate(self, m, n):
        if not (1 <= self.rank <= min(m, n)):
            raise ConfigError(f"rank must be in [1, {min(m, n)}], got {self.rank}")
        if self.max_outer < 1 or self.max_inner_W < 1 or self.max_inner_H < 1:
            raise ConfigError("iteration caps must be >= 1")
        if self.rel_tol < 0:
            raise ConfigError("rel_tol must be >= 0")


@dataclass
class FactorPair:
    W: np.ndarray
    H: np.ndarray


@dataclass
class SolveReport:
    objective_trace: list = field(default_factory=list)
    outer_iterations: int = 0
    lipschitz_trace: list = field(default_factory=list)
    wall_time: float = 0.0
    stop_reason: str = "max_iters"


def initialize(X, M, variant, config):
    """Random feasible starting point: W(i,:) ~ U[a_i, b_i] (U[0,1] on
    unbounded rows), H ~ U[0,1] column-projected onto the variant's set."""
    m, n = X.shape
    config.validate(m, n)
    r = config.rank
    rng = np.random.default_rng(config.seed)
    lo, hi = variant.bounds.lower, variant.bounds.upper
    lo_f = np.where(np.isfinite(lo), lo, 0.0)
    hi_f = np.where(np.isfinite(hi), hi, np.where(np.isfinite(lo), lo, 0.0) + 1.0)
    W = lo_f[:, None] + (hi_f - lo_f)[:, None] * rng.uniform(size=(m, r))
    # degenerate rows (a_i == b_i) come out constant by construction
    H = variant.project_H(rng.uniform(size=(r, n)))
    return FactorPair(W, H)


def _lipschitz_floor(X, M):
    m, n = X.shape
    if M.is_full:
        sq = float(np.sum(np.square(X)))
    else:
        sq = float(np.sum(np.square(X[M.row_idx, M.col_idx])))
    return 1e-12 * max(1.0, sq / (m * n))


class _BlockState:
    """Momentum counter + Lipschitz pair for one factor block."""

    def __init__(self, L):
        self.alpha = 1.0
        self.L = L
        self.L_prev = L

    def beta(self, extrapolate):
        a0 = self.alpha
        self.alpha = (1.0 + np.sqrt(1.0 + 4.0 * a0 * a0)) / 2.0
        if not extrapolate:
            return 0.0
        return min((a0 - 1.0) / self.alpha, 0.9999 * np.sqrt(self.L_prev / self.L))


def update_W_block(X, W, H, M, variant, state, W_old, n_inner, extrapolate):
    for _ in range(n_inner):
        beta = state.beta(extrapolate)
        W_bar = W + beta * (W - W_old) if beta != 0.0 else W
        W_old = W
        W = variant.project_W(W_bar - mc.gradient_W(X, W_bar, H, M) / state.L)
        state.L_prev = state.L
    return W, W_old


def update_H_block(X, W, H, M, variant, state, H_old, n_inner, extrapolate):
    for _ in range(n_inner):
        beta = state.beta(extrapolate)
        H_bar = H + beta * (H - H_old) if beta != 0.0 else H
        H_old = H
        H = variant.project_H(H_bar - mc.gradient_H(X, W, H_bar, M) / state.L)
        state.L_prev = state.L
    return H, H_old


def solve(X, M, variant, config, objective_fn=None, on_outer=None):
    """Run the block-coordinate solver; returns (FactorPair, SolveReport).

    objective_fn(W, H) overrides the recorded objective (used by the centered
    solve to report objectives in original coordinates). on_outer(k, W, H) is
    invoked after each outer iteration (diagnostics only).
    """
    X = np.asarray(X, dtype=np.float64)
    m, n = X.shape
    config.validate(m, n)
    if variant.kind == BSSMF and not M.is_full:
        obs = X[M.row_idx, M.col_idx]
        lo = variant.bounds.lower[M.row_idx]
        hi = variant.bounds.upper[M.row_idx]
        if np.any(obs < lo) or np.any(obs > hi):
            warnings.warn("observed entries outside [a, b]; proceeding anyway")
    elif variant.kind == BSSMF:
        if np.any(X < variant.bounds.lower[:, None]) or np.any(
            X > variant.bounds.upper[:, None]
        ):
            warnings.warn("observed entries outside [a, b]; proceeding anyway")

    factors = initialize(X, M, variant, config)
    if objective_fn is None:
        objective_fn = lambda W, H: mc.objective(X, W, H, M)

    report = SolveReport()
    if M.nnz == 0:
        report.objective_trace = [0.0]
        report.stop_reason = "tol_reached"
        return factors, report

    t0 = time.perf_counter()
    W, H = factors.W, factors.H
    W_old, H_old = W, H
    floor = _lipschitz_floor(X, M)
    sw = _BlockState(max(mc.spectral_norm(H @ H.T), floor))
    sh = _BlockState(max(mc.spectral_norm(W.T @ W), floor))

    trace = [objective_fn(W, H)]
    ltrace = []
    stop = "max_iters"
    outer = 0
    for outer in range(1, config.max_outer + 1):
        W, W_old = update_W_block(
            X, W, H, M, variant, sw, W_old, config.max_inner_W, config.extrapolate
        )
        sh.L = max(mc.spectral_norm(W.T @ W), floor)
        H, H_old = update_H_block(
            X, W, H, M, variant, sh, H_old, config.max_inner_H, config.extrapolate
        )
        sw.L = max(mc.spectral_norm(H @ H.T), floor)
        trace.append(objective_fn(W, H))
        ltrace.append((sw.L, sh.L))
        if on_outer is not None:
            on_outer(outer, W, H)
        if config.rel_tol > 0 and len(trace) > 10:
            f_then, f_now = trace[-11], trace[-1]
            if f_then - f_now < config.rel_tol * max(f_then, 1e-300):
                stop = "tol_reached"
                break

    report.objective_trace = trace if config.record_trace else [trace[0], trace[-1]]
    report.outer_iterations = outer
    report.lipschitz_trace = ltrace if config.record_trace else []
    report.wall_time = time.perf_counter() - t0
    report.stop_reason = stop
    return FactorPair(W, H), report


def solve_centered(X, M, variant, config):
    """Solve on X - cJ (c = mean of observed entries) with shifted bounds,
    then shift W back. Reported objectives are in the original coordinates."""
    if variant.kind != BSSMF:
        raise ConfigError("centering requires the bounded simplex variant")
    X = np.asarray(X, dtype=np.float64)
    if M.is_full:
        c = float(np.mean(X))
    else:
        if M.nnz == 0:
            raise ValueError("cannot center with an empty mask")
        c = float(np.mean(X[M.row_idx, M.col_idx]))
    Xc = X - c
    shifted = ModelVariant.bssmf(
        BoundsVector(variant.bounds.lower - c, variant.bounds.upper - c)
    )
    obj_orig = lambda W, H: mc.objective(X, W + c, H, M)
    factors, report = solve(Xc, M, shifted, config, objective_fn=obj_orig)
    return FactorPair(factors.W + c, factors.H), report


def predict_cells(W, H, rows, cols, bounds=None):
    """Vectorized W(i,:) . H(:,j) over index arrays; bound-checked and clamped
    row-wise when bounds are given."""
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    m, n = W.shape[0], H.shape[1]
    if rows.size and (rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n):
        raise IndexError(f"cell index out of range for {m}x{n}")
    vals = mc.product_at(W, H, rows, cols)
    if bounds is not None:
        lo = bounds.lower[rows]
        hi = bounds.upper[rows]
        finite = np.isfinite(lo) & np.isfinite(hi)
        slack = 1e-9 * np.maximum(1.0, np.abs(hi[finite]))
        assert np.all(vals[finite] >= lo[finite] - slack) and np.all(
            vals[finite] <= hi[finite] + slack
        ), "prediction escapes per-row bounds"
        vals = np.clip(vals, lo, hi)
    return vals


def predict(factors, cells, bounds=None):
    """W(i,:) . H(:,j) per (i, j) cell; clamped-and-checked against per-row
    bounds when given (BSSMF predictions are convex combinations of W rows)."""
    W, H = factors.W, factors.H
    m, n = W.shape[0], H.shape[1]
    out = []
    for i, j in cells:
        if not (0 <= i < m and 0 <= j < n):
            raise IndexError(f"cell ({i}, {j}) out of range for {m}x{n}")
        v = float(W[i, :] @ H[:, j])
        if bounds is not None and np.isfinite(bounds.lower[i]):
            slack = 1e-9 * max(1.0, abs(bounds.upper[i]))
            assert bounds.lower[i] - slack <= v <= bounds.upper[i] + slack, (
                f"prediction {v} escapes [{bounds.lower[i]}, {bounds.upper[i]}]"
            )
            v = min(max(v, bounds.lower[i]), bounds.upper[i])
        out.append(v)
    return out
