"""Dense-matrix kernels: masked residuals, objective, gradients, spectral norm."""

import numpy as np
import scipy.sparse as sp


class ShapeError(ValueError):
    """Raised when matrix dimensions are incompatible."""


class ObservationMask:
    """Per-entry observation weights in (0, 1]; unlisted cells are missing (weight 0).

    A full mask (all weights 1) is stored as a sentinel without materializing
    entries.
    """

    def __init__(self, rows, cols, row_idx=None, col_idx=None, weights=None, _full=False):
        if rows < 1 or cols < 1:
            raise ShapeError(f"mask shape must be positive, got {rows}x{cols}")
        self.rows = int(rows)
        self.cols = int(cols)
        self._full = _full
        if _full:
            self.row_idx = self.col_idx = self.weights = None
            return
        self.row_idx = np.asarray(row_idx if row_idx is not None else [], dtype=np.intp)
        self.col_idx = np.asarray(col_idx if col_idx is not None else [], dtype=np.intp)
        self.weights = np.asarray(weights if weights is not None else [], dtype=np.float64)
        if not (self.row_idx.shape == self.col_idx.shape == self.weights.shape):
            raise ShapeError("mask index/weight arrays must have equal length")
        if self.row_idx.size:
            if self.row_idx.min() < 0 or self.row_idx.max() >= rows:
                raise ShapeError("mask row index out of range")
            if self.col_idx.min() < 0 or self.col_idx.max() >= cols:
                raise ShapeError("mask col index out of range")
            if np.any(self.weights <= 0) or np.any(self.weights > 1):
                raise ValueError("mask weights must lie in (0, 1]")
            flat = self.row_idx * cols + self.col_idx
            if np.unique(flat).size != flat.size:
                raise ValueError("duplicate (row, col) pair in mask")

    @classmethod
    def full(cls, rows, cols):
        return cls(rows, cols, _full=True)

    @classmethod
    def from_entries(cls, rows, cols, entries):
        """entries: iterable of (row, col, weight)."""
        entries = list(entries)
        if entries:
            ri, ci, w = zip(*entries)
        else:
            ri, ci, w = [], [], []
        return cls(rows, cols, ri, ci, w)

    @property
    def is_full(self):
        return self._full

    @property
    def nnz(self):
        return self.rows * self.cols if self._full else self.row_idx.size

    def to_csr(self):
        """Weights as a scipy CSR matrix (full mask is materialized; avoid on big inputs)."""
        if self._full:
            return sp.csr_matrix(np.ones((self.rows, self.cols)))
        return sp.csr_matrix(
            (self.weights, (self.row_idx, self.col_idx)), shape=(self.rows, self.cols)
        )

    def dense_weights(self):
        W = np.zeros((self.rows, self.cols))
        if self._full:
            W[:] = 1.0
        else:
            W[self.row_idx, self.col_idx] = self.weights
        return W


def _check_dims(X, W, H, M):
    m, n = X.shape
    if W.shape[0] != m or H.shape[1] != n or W.shape[1] != H.shape[0]:
        raise ShapeError(
            f"incompatible shapes X{X.shape}, W{W.shape}, H{H.shape}"
        )
    if M.rows != m or M.cols != n:
        raise ShapeError(f"mask shape {M.rows}x{M.cols} != data shape {m}x{n}")


def product_at(W, H, row_idx, col_idx):
    """(WH)(i, j) evaluated only at the listed cells."""
    return np.einsum("ij,ij->i", W[row_idx, :], H[:, col_idx].T)


def masked_residual(X, W, H, M):
    """M o (X - WH) at observed cells.

    Full mask: dense ndarray. Sparse mask: CSR matrix holding the weighted
    residual only at observed cells (the dense product WH is never formed).
    """
    _check_dims(X, W, H, M)
    if M.is_full:
        return X - W @ H
    vals = M.weights * (X[M.row_idx, M.col_idx] - product_at(W, H, M.row_idx, M.col_idx))
    return sp.csr_matrix((vals, (M.row_idx, M.col_idx)), shape=X.shape)


def objective(X, W, H, M):
    """0.5 * sum over observed cells of (M(i,j) * (X - WH)(i,j))^2.

    Accumulated in column-major order for run-to-run comparability.
    """
    R = masked_residual(X, W, H, M)
    if M.is_full:
        return 0.5 * float(np.sum(np.square(R), dtype=np.float64))
    # column-major: sort residual entries by (col, row)
    order = np.lexsort((M.row_idx, M.col_idx))
    vals = np.asarray(R[M.row_idx, M.col_idx]).ravel()[order]
    return 0.5 * float(np.sum(np.square(vals), dtype=np.float64))


def _weighted_residual(X, W, H, M):
    """(M o M) o (X - WH): the residual scaled so that gradients of the
    weighted objective are exact for non-binary weights (for binary masks this
    equals the plain masked residual)."""
    if M.is_full:
        return X - W @ H
    vals = M.weights**2 * (
        X[M.row_idx, M.col_idx] - product_at(W, H, M.row_idx, M.col_idx)
    )
    return sp.csr_matrix((vals, (M.row_idx, M.col_idx)), shape=X.shape)


def gradient_W(X, W, H, M):
    """Gradient of the masked objective w.r.t. W: -(MoMo(X-WH)) H^T."""
    _check_dims(X, W, H, M)
    R = _weighted_residual(X, W, H, M)
    return -np.asarray(R @ H.T)


def gradient_H(X, W, H, M):
    """Gradient of the masked objective w.r.t. H: -W^T (MoMo(X-WH))."""
    _check_dims(X, W, H, M)
    R = _weighted_residual(X, W, H, M)
    return -np.asarray(W.T @ R)


def spectral_norm(A, tol=1e-9, max_iters=1000):
    """Largest eigenvalue of a symmetric PSD matrix via power iteration.

    Deterministic all-ones start; converged when successive Rayleigh quotients
    agree to `tol` relative. Returns the last Rayleigh quotient if max_iters
    is exhausted.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"spectral_norm needs a square matrix, got {A.shape}")
    n = A.shape[0]
    v = np.ones(n) / np.sqrt(n)
    lam = float(v @ (A @ v))
    for it in range(max_iters):
        w = A @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            if it == 0:
                # all-ones start may sit in the null space; retry from a fixed
                # pseudo-random direction
                v = np.random.default_rng(0).standard_normal(n)
                v /= np.linalg.norm(v)
                continue
            return 0.0
        v = w / nw
        lam_new = float(v @ (A @ v))
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300):
            return lam_new
        lam = lam_new
    return lam
