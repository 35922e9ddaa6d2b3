"""Column-wise Euclidean projections onto a hyperrectangle and the simplex."""

import itertools

import numpy as np

from .matrixcore import ShapeError


class BoundsVector:
    """Per-row interval [lower, upper]; +-inf entries encode unbounded rows."""

    def __init__(self, lower, upper):
        self.lower = np.asarray(lower, dtype=np.float64).ravel()
        self.upper = np.asarray(upper, dtype=np.float64).ravel()
        if self.lower.shape != self.upper.shape:
            raise ShapeError("lower/upper bound lengths differ")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise ValueError("bounds must not contain NaN")
        if np.any(self.lower > self.upper):
            i = int(np.argmax(self.lower > self.upper))
            raise ValueError(f"lower({i}) > upper({i})")

    def __len__(self):
        return self.lower.size

    @property
    def is_finite(self):
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def degenerate_rows(self):
        """Indices i with lower(i) == upper(i)."""
        return np.flatnonzero(self.lower == self.upper)

    @classmethod
    def constant(cls, m, lo, hi):
        return cls(np.full(m, float(lo)), np.full(m, float(hi)))

    @classmethod
    def nonnegative(cls, m):
        return cls(np.zeros(m), np.full(m, np.inf))

    @classmethod
    def unbounded(cls, m):
        return cls(np.full(m, -np.inf), np.full(m, np.inf))


def project_box(V, bounds):
    """Clamp each column of V (m x r) into [lower, upper] row-wise."""
    V = np.asarray(V, dtype=np.float64)
    if V.shape[0] != len(bounds):
        raise ShapeError(f"V has {V.shape[0]} rows, bounds have {len(bounds)}")
    return np.clip(V, bounds.lower[:, None], bounds.upper[:, None])


def project_simplex_columns(V):
    """Euclidean projection of each column of V (r x n) onto the unit simplex.

    Sort-based thresholding: sort descending, pick the largest k with
    v_(k) - (sum of top k - 1)/k > 0, subtract that threshold, clip at 0.
    """
    V = np.asarray(V, dtype=np.float64)
    if V.ndim == 1:
        return project_simplex_columns(V[:, None])[:, 0]
    r, n = V.shape
    if r == 1:
        return np.ones((1, n))
    S = np.sort(V, axis=0)[::-1, :]
    csum = np.cumsum(S, axis=0)
    ks = np.arange(1, r + 1)[:, None]
    cond = S - (csum - 1.0) / ks > 0
    # largest k satisfying the strict inequality (k=1 always does)
    k = r - np.argmax(cond[::-1, :], axis=0)
    tau = (csum[k - 1, np.arange(n)] - 1.0) / k
    return np.maximum(V - tau[None, :], 0.0)


def simplex_projection_oracle(v):
    """Brute-force simplex projection by enumerating all nonempty support sets.

    Test oracle only; refuses r > 12.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    r = v.size
    if r > 12:
        raise ValueError(f"oracle limited to r <= 12, got {r}")
    best = None
    best_dist = np.inf
    for size in range(1, r + 1):
        for support in itertools.combinations(range(r), size):
            idx = list(support)
            # minimize ||x - v||^2 over x supported on idx with sum(x) = 1:
            # x_i = v_i - (sum(v_idx) - 1)/|idx|
            shift = (v[idx].sum() - 1.0) / size
            x_sub = v[idx] - shift
            if np.any(x_sub < -1e-12):
                continue
            x = np.zeros(r)
            x[idx] = np.maximum(x_sub, 0.0)
            d = float(np.sum((x - v) ** 2))
            if d < best_dist:
                best_dist = d
                best = x
    return best
