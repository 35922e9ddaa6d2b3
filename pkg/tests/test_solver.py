import numpy as np
import pytest

from bssmf import (
    BoundsVector,
    FactorPair,
    ModelVariant,
    ObservationMask,
    SolverConfig,
    predict,
    solve,
    solve_centered,
)
from bssmf.matrixcore import objective
from bssmf.solver import ConfigError, initialize

from conftest import random_mask


def feasible(factors, variant, tol_sum=1e-10):
    W, H = factors.W, factors.H
    if variant.kind == "bssmf":
        ok_w = np.all(W >= variant.bounds.lower[:, None]) and np.all(
            W <= variant.bounds.upper[:, None]
        )
        ok_h = H.min() >= 0 and np.max(np.abs(H.sum(axis=0) - 1)) <= tol_sum
        return ok_w and ok_h
    if variant.kind == "nmf":
        return W.min() >= 0 and H.min() >= 0
    return True


def palm_reference(X, M, variant, config):
    """Independent plain projected-gradient BCD (no momentum machinery)."""
    from bssmf import matrixcore as mc

    factors = initialize(X, M, variant, config)
    W, H = factors.W, factors.H
    L_W = max(mc.spectral_norm(H @ H.T), 1e-12)
    L_H = max(mc.spectral_norm(W.T @ W), 1e-12)
    for _ in range(config.max_outer):
        for _ in range(config.max_inner_W):
            W = variant.project_W(W - mc.gradient_W(X, W, H, M) / L_W)
        L_H = max(mc.spectral_norm(W.T @ W), 1e-12)
        for _ in range(config.max_inner_H):
            H = variant.project_H(H - mc.gradient_H(X, W, H, M) / L_H)
        L_W = max(mc.spectral_norm(H @ H.T), 1e-12)
    return W, H


class TestInitialize:
    def test_deterministic(self):
        X = np.random.default_rng(0).uniform(size=(6, 5))
        var = ModelVariant.bssmf(BoundsVector.constant(6, 0, 1))
        cfg = SolverConfig(rank=2, seed=42)
        M = ObservationMask.full(6, 5)
        f1 = initialize(X, M, var, cfg)
        f2 = initialize(X, M, var, cfg)
        assert np.array_equal(f1.W, f2.W) and np.array_equal(f1.H, f2.H)

    def test_degenerate_bounds_constant(self):
        X = np.full((4, 3), 2.0)
        var = ModelVariant.bssmf(BoundsVector.constant(4, 2, 2))
        f = initialize(X, ObservationMask.full(4, 3), var, SolverConfig(rank=2, seed=0))
        assert np.all(f.W == 2.0)
        assert feasible(f, var)

    def test_rank_one_simplex_singleton(self):
        X = np.ones((3, 4))
        var = ModelVariant.bssmf(BoundsVector.constant(3, 0, 1))
        f = initialize(X, ObservationMask.full(3, 4), var, SolverConfig(rank=1, seed=3))
        assert np.array_equal(f.H, np.ones((1, 4)))

    def test_feasible_every_variant(self):
        rng = np.random.default_rng(1)
        X = rng.uniform(size=(5, 5))
        for var in (
            ModelVariant.bssmf(BoundsVector.constant(5, 0, 1)),
            ModelVariant.nmf(5),
            ModelVariant.mf(5),
        ):
            f = initialize(X, ObservationMask.full(5, 5), var, SolverConfig(rank=3, seed=0))
            assert feasible(f, var)


class TestSolve:
    def test_bcd_monotone_descent(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(size=(20, 15))
        var = ModelVariant.bssmf(BoundsVector.constant(20, 0, 1))
        cfg = SolverConfig(rank=3, max_outer=30, max_inner_W=3, max_inner_H=3,
                           rel_tol=0.0, extrapolate=False, seed=0)
        _, rep = solve(X, ObservationMask.full(20, 15), var, cfg)
        t = rep.objective_trace
        for a, b in zip(t, t[1:]):
            assert b <= a + 1e-12 * (1 + a)

    def test_feasibility_after_solve(self):
        rng = np.random.default_rng(3)
        X = rng.uniform(1, 5, size=(15, 12))
        var = ModelVariant.bssmf(BoundsVector.constant(15, 1, 5))
        M = random_mask(rng, 15, 12, density=0.6)
        cfg = SolverConfig(rank=4, max_outer=25, rel_tol=0.0, seed=1)
        f, _ = solve(X, M, var, cfg)
        assert feasible(f, var)

    def test_stationary_at_exact_factorization(self):
        # W interior, zero residual: one W step leaves W unchanged
        rng = np.random.default_rng(4)
        from bssmf.projections import project_simplex_columns
        W = rng.uniform(0.2, 0.8, size=(6, 2))
        H = project_simplex_columns(rng.uniform(size=(2, 5)))
        X = W @ H
        from bssmf import matrixcore as mc
        from bssmf.solver import _BlockState, update_W_block
        var = ModelVariant.bssmf(BoundsVector.constant(6, 0, 1))
        state = _BlockState(mc.spectral_norm(H @ H.T))
        M = ObservationMask.full(6, 5)
        W2, _ = update_W_block(X, W, H, M, var, state, W, 1, True)
        assert np.allclose(W2, W, atol=1e-12)

    def test_bcd_matches_palm_reference(self):
        rng = np.random.default_rng(5)
        X = rng.uniform(size=(10, 8))
        var = ModelVariant.bssmf(BoundsVector.constant(10, 0, 1))
        M = ObservationMask.full(10, 8)
        cfg = SolverConfig(rank=3, max_outer=5, max_inner_W=2, max_inner_H=2,
                           rel_tol=0.0, extrapolate=False, seed=7)
        f, _ = solve(X, M, var, cfg)
        W_ref, H_ref = palm_reference(X, M, var, cfg)
        assert np.allclose(f.W, W_ref, atol=1e-10)
        assert np.allclose(f.H, H_ref, atol=1e-10)

    def test_mf_reaches_svd_optimum(self):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((20, 15))
        var = ModelVariant.mf(20)
        cfg = SolverConfig(rank=3, max_outer=500, max_inner_W=10, max_inner_H=10,
                           rel_tol=0.0, seed=0)
        _, rep = solve(X, ObservationMask.full(20, 15), var, cfg)
        U, s, Vt = np.linalg.svd(X, full_matrices=False)
        svd_obj = 0.5 * np.sum(s[3:] ** 2)
        assert rep.objective_trace[-1] <= svd_obj * 1.05

    def test_rank_error(self):
        X = np.ones((3, 3))
        var = ModelVariant.mf(3)
        with pytest.raises(ConfigError):
            solve(X, ObservationMask.full(3, 3), var, SolverConfig(rank=4))

    def test_empty_mask_returns_init(self):
        X = np.ones((4, 4))
        var = ModelVariant.nmf(4)
        M = ObservationMask.from_entries(4, 4, [])
        f, rep = solve(X, M, var, SolverConfig(rank=2, seed=0))
        assert rep.objective_trace == [0.0]

    def test_trace_length(self):
        rng = np.random.default_rng(7)
        X = rng.uniform(size=(8, 8))
        var = ModelVariant.nmf(8)
        cfg = SolverConfig(rank=2, max_outer=12, rel_tol=0.0, seed=0)
        _, rep = solve(X, ObservationMask.full(8, 8), var, cfg)
        assert len(rep.objective_trace) == rep.outer_iterations + 1
        assert len(rep.lipschitz_trace) == rep.outer_iterations

    def test_determinism(self):
        rng = np.random.default_rng(8)
        X = rng.uniform(size=(10, 9))
        var = ModelVariant.bssmf(BoundsVector.constant(10, 0, 1))
        cfg = SolverConfig(rank=3, max_outer=10, rel_tol=0.0, seed=5)
        M = ObservationMask.full(10, 9)
        _, r1 = solve(X, M, var, cfg)
        _, r2 = solve(X, M, var, cfg)
        assert r1.objective_trace == r2.objective_trace

    def test_out_of_bounds_data_warns(self):
        X = np.full((3, 3), 10.0)
        var = ModelVariant.bssmf(BoundsVector.constant(3, 0, 3))
        with pytest.warns(UserWarning, match="outside"):
            solve(X, ObservationMask.full(3, 3), var,
                  SolverConfig(rank=1, max_outer=2, seed=0))


class TestCentering:
    def test_objective_equivalence_on_feasible_points(self):
        rng = np.random.default_rng(9)
        from bssmf.projections import project_simplex_columns
        M = ObservationMask.full(8, 6)
        for _ in range(20):
            X = rng.uniform(1, 5, size=(8, 6))
            W = rng.uniform(1, 5, size=(8, 3))
            H = project_simplex_columns(rng.uniform(size=(3, 6)))
            c = rng.uniform(-2, 2)
            f = objective(X, W, H, M)
            fc = objective(X - c, W - c, H, M)
            assert abs(f - fc) <= 1e-9 * (1 + f)

    def test_zero_centering_bit_identical(self):
        rng = np.random.default_rng(10)
        # integer-valued data adjusted to an exactly-zero mean
        X = rng.integers(-2, 3, size=(8, 6)).astype(float)
        X[0, 0] -= X.sum()
        var = ModelVariant.bssmf(BoundsVector.constant(8, -2, 2))
        cfg = SolverConfig(rank=2, max_outer=8, rel_tol=0.0, seed=3)
        M = ObservationMask.full(8, 6)
        f1, r1 = solve(X, M, var, cfg)
        f2, r2 = solve_centered(X, M, var, cfg)
        assert r1.objective_trace == r2.objective_trace
        assert np.array_equal(f1.W, f2.W) and np.array_equal(f1.H, f2.H)

    def test_constant_matrix_rank_one(self):
        X = np.full((5, 4), 3.0)
        var = ModelVariant.bssmf(BoundsVector.constant(5, 0, 5))
        cfg = SolverConfig(rank=1, max_outer=5, rel_tol=0.0, seed=0)
        f, rep = solve_centered(X, ObservationMask.full(5, 4), var, cfg)
        assert np.allclose(f.W, 3.0, atol=1e-12)
        assert np.array_equal(f.H, np.ones((1, 4)))
        assert rep.objective_trace[-1] == pytest.approx(0.0, abs=1e-20)

    def test_rejects_other_variants(self):
        X = np.ones((3, 3))
        with pytest.raises(ConfigError):
            solve_centered(X, ObservationMask.full(3, 3), ModelVariant.nmf(3),
                           SolverConfig(rank=1))

    def test_trace_in_original_coordinates(self):
        rng = np.random.default_rng(11)
        X = rng.uniform(1, 5, size=(10, 8))
        var = ModelVariant.bssmf(BoundsVector.constant(10, 1, 5))
        cfg = SolverConfig(rank=2, max_outer=10, rel_tol=0.0, seed=1)
        M = ObservationMask.full(10, 8)
        f, rep = solve_centered(X, M, var, cfg)
        assert rep.objective_trace[-1] == pytest.approx(
            objective(X, f.W, f.H, M), rel=1e-12
        )


class TestExtrapolationBenefit:
    def test_majority_of_seeds(self):
        rng = np.random.default_rng(12)
        wins = 0
        for seed in range(10):
            W0 = rng.uniform(0, 1, size=(50, 5))
            from bssmf.projections import project_simplex_columns
            H0 = project_simplex_columns(rng.uniform(size=(5, 40)))
            X = W0 @ H0 + 0.01 * rng.standard_normal((50, 40))
            var = ModelVariant.bssmf(BoundsVector.constant(50, 0, 1))
            M = ObservationMask.full(50, 40)
            base = dict(rank=5, max_outer=30, max_inner_W=3, max_inner_H=3,
                        rel_tol=0.0, seed=seed)
            _, r_ex = solve(X, M, var, SolverConfig(extrapolate=True, **base))
            _, r_bcd = solve(X, M, var, SolverConfig(extrapolate=False, **base))
            if r_ex.objective_trace[-1] <= r_bcd.objective_trace[-1]:
                wins += 1
        assert wins >= 8


class TestPredict:
    def test_vertex_selection(self):
        W = np.array([[1.0, 2.0], [3.0, 4.0]])
        H = np.array([[0.0], [1.0]])
        assert predict(FactorPair(W, H), [(0, 0), (1, 0)]) == [2.0, 4.0]

    def test_within_bounds(self):
        rng = np.random.default_rng(13)
        from bssmf.projections import project_simplex_columns
        W = rng.uniform(1, 5, size=(6, 3))
        H = project_simplex_columns(rng.uniform(size=(3, 7)))
        b = BoundsVector.constant(6, 1, 5)
        vals = predict(FactorPair(W, H), [(i, j) for i in range(6) for j in range(7)],
                       bounds=b)
        assert all(1.0 <= v <= 5.0 for v in vals)

    def test_out_of_range_index(self):
        W = np.ones((2, 1))
        H = np.ones((1, 2))
        with pytest.raises(IndexError):
            predict(FactorPair(W, H), [(2, 0)])

    def test_exact_factorization_recovers_data(self, example6x6=None):
        rng = np.random.default_rng(14)
        W = rng.uniform(size=(4, 2))
        H = rng.uniform(size=(2, 5))
        X = W @ H
        vals = predict(FactorPair(W, H), [(1, 2), (3, 4)])
        assert vals[0] == pytest.approx(X[1, 2]) and vals[1] == pytest.approx(X[3, 4])
