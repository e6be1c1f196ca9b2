import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from oracles import central_gradient, lowrank_cost_loop, random_instance, rel_err, smoothed_lp_loop

from grslra.manifold import SubspaceBasis, horizontal_project
from grslra.objective import (
    LagrangianParams,
    SmoothingParams,
    coordinate_cost,
    coordinate_cost_grad,
    smoothed_lp,
    smoothed_lp_grad,
    subspace_cost,
    subspace_cost_grad,
)
from grslra.structure import HankelStructure, ObservationMask, hankel_build

SEEDS = range(10)


class TestParams:
    @pytest.mark.parametrize("mu,p", [(0.0, 0.5), (-1.0, 0.5), (0.1, 0.0), (0.1, 1.0)])
    def test_invalid(self, mu, p):
        with pytest.raises(ValueError):
            SmoothingParams(mu, p)

    def test_mu_zero_rejected_before_evaluation(self):
        with pytest.raises(ValueError, match="mu"):
            smoothed_lp(np.array([[1.0]]), SmoothingParams(0.0, 0.5))

    def test_lagrangian(self):
        with pytest.raises(ValueError):
            LagrangianParams(np.zeros((2, 2)), 0.0)
        with pytest.raises(ValueError):
            LagrangianParams(np.array([[np.inf]]), 1.0)


class TestSmoothedLp:
    def test_zero_closed_form(self):
        assert smoothed_lp(np.zeros((2, 2)), SmoothingParams(0.01, 0.5)) == pytest.approx(1.264911, abs=1e-6)
        assert smoothed_lp(np.zeros((2, 2)), SmoothingParams(0.01, 0.5)) == pytest.approx(4 * 0.01**0.25, rel=1e-15)

    def test_scalar_oracle(self):
        X = np.array([[3.0, 0.0], [0.0, 4.0]])
        assert smoothed_lp(X, SmoothingParams(0.005, 0.5)) == pytest.approx(smoothed_lp_loop(X, 0.005, 0.5), rel=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(
        arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=st.floats(-100, 100)),
        st.floats(1e-4, 1.0),
        st.floats(0.05, 0.95),
    )
    def test_floor_and_symmetry(self, X, mu, p):
        sp = SmoothingParams(mu, p)
        h = smoothed_lp(X, sp)
        floor = X.size * mu ** (p / 2)
        assert h >= floor * (1 - 1e-12)
        # x**2 below an ulp of mu rounds away, so strictness needs a resolvable entry
        if np.any(X * X > 1e-12 * mu):
            assert h > floor
        assert smoothed_lp(-X, sp) == h
        perm = np.random.default_rng(0).permutation(X.size)
        assert smoothed_lp(X.ravel()[perm].reshape(X.shape), sp) == pytest.approx(h, rel=1e-12)

    def test_grad_zero(self):
        assert not smoothed_lp_grad(np.zeros((3, 3)), SmoothingParams(0.005)).any()

    def test_grad_sign(self, rng):
        X = rng.standard_normal((4, 4))
        np.testing.assert_array_equal(np.sign(smoothed_lp_grad(X, SmoothingParams(0.005))), np.sign(X))

    def test_grad_finite_difference(self, rng):
        X = rng.standard_normal((5, 5))
        sp = SmoothingParams(0.005, 0.5)
        fd = central_gradient(lambda Z: smoothed_lp(Z, sp), X)
        assert rel_err(fd, smoothed_lp_grad(X, sp)) <= 1e-6


class TestSubspaceCost:
    def test_exact_fit_floor(self):
        U = SubspaceBasis(np.eye(4)[:, :1])
        L = hankel_build(np.array([1.0, 0, 0, 0, 0]), 4)
        lp = LagrangianParams(np.zeros((4, 2)), 1e-12)
        sp = SmoothingParams(0.005)
        c = subspace_cost(U.entries, L, L, ObservationMask.full(4, 2), lp, sp)
        assert c == pytest.approx(8 * 0.005**0.25, rel=1e-12)

    def test_hankel_structure_terms_vanish(self, rng):
        d = 0.8 ** np.arange(9)
        L = hankel_build(d, 5)
        U = SubspaceBasis.from_svd(L, 1).entries
        Xhat = rng.standard_normal(L.shape)
        mask = ObservationMask(rng.random(L.shape) < 0.7)
        sp = SmoothingParams(0.005)
        lp = LagrangianParams(rng.standard_normal(L.shape), 3.0)
        Z = U @ U.T @ L
        expected = smoothed_lp(np.where(mask.observed, Xhat - Z, 0.0), sp)
        assert subspace_cost(U, L, Xhat, mask, lp, sp) == pytest.approx(expected, rel=1e-10)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_term_oracle(self, seed):
        q = random_instance(seed)
        Z = q["U"] @ q["U"].T @ q["L"]
        expected = lowrank_cost_loop(Z, q["Xhat"], q["mask"].observed, q["lp"].Lambda, q["lp"].rho, 0.005, 0.5)
        got = subspace_cost(q["U"], q["L"], q["Xhat"], q["mask"], q["lp"], q["sp"])
        assert got == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_grassmann_invariance(self, seed):
        q = random_instance(seed)
        Q, _ = np.linalg.qr(np.random.default_rng(seed + 100).standard_normal((3, 3)))
        args = (q["L"], q["Xhat"], q["mask"], q["lp"], q["sp"])
        assert subspace_cost(q["U"] @ Q, *args) == pytest.approx(subspace_cost(q["U"], *args), abs=1e-10)

    def test_structure_shape_check(self):
        q = random_instance(0)
        with pytest.raises(ValueError):
            subspace_cost(q["U"], q["L"], q["Xhat"], q["mask"], q["lp"], q["sp"], HankelStructure(3, 3))
        subspace_cost(q["U"], q["L"], q["Xhat"], q["mask"], q["lp"], q["sp"], HankelStructure(12, 15))


class TestSubspaceGrad:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_finite_difference(self, seed):
        q = random_instance(seed)
        args = (q["L"], q["Xhat"], q["mask"], q["lp"], q["sp"])
        fd = central_gradient(lambda U: subspace_cost(U, *args), q["U"])
        assert rel_err(fd, subspace_cost_grad(q["U"], *args)) <= 1e-5

    def test_directional_horizontal(self):
        q = random_instance(42)
        args = (q["L"], q["Xhat"], q["mask"], q["lp"], q["sp"])
        U = SubspaceBasis(q["U"])
        G = horizontal_project(U, subspace_cost_grad(q["U"], *args)).entries
        rng = np.random.default_rng(1)
        for _ in range(10):
            xi = horizontal_project(U, rng.standard_normal(q["U"].shape)).entries
            h = 1e-6
            fd = (subspace_cost(q["U"] + h * xi, *args) - subspace_cost(q["U"] - h * xi, *args)) / (2 * h)
            assert fd == pytest.approx(float(np.vdot(G, xi)), rel=1e-5)

    def test_stationary_when_constant(self):
        # L = 0 makes Z = 0 for every U, so the cost does not depend on U
        q = random_instance(3)
        g = subspace_cost_grad(q["U"], np.zeros((12, 15)), q["Xhat"], q["mask"], q["lp"], q["sp"])
        assert not g.any()

    def test_linear_in_lambda(self):
        q = random_instance(5)
        Lam = q["lp"].Lambda
        sp, mask, rho = q["sp"], q["mask"], q["lp"].rho
        g0 = subspace_cost_grad(q["U"], q["L"], q["Xhat"], mask, LagrangianParams(0 * Lam, rho), sp)
        g1 = subspace_cost_grad(q["U"], q["L"], q["Xhat"], mask, LagrangianParams(Lam, rho), sp)
        g2 = subspace_cost_grad(q["U"], q["L"], q["Xhat"], mask, LagrangianParams(2 * Lam, rho), sp)
        np.testing.assert_allclose(g2 - g0, 2 * (g1 - g0), atol=1e-10)


class TestCoordinateCost:
    def test_floor_on_hankel_range(self):
        L = hankel_build(0.9 ** np.arange(10), 5)
        U = SubspaceBasis.from_svd(L, 1).entries
        lp = LagrangianParams(np.ones(L.shape), 2.0)
        sp = SmoothingParams(0.005)
        c = coordinate_cost(U.T @ L, U, L, ObservationMask.full(*L.shape), lp, sp)
        assert c == pytest.approx(L.size * 0.005**0.25, rel=1e-9)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_matches_subspace_cost(self, seed):
        q = random_instance(seed)
        L = q["U"] @ q["Y"]
        args = (q["Xhat"], q["mask"], q["lp"], q["sp"])
        assert coordinate_cost(q["Y"], q["U"], *args) == pytest.approx(subspace_cost(q["U"], L, *args), rel=1e-12)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_term_oracle(self, seed):
        q = random_instance(seed)
        Z = q["U"] @ q["Y"]
        expected = lowrank_cost_loop(Z, q["Xhat"], q["mask"].observed, q["lp"].Lambda, q["lp"].rho, 0.005, 0.5)
        assert coordinate_cost(q["Y"], q["U"], q["Xhat"], q["mask"], q["lp"], q["sp"]) == pytest.approx(expected, rel=1e-12)


class TestCoordinateGrad:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_finite_difference(self, seed):
        q = random_instance(seed)
        args = (q["U"], q["Xhat"], q["mask"], q["lp"], q["sp"])
        fd = central_gradient(lambda Y: coordinate_cost(Y, *args), q["Y"])
        assert rel_err(fd, coordinate_cost_grad(q["Y"], *args)) <= 1e-5

    def test_zero_at_constructed_stationary_point(self):
        L = hankel_build(0.9 ** np.arange(10), 5)
        U = SubspaceBasis.from_svd(L, 1).entries
        lp = LagrangianParams(np.zeros(L.shape), 1.0)
        g = coordinate_cost_grad(U.T @ L, U, L, ObservationMask.full(*L.shape), lp, SmoothingParams(0.005))
        assert np.abs(g).max() <= 1e-12

    def test_linear_in_lambda(self):
        q = random_instance(8)
        Lam, rho = q["lp"].Lambda, q["lp"].rho
        grad = lambda A: coordinate_cost_grad(q["Y"], q["U"], q["Xhat"], q["mask"], LagrangianParams(A, rho), q["sp"])
        np.testing.assert_allclose(grad(2 * Lam) - grad(0 * Lam), 2 * (grad(Lam) - grad(0 * Lam)), atol=1e-10)
