import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from grslra.structure import (
    HankelStructure,
    ObservationMask,
    forecast_mask,
    hankel_build,
    hankel_extract_series,
    hankel_project,
    mask_residual,
    structure_residual,
)


def random_hankel(rng, m, n):
    return hankel_build(rng.standard_normal(m + n - 1), m)


def is_hankel(X, tol=0.0):
    m, n = X.shape
    return all(abs(X[i, j] - X[i - 1, j + 1]) <= tol for i in range(1, m) for j in range(n - 1))


class TestBuild:
    def test_small(self):
        np.testing.assert_array_equal(hankel_build([1, 2, 3], 2), [[1, 2], [2, 3]])

    def test_constant_is_rank_one(self):
        X = hankel_build(np.full(9, 2.5), 4)
        assert np.all(X == 2.5)
        assert np.linalg.matrix_rank(X) == 1

    def test_geometric_is_rank_one(self):
        s = np.linalg.svd(hankel_build(0.9 ** np.arange(15), 6), compute_uv=False)
        assert s[1] <= 1e-10 * s[0]

    def test_too_short(self):
        with pytest.raises(ValueError):
            hankel_build([1.0, 2.0], 3)

    def test_structure_object(self):
        S = HankelStructure(2, 3)
        assert S.series_len == 4
        np.testing.assert_array_equal(S.build([1, 2, 3, 4]), [[1, 2, 3], [2, 3, 4]])
        with pytest.raises(ValueError):
            S.build([1, 2, 3])
        with pytest.raises(ValueError):
            HankelStructure(0, 3)


class TestProject:
    def test_two_by_two(self):
        np.testing.assert_allclose(hankel_project(np.array([[1.0, 2.0], [3.0, 4.0]])), [[1, 2.5], [2.5, 4]])

    def test_hankel_fixed_point(self, rng):
        H = random_hankel(rng, 5, 7)
        np.testing.assert_array_equal(hankel_project(H), H)

    def test_orthogonality(self, rng):
        X = rng.standard_normal((6, 9))
        Y = rng.standard_normal((6, 9))
        assert abs(np.vdot(X - hankel_project(X), hankel_project(Y))) <= 1e-10

    def test_non_square_is_hankel(self, rng):
        assert is_hankel(hankel_project(rng.standard_normal((4, 11))), 1e-14)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)), elements=st.floats(-1e3, 1e3)))
    def test_idempotent(self, X):
        P = hankel_project(X)
        np.testing.assert_allclose(hankel_project(P), P, rtol=0, atol=1e-12 * max(1.0, np.abs(X).max()))

    def test_linear(self, rng):
        X, Y = rng.standard_normal((2, 5, 8))
        np.testing.assert_allclose(hankel_project(2.0 * X - 0.5 * Y), 2.0 * hankel_project(X) - 0.5 * hankel_project(Y), atol=1e-12)

    def test_minimizer_against_random_hankel(self, rng):
        for _ in range(5):
            X = rng.standard_normal((3, 3))
            P = hankel_project(X)
            best = np.linalg.norm(X - P)
            for _ in range(200):
                H = P + random_hankel(rng, 3, 3) * rng.uniform(1e-3, 1.0)
                assert np.linalg.norm(X - H) > best


class TestExtract:
    def test_round_trip(self, rng):
        d = rng.standard_normal(13)
        np.testing.assert_array_equal(hankel_extract_series(hankel_build(d, 5)), d)

    def test_projected(self):
        np.testing.assert_allclose(hankel_extract_series(np.array([[1.0, 2.5], [2.5, 4.0]])), [1, 2.5, 4])

    def test_rejects_non_hankel(self):
        with pytest.raises(ValueError, match="not Hankel"):
            hankel_extract_series(np.array([[1.0, 2.0], [3.0, 4.0]]))

    def test_tolerates_roundoff(self):
        X = hankel_build(np.arange(6.0), 3)
        X[1, 1] += 1e-12
        np.testing.assert_allclose(hankel_extract_series(X), np.arange(6.0))


class TestResidual:
    def test_hankel_zero(self, rng):
        R, eps = structure_residual(random_hankel(rng, 4, 6))
        assert eps == 0.0
        assert not R.any()

    def test_two_by_two(self):
        R, eps = structure_residual(np.array([[1.0, 2.0], [3.0, 4.0]]))
        np.testing.assert_allclose(R, [[0, -0.5], [0.5, 0]])
        assert eps == pytest.approx(np.sqrt(0.5) / 4, rel=1e-14)
        assert eps == pytest.approx(0.17678, abs=1e-5)

    def test_invariant_to_hankel_shift(self, rng):
        X = rng.standard_normal((5, 6))
        _, e1 = structure_residual(X)
        _, e2 = structure_residual(X + random_hankel(rng, 5, 6))
        assert e1 == pytest.approx(e2, rel=1e-12)


class TestMasks:
    def test_full_mask_residual(self, rng):
        X, L = rng.standard_normal((2, 3, 4))
        np.testing.assert_array_equal(mask_residual(X, ObservationMask.full(3, 4), L), X - L)

    def test_single_observed(self, rng):
        obs = np.zeros((3, 3), bool)
        obs[1, 2] = True
        X, L = rng.standard_normal((2, 3, 3))
        R = mask_residual(X, ObservationMask(obs), L)
        assert np.count_nonzero(R) == 1
        assert R[1, 2] == X[1, 2] - L[1, 2]

    def test_unobserved_ignore_L(self, rng):
        M = forecast_mask(4, 6, 2)
        X = rng.standard_normal((4, 6))
        R = mask_residual(X, M, 1e6 * rng.standard_normal((4, 6)))
        assert not R[~M.observed].any()

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            mask_residual(np.zeros((2, 2)), ObservationMask.full(2, 3), np.zeros((2, 2)))

    def test_empty_mask_rejected(self):
        with pytest.raises(ValueError):
            ObservationMask(np.zeros((2, 2), bool))

    def test_forecast_mask_zero(self):
        assert forecast_mask(3, 4, 0).is_full

    def test_forecast_mask_2x2(self):
        M = forecast_mask(2, 2, 1)
        np.testing.assert_array_equal(~M.observed, [[False, False], [False, True]])

    def test_forecast_mask_2x3(self):
        hidden = ~forecast_mask(2, 3, 2).observed
        assert hidden.sum() == 3
        assert hidden[1, 2] and hidden[0, 2] and hidden[1, 1]

    @pytest.mark.parametrize("r", [-1, 5])
    def test_forecast_mask_range(self, r):
        with pytest.raises(ValueError):
            forecast_mask(3, 4, r)
