import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stfl.numerics import (
    NotPositiveDefiniteError,
    cholesky,
    spectral_norm_shifted,
    sym_eigen,
)

CLASS_A = np.array([[1.0, 1.25], [1.25, 3.0]])
CLASS_B = np.array([[2.0, 1.75], [1.75, 2.0]])


def quadratic_roots(b, c):
    """Roots of x^2 + b x + c, descending (independent oracle)."""
    disc = math.sqrt(b * b - 4 * c)
    return (-b + disc) / 2, (-b - disc) / 2


def det_cofactor(a):
    """Determinant by cofactor expansion, d <= 3 (independent oracle)."""
    n = a.shape[0]
    if n == 1:
        return a[0, 0]
    if n == 2:
        return a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    return (
        a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
        - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
        + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0])
    )


class TestSymEigen:
    def test_identity(self):
        res = sym_eigen(np.eye(2))
        np.testing.assert_allclose(res.eigenvalues, [1.0, 1.0])

    def test_class_a_matches_characteristic_roots(self):
        # char poly of CLASS_A: x^2 - 4x + 1.4375
        hi, lo = quadratic_roots(-4.0, 1.4375)
        res = sym_eigen(CLASS_A)
        np.testing.assert_allclose(res.eigenvalues, [hi, lo], rtol=1e-10)

    def test_class_b_equal_diagonal(self):
        res = sym_eigen(CLASS_B)
        np.testing.assert_allclose(res.eigenvalues, [3.75, 0.25], rtol=1e-12)

    def test_sorted_descending(self):
        res = sym_eigen(np.diag([1.0, 5.0, 3.0]))
        assert np.all(np.diff(res.eigenvalues) <= 0)

    @pytest.mark.parametrize("dim", [2, 3, 4, 6, 8])
    def test_reconstruction_and_orthonormality(self, dim):
        rng = np.random.default_rng(dim)
        for _ in range(25):
            b = rng.normal(size=(dim, dim))
            a = b + b.T
            res = sym_eigen(a)
            v, w = res.eigenvectors, res.eigenvalues
            recon = v @ np.diag(w) @ v.T
            denom = np.linalg.norm(a)
            assert np.linalg.norm(recon - a) <= 1e-10 * denom
            np.testing.assert_allclose(v.T @ v, np.eye(dim), atol=1e-10)
            for i in range(dim):
                np.testing.assert_allclose(
                    a @ v[:, i], w[i] * v[:, i], atol=1e-10 * max(1.0, abs(w[i]))
                )

    @pytest.mark.parametrize("dim", [2, 3, 4, 6])
    def test_matches_reference_eigensolver(self, dim):
        rng = np.random.default_rng(100 + dim)
        for _ in range(25):
            b = rng.normal(size=(dim, dim))
            a = b + b.T
            ours = sym_eigen(a).eigenvalues
            ref = np.linalg.eigvalsh(a)[::-1]
            np.testing.assert_allclose(ours, ref, rtol=1e-9, atol=1e-9)

    @pytest.mark.parametrize("dim", [2, 3])
    def test_trace_and_determinant(self, dim):
        rng = np.random.default_rng(7 + dim)
        for _ in range(50):
            b = rng.normal(size=(dim, dim))
            a = b + b.T
            w = sym_eigen(a).eigenvalues
            assert np.isclose(w.sum(), np.trace(a), rtol=1e-10, atol=1e-12)
            assert np.isclose(np.prod(w), det_cofactor(a), rtol=1e-10, atol=1e-10)

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError, match="square"):
            sym_eigen(np.ones((2, 3)))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            sym_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestCholesky:
    def test_identity(self):
        np.testing.assert_array_equal(cholesky(np.eye(3)), np.eye(3))

    def test_class_b_hand_values(self):
        # L11 = sqrt(2), L21 = 1.75/L11, L22 = sqrt(2 - 1.75^2/2)
        l11 = math.sqrt(2.0)
        l21 = 1.75 / l11
        l22 = math.sqrt(2.0 - 1.75**2 / 2.0)
        lower = cholesky(CLASS_B)
        np.testing.assert_allclose(lower, [[l11, 0.0], [l21, l22]], rtol=1e-12)

    def test_class_a_hand_values(self):
        # L22 = sqrt(3 - 1.5625)
        lower = cholesky(CLASS_A)
        np.testing.assert_allclose(
            lower, [[1.0, 0.0], [1.25, math.sqrt(1.4375)]], rtol=1e-12
        )

    def test_factor_reproduces_matrix(self):
        rng = np.random.default_rng(11)
        for dim in (2, 3, 5):
            b = rng.normal(size=(dim, dim))
            a = b @ b.T + dim * np.eye(dim)
            lower = cholesky(a)
            assert np.linalg.norm(lower @ lower.T - a) <= 1e-12 * np.linalg.norm(a)
            assert np.all(np.diag(lower) > 0)

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.floats(min_value=0.2, max_value=4.0), min_size=2, max_size=4),
        st.integers(min_value=0, max_value=2**31),
    )
    def test_round_trip_random_lower_triangular(self, diag, seed):
        rng = np.random.default_rng(seed)
        dim = len(diag)
        lower = np.tril(rng.uniform(-1.0, 1.0, size=(dim, dim)), -1) + np.diag(diag)
        recovered = cholesky(lower @ lower.T)
        assert np.max(np.abs(recovered - lower)) <= 1e-10 * max(np.max(np.abs(lower)), 1.0)

    def test_rejects_zero_matrix_with_pivot(self):
        with pytest.raises(NotPositiveDefiniteError) as err:
            cholesky(np.zeros((2, 2)))
        assert err.value.pivot_index == 0

    def test_rejects_indefinite_with_pivot(self):
        with pytest.raises(NotPositiveDefiniteError) as err:
            cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert err.value.pivot_index == 1

    def test_rejects_semidefinite(self):
        with pytest.raises(NotPositiveDefiniteError):
            cholesky(np.array([[1.0, 1.0], [1.0, 1.0]]))


class TestSpectralNormShifted:
    def test_zero_alpha_is_one(self):
        assert spectral_norm_shifted(CLASS_A, 0.0) == 1.0
        assert spectral_norm_shifted(np.diag([5.0, 7.0]), 0.0) == 1.0

    def test_class_b_half_step(self):
        # max(|1 - 0.5*3.75|, |1 - 0.5*0.25|)
        assert np.isclose(spectral_norm_shifted(CLASS_B, 0.5), 0.875, rtol=1e-12)

    def test_class_a_half_step(self):
        # eigenvalues sum to 4, so both give the same |1 - 0.5*lambda|
        hi, lo = quadratic_roots(-4.0, 1.4375)
        expected = abs(1.0 - 0.5 * hi)
        assert np.isclose(abs(1.0 - 0.5 * lo), expected, rtol=1e-12)
        assert np.isclose(spectral_norm_shifted(CLASS_A, 0.5), expected, rtol=1e-10)
        assert np.isclose(spectral_norm_shifted(CLASS_A, 0.5), 0.800391, atol=1e-6)

    def test_rejects_negative_alpha(self):
        with pytest.raises(ValueError, match="nonnegative"):
            spectral_norm_shifted(CLASS_A, -0.1)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            spectral_norm_shifted(np.array([[1.0, 1.0], [0.0, 1.0]]), 0.5)

    @pytest.mark.parametrize("a", [CLASS_A, CLASS_B])
    def test_convex_piecewise_linear_with_known_minimum(self, a):
        w = sym_eigen(a).eigenvalues
        alpha_star = 2.0 / (w[0] + w[-1])
        f_star = spectral_norm_shifted(a, alpha_star)
        grid = np.linspace(0.0, 2.0 * alpha_star, 101)
        values = [spectral_norm_shifted(a, alpha) for alpha in grid]
        assert all(v >= f_star - 1e-12 for v in values)
        # midpoint convexity on the evaluation grid
        for i in range(1, len(grid) - 1):
            assert values[i] <= 0.5 * (values[i - 1] + values[i + 1]) + 1e-12
