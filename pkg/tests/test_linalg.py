import numpy as np
import pytest

from bls_ridge.linalg import (
    BlockUpperFactor,
    NotPositiveDefiniteError,
    ShapeError,
    cholesky,
    gram_plus_lambda,
    inverse_cholesky,
    matmul,
    solve_triangular,
    spd_solve,
    tri_matmul,
)
from oracles import naive_matmul, scalar_cholesky, scalar_inverse_cholesky


class TestMatmul:
    def test_matches_triple_loop(self, rng):
        a, b = rng.standard_normal((7, 5)), rng.standard_normal((5, 4))
        np.testing.assert_allclose(matmul(a, b), naive_matmul(a, b), rtol=1e-13, atol=1e-14)

    def test_identity(self, rng):
        a = rng.standard_normal((6, 6))
        np.testing.assert_array_equal(matmul(a, np.eye(6)), a)

    def test_shape_error_names_both_shapes(self):
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(4, 5\)"):
            matmul(np.zeros((2, 3)), np.zeros((4, 5)))


class TestGramPlusLambda:
    def test_value(self, rng):
        a = rng.standard_normal((30, 6))
        np.testing.assert_allclose(gram_plus_lambda(a, 0.5), naive_matmul(a.T, a) + 0.5 * np.eye(6),
                                   rtol=1e-13)

    def test_exactly_symmetric(self, rng):
        r = gram_plus_lambda(rng.standard_normal((101, 37)), 1e-3)
        assert np.array_equal(r, r.T)

    def test_zero_matrix(self):
        np.testing.assert_array_equal(gram_plus_lambda(np.zeros((3, 2)), 2.0), 2.0 * np.eye(2))

    @pytest.mark.parametrize("lam", [0.0, -1.0, float("nan")])
    def test_nonpositive_lambda_rejected(self, lam):
        with pytest.raises(ValueError):
            gram_plus_lambda(np.eye(2), lam)


class TestCholesky:
    def test_matches_scalar_recursion(self, rng):
        r = gram_plus_lambda(rng.standard_normal((20, 8)), 0.1)
        np.testing.assert_allclose(cholesky(r), scalar_cholesky(r), rtol=1e-12, atol=1e-14)

    def test_lower_with_positive_diagonal(self, rng):
        L = cholesky(gram_plus_lambda(rng.standard_normal((12, 5)), 1.0))
        assert np.all(np.triu(L, 1) == 0)
        assert np.all(np.diag(L) > 0)

    def test_diagonal(self):
        np.testing.assert_allclose(cholesky(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_indefinite_reports_pivot(self):
        r = np.array([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(NotPositiveDefiniteError) as err:
            cholesky(r)
        assert err.value.pivot == 1

    def test_negligible_pivot_is_not_pd(self):
        # Second pivot is 2 ulps of 1: positive, but below the relative cutoff.
        r = np.array([[1.0, 1.0], [1.0, 1.0 + 2 * np.finfo(float).eps]])
        with pytest.raises(NotPositiveDefiniteError) as err:
            cholesky(r)
        assert err.value.pivot == 1

    def test_non_square(self):
        with pytest.raises(ShapeError):
            cholesky(np.zeros((2, 3)))


class TestInverseCholesky:
    def test_matches_scalar_oracle(self, rng):
        r = gram_plus_lambda(rng.standard_normal((25, 9)), 1e-2)
        np.testing.assert_allclose(inverse_cholesky(r), scalar_inverse_cholesky(r),
                                   rtol=1e-10, atol=1e-12)

    def test_defining_identity(self, rng):
        r = gram_plus_lambda(rng.standard_normal((40, 15)), 1e-4)
        F = inverse_cholesky(r)
        np.testing.assert_allclose(F @ F.T @ r, np.eye(15), atol=1e-9)
        assert np.all(np.tril(F, -1) == 0) and np.all(np.diag(F) > 0)

    def test_identity_scaled(self):
        np.testing.assert_allclose(inverse_cholesky(4.0 * np.eye(3)), 0.5 * np.eye(3))

    def test_non_pd(self):
        with pytest.raises(NotPositiveDefiniteError):
            inverse_cholesky(-np.eye(2))


class TestTriangular:
    def test_solve_upper_and_transpose(self, rng):
        U = np.triu(rng.standard_normal((6, 6))) + 4 * np.eye(6)
        b = rng.standard_normal((6, 3))
        np.testing.assert_allclose(U @ solve_triangular(U, b), b, atol=1e-12)
        np.testing.assert_allclose(U.T @ solve_triangular(U, b, trans=True), b, atol=1e-12)

    def test_solve_lower(self, rng):
        L = np.tril(rng.standard_normal((5, 5))) + 3 * np.eye(5)
        b = rng.standard_normal((5, 2))
        np.testing.assert_allclose(L @ solve_triangular(L, b, lower=True), b, atol=1e-12)

    def test_solve_shape_error(self):
        with pytest.raises(ShapeError):
            solve_triangular(np.eye(3), np.zeros((4, 1)))

    @pytest.mark.parametrize("trans", [False, True])
    @pytest.mark.parametrize("right", [False, True])
    def test_tri_matmul(self, rng, trans, right):
        U = np.triu(rng.standard_normal((5, 5)))
        junk = U + np.tril(rng.standard_normal((5, 5)), -1)  # lower part must be ignored
        b = rng.standard_normal((5, 5))
        op = U.T if trans else U
        expect = b @ op if right else op @ b
        np.testing.assert_allclose(tri_matmul(junk, b, trans=trans, right=right), expect, atol=1e-12)

    def test_tri_matmul_shape_error(self):
        with pytest.raises(ShapeError):
            tri_matmul(np.eye(3), np.zeros((2, 2)))


class TestSpdSolve:
    def test_solution(self, rng):
        r = gram_plus_lambda(rng.standard_normal((30, 7)), 0.3)
        b = rng.standard_normal((7, 2))
        np.testing.assert_allclose(r @ spd_solve(r, b), b, atol=1e-10)


class TestBlockUpperFactor:
    def test_products_match_dense(self, rng):
        F0 = np.triu(rng.standard_normal((4, 4)))
        f = BlockUpperFactor(F0)
        f.append(rng.standard_normal((4, 3)), np.triu(rng.standard_normal((3, 3))))
        f.append(rng.standard_normal((7, 2)), np.triu(rng.standard_normal((2, 2))))
        dense = f.to_dense()
        assert dense.shape == (9, 9) and np.all(np.tril(dense, -1) == 0)
        x = rng.standard_normal((9, 3))
        np.testing.assert_allclose(f.matmul(x), dense @ x, atol=1e-12)
        np.testing.assert_allclose(f.rmatmul_t(x), dense.T @ x, atol=1e-12)

    def test_append_shape_checked(self):
        f = BlockUpperFactor(np.eye(2))
        with pytest.raises(ShapeError):
            f.append(np.zeros((3, 1)), np.eye(1))
