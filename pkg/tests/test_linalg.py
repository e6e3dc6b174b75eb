import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg as sla

from twohop.exceptions import EigenvalueCollisionError, NonFiniteError
from twohop.linalg import (
    cyclic_shift_witness,
    eigen_separation,
    krylov_full_rank,
    krylov_matrix,
    rank_with_tolerance,
    solve_sylvester,
)


def small_matrices(n):
    return st.lists(
        st.lists(st.floats(-10, 10), min_size=n, max_size=n),
        min_size=n,
        max_size=n,
    ).map(np.array)


class TestRank:
    def test_identity(self):
        assert rank_with_tolerance(np.eye(3), 1e-9).rank == 3

    def test_zero(self):
        assert rank_with_tolerance(np.zeros((2, 2))).rank == 0

    def test_rank_one_ones(self):
        # singular values of [[1,1],[1,1]] are {2, 0}
        rep = rank_with_tolerance(np.ones((2, 2)), 1e-9)
        assert rep.rank == 1
        assert np.allclose(rep.singular_values, [2.0, 0.0], atol=1e-12)

    def test_singular_values_sorted_nonnegative(self):
        rng = np.random.default_rng(0)
        rep = rank_with_tolerance(rng.standard_normal((4, 4)))
        sv = rep.singular_values
        assert np.all(sv[:-1] >= sv[1:]) and np.all(sv >= 0)

    def test_rejects_nan(self):
        with pytest.raises(NonFiniteError):
            rank_with_tolerance(np.array([[np.nan, 0], [0, 1]]))

    @settings(max_examples=50, deadline=None, derandomize=True)
    @given(small_matrices(3))
    def test_transpose_invariant(self, m):
        assert rank_with_tolerance(m).rank == rank_with_tolerance(m.T).rank


class TestEigenSeparation:
    def test_shifted_identities(self):
        assert eigen_separation(np.eye(2), 2 * np.eye(2)) == pytest.approx(1.0)

    def test_identical(self):
        assert eigen_separation(np.eye(2), np.eye(2)) == pytest.approx(0.0)

    def test_diagonal_pairs(self):
        # distances {1, 4, 1, 2} -> min 1
        a = np.diag([1.0, 3.0])
        b = np.diag([2.0, 5.0])
        assert eigen_separation(a, b) == pytest.approx(1.0)

    @settings(max_examples=30, deadline=None, derandomize=True)
    @given(small_matrices(3), small_matrices(3))
    def test_symmetric(self, a, b):
        assert eigen_separation(a, b) == pytest.approx(eigen_separation(b, a), abs=1e-9)


class TestSylvester:
    def test_forced_identity(self):
        # X(2I) - IX = X, so c = I forces X = I
        x = solve_sylvester(2 * np.eye(2), np.eye(2), np.eye(2))
        assert np.allclose(x, np.eye(2), atol=1e-12)

    def test_cyclic_shift_witness_invertible(self):
        # rank-one right side q p^T with the shift witness on both sides
        for n in (2, 3, 4):
            pi = cyclic_shift_witness(n)
            p = np.zeros(n)
            p[-1] = 1.0
            q = np.zeros(n)
            q[0] = 1.0
            c = np.outer(q, p)
            x = solve_sylvester(pi, pi + 0.7 * np.eye(n), c)
            resid = np.linalg.norm(x @ pi - (pi + 0.7 * np.eye(n)) @ x - c)
            assert resid <= 1e-10 * max(1.0, np.linalg.norm(c))
            assert abs(np.linalg.det(x)) > 1e-12

    def test_collision_raises(self):
        with pytest.raises(EigenvalueCollisionError):
            solve_sylvester(np.eye(2), np.eye(2), np.ones((2, 2)))

    def test_matches_bartels_stewart(self):
        # independent route: scipy solves AX + XB = Q, so map X a - b X = c
        # to A = -b, B = a, Q = c
        rng = np.random.default_rng(3)
        for _ in range(25):
            n = rng.integers(2, 7)
            a = rng.standard_normal((n, n))
            b = rng.standard_normal((n, n)) + 3.0 * np.eye(n)
            c = rng.standard_normal((n, n))
            if eigen_separation(a, b) < 1e-6:
                continue
            x = solve_sylvester(a, b, c)
            x_ref = sla.solve_sylvester(-b, a, c)
            assert np.allclose(x, x_ref, atol=1e-8 * max(1.0, np.linalg.norm(x_ref)))

    def test_residual_bound_random(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = rng.integers(2, 7)
            a = rng.standard_normal((n, n))
            b = rng.standard_normal((n, n)) + 4.0 * np.eye(n)
            c = rng.standard_normal((n, n))
            x = solve_sylvester(a, b, c)
            assert np.linalg.norm(x @ a - b @ x - c) <= 1e-10 * max(
                1.0, np.linalg.norm(c)
            )


class TestKrylov:
    def test_shift_witness_controllable(self):
        for n in (2, 3, 4, 6):
            pi = cyclic_shift_witness(n)
            v = np.zeros(n)
            v[-1] = 1.0
            assert krylov_full_rank(pi.T, v)
            k = krylov_matrix(pi.T, v)
            assert abs(abs(np.linalg.det(k)) - 1.0) < 1e-9

    def test_identity_fails(self):
        assert not krylov_full_rank(np.eye(2), np.array([1.0, 1.0]))

    def test_rotation_full_rank(self):
        a = np.array([[0.0, 1.0], [-1.0, 0.0]])
        assert krylov_full_rank(a, np.array([1.0, 0.0]))

    def test_matches_brute_force_determinant(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n = rng.integers(2, 5)
            a = rng.standard_normal((n, n))
            v = rng.standard_normal(n)
            det = np.linalg.det(krylov_matrix(a, v))
            scale = np.linalg.norm(krylov_matrix(a, v))
            expected = abs(det) > 1e-9 * max(scale, 1.0) ** n
            assert krylov_full_rank(a, v) == expected
