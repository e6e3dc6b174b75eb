import numpy as np
import pytest

from twohop.channel import ChannelPair, EnsembleSpec, sample_ensemble
from twohop.converse import (
    decomposition_coefficients,
    dof_upper_bound,
    mimo_decompose,
    mimo_decompose_g22,
    scalar_end_to_end_blocks,
    verify_decomposition,
)
from twohop.exceptions import ConditionViolationError, DecompositionImpossibleError
from twohop.linalg import matrix_rank
from twohop.relaying import PHASE_TOPOLOGIES, end_to_end, scalar_kernel
from twohop.schemes import fixed_af_kernel


def generic_scalar():
    return ChannelPair(
        m=1, field="real",
        h1=np.array([[1.0, 2.0], [3.0, 4.0]]),
        h2=np.array([[2.0, 1.0], [1.0, 3.0]]),
    )


class TestCoefficients:
    def test_matches_dense_solve(self):
        cp = generic_scalar()
        co = decomposition_coefficients(cp)
        s1u, s1v, s2u, s2v = 1.0, 3.0, 2.0, 4.0
        ud1, vd1, ud2, vd2 = 2.0, 1.0, 1.0, 3.0
        sys = np.array([[s2u * ud1, s1u * ud2], [s2v * vd1, s1v * vd2]])
        lam = np.linalg.solve(sys, [s1u * ud1, s1v * vd1])
        mu = np.linalg.solve(sys, [s2u * ud2, s2v * vd2])
        assert co.lambda1 == pytest.approx(lam[0])
        assert co.lambda2 == pytest.approx(lam[1])
        assert co.mu1 == pytest.approx(mu[0])
        assert co.mu2 == pytest.approx(mu[1])

    def test_all_ones_raises(self):
        cp = ChannelPair(m=1, field="real", h1=np.ones((2, 2)), h2=np.ones((2, 2)))
        with pytest.raises(ConditionViolationError):
            decomposition_coefficients(cp)

    def test_defining_equations_at_unit_points(self):
        # the coefficients must satisfy the defining identity at (x, y) = (1, 0)
        # and (0, 1), i.e. for kernels (A, B) = (1, 0) and (0, 1)
        cp = generic_scalar()
        co = decomposition_coefficients(cp)
        for a, b in ((1.0, 0.0), (0.0, 1.0)):
            g11, g12, g21, g22 = scalar_end_to_end_blocks(
                cp, np.array([[a]]), np.array([[b]])
            )
            assert g11 == pytest.approx(co.lambda1 * g12 + co.lambda2 * g21)
            assert g22 == pytest.approx(co.mu1 * g12 + co.mu2 * g21)


class TestVerifyDecomposition:
    def test_random_kernels_exact(self):
        rng = np.random.default_rng(0)
        for seed in range(10):
            cp = sample_ensemble(
                EnsembleSpec(m=1, distribution="gaussian", field="real", seed=seed)
            )
            if not abs(decomposition_coefficients(cp).lambda1) >= 0:
                continue
            kernels = [
                (rng.standard_normal((ell, ell)), rng.standard_normal((ell, ell)))
                for ell in (1, 2, 3)
                for _ in range(30)
            ]
            assert verify_decomposition(cp, kernels) <= 1e-9

    def test_zero_kernels_zero_residual(self):
        cp = generic_scalar()
        assert verify_decomposition(cp, [(np.zeros((2, 2)), np.zeros((2, 2)))]) == 0.0

    def test_perturbed_coefficient_breaks_identity(self):
        # test of the test: a wrong lambda1 must produce a visible residual
        cp = generic_scalar()
        co = decomposition_coefficients(cp)
        a, b = np.array([[1.0]]), np.array([[1.0]])
        g11, g12, g21, _ = scalar_end_to_end_blocks(cp, a, b)
        residual = abs(g11 - (co.lambda1 + 0.1) * g12 - co.lambda2 * g21)
        assert residual > 1e-3


class TestMimoDecompose:
    def test_full_rank_g12_direct_solve(self):
        rng = np.random.default_rng(1)
        g12 = rng.standard_normal((3, 3))
        g11 = rng.standard_normal((3, 3))
        dec = mimo_decompose(g11, g12, np.zeros((3, 3)))
        assert dec.residual <= 1e-9
        assert dec.correction_rank == 0

    def test_all_zero(self):
        z = np.zeros((2, 2))
        dec = mimo_decompose(z, z, z)
        assert dec.residual == 0.0 and dec.correction_rank == 0

    def test_rank_one_g12_correction_bounded(self):
        rng = np.random.default_rng(2)
        u = rng.standard_normal((2, 1))
        v = rng.standard_normal((1, 2))
        g12 = u @ v  # rank 1
        g11 = rng.standard_normal((2, 2))
        dec = mimo_decompose(g11, g12, np.zeros((2, 2)))
        assert dec.residual <= 1e-9
        assert dec.correction_rank <= 1
        stacked = np.vstack([dec.gamma1, np.zeros((1, 2))])
        recon = g12 @ dec.lambda1 + dec.lambda2 @ np.zeros((2, 2)) + dec.lambda3 @ stacked
        assert np.allclose(recon, g11, atol=1e-9)

    def test_g21_route(self):
        rng = np.random.default_rng(3)
        g21 = rng.standard_normal((3, 3))
        g11 = rng.standard_normal((3, 3))
        dec = mimo_decompose(g11, np.zeros((3, 3)), g21)
        assert dec.residual <= 1e-9

    def test_impossible_case(self):
        z = np.zeros((2, 2))
        with pytest.raises(DecompositionImpossibleError):
            mimo_decompose(np.eye(2), z, z)

    def test_g22_branch(self):
        rng = np.random.default_rng(4)
        g12 = rng.standard_normal((3, 3))
        g21 = rng.standard_normal((3, 3))
        g22 = rng.standard_normal((3, 3))
        dec = mimo_decompose_g22(g22, g12, g21)
        assert dec.residual <= 1e-9
        stacked = np.vstack([dec.gamma1, np.zeros((1, 3))])
        recon = dec.lambda1 @ g12 + g21 @ dec.lambda2 + dec.lambda3 @ stacked
        assert np.allclose(recon, g22, atol=1e-8 * max(1, np.linalg.norm(g22)))

    def test_constructed_kernels_decompose(self):
        from twohop.relaying import mimo_kernels

        cp = sample_ensemble(
            EnsembleSpec(m=2, distribution="gaussian", field="real", seed=3)
        )
        for kern in mimo_kernels(cp).values():
            e = end_to_end(cp, kern)
            dec = mimo_decompose(e.g11, e.g12, e.g21)
            assert dec.residual <= 1e-9
            assert dec.correction_rank <= cp.m - 1


class TestDofBounds:
    def test_scalar_identity_sums_to_four(self):
        rng = np.random.default_rng(5)
        cp = generic_scalar()
        for ell in (1, 2, 3):
            kernels = [
                (rng.standard_normal((ell, ell)), rng.standard_normal((ell, ell)))
                for _ in range(40)
            ]
            rep = dof_upper_bound(cp, kernels)
            assert rep.bound_i + rep.bound_ii + rep.bound_iii == pytest.approx(4.0, abs=1e-12)
            assert rep.min_bound <= 4.0 / 3.0 + 1e-12

    def test_fixed_af_capped_at_one(self):
        cp = generic_scalar()
        kern = fixed_af_kernel(cp)
        rep = dof_upper_bound(cp, [kern] * 7)
        assert rep.bound_i == pytest.approx(2.0)
        assert rep.bound_ii == pytest.approx(1.0)
        assert rep.bound_iii == pytest.approx(1.0)
        assert rep.min_bound == pytest.approx(1.0)

    def test_three_phase_kernels_reach_four_thirds(self):
        cp = generic_scalar()
        kernels = [scalar_kernel(cp, t) for t in PHASE_TOPOLOGIES]
        rep = dof_upper_bound(cp, kernels)
        # per-phase interference ranks (0,1), (1,0), (1,1)
        assert rep.per_block_ranks == ((0, 1), (1, 0), (1, 1))
        assert rep.min_bound == pytest.approx(4.0 / 3.0)

    def test_mimo_identity(self):
        rng = np.random.default_rng(6)
        cp = sample_ensemble(
            EnsembleSpec(m=2, distribution="gaussian", field="real", seed=8)
        )
        kernels = [
            (rng.standard_normal((2, 2)), rng.standard_normal((2, 2))) for _ in range(25)
        ]
        rep = dof_upper_bound(cp, kernels, mode="mimo")
        target = 3 * (2 * cp.m - 2.0 / 3.0)
        assert rep.bound_i + rep.bound_ii + rep.bound_iii == pytest.approx(target, abs=1e-12)
        assert rep.min_bound <= 2 * cp.m - 2.0 / 3.0 + 1e-12

    def test_mimo_three_phase_kernels(self):
        from twohop.relaying import mimo_kernels

        cp = sample_ensemble(
            EnsembleSpec(m=2, distribution="gaussian", field="real", seed=3)
        )
        kernels = [mimo_kernels(cp)[t] for t in PHASE_TOPOLOGIES]
        rep = dof_upper_bound(cp, kernels)
        # interference ranks per phase: S (0, 1), Z (1, 0), X physical blocks
        assert rep.per_block_ranks[0] == (0, 1)
        assert rep.per_block_ranks[1] == (1, 0)

    def test_achievability_below_converse(self):
        from twohop.schemes import three_phase_scalar_rate
        import math

        cp = generic_scalar()
        kernels = [scalar_kernel(cp, t) for t in PHASE_TOPOLOGIES]
        rep = dof_upper_bound(cp, kernels)
        p_lo, p_hi = 1e10, 1e12
        slope = (
            three_phase_scalar_rate(cp, p_hi).sum_rate
            - three_phase_scalar_rate(cp, p_lo).sum_rate
        ) / (0.5 * (math.log2(p_hi) - math.log2(p_lo)))
        assert slope <= rep.min_bound + 0.02
