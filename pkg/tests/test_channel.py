import numpy as np
import pytest

from twohop.channel import (
    ChannelPair,
    EnsembleSpec,
    augment,
    check_scalar_conditions,
    modified_source_channels,
    sample_ensemble,
)
from twohop.exceptions import BadSpecError, ShapeMismatchError


def real_pair(h1, h2, m=1):
    return ChannelPair(m=m, field="real", h1=np.array(h1, float), h2=np.array(h2, float))


class TestSampling:
    def test_seeded_determinism(self):
        spec = EnsembleSpec(m=1, r=1.0, seed=7)
        a = sample_ensemble(spec)
        b = sample_ensemble(spec)
        assert np.array_equal(a.h1, b.h1) and np.array_equal(a.h2, b.h2)

    def test_uniform_phase_magnitudes(self):
        cp = sample_ensemble(EnsembleSpec(m=1, r=0.5, seed=3))
        # direct links unit magnitude, cross links sqrt(r)
        assert abs(abs(cp.s1u.item()) - 1.0) < 1e-12
        assert abs(abs(cp.s2v.item()) - 1.0) < 1e-12
        assert abs(abs(cp.s1v.item()) ** 2 - 0.5) < 1e-12
        assert abs(abs(cp.s2u.item()) ** 2 - 0.5) < 1e-12
        assert abs(abs(cp.ud1.item()) - 1.0) < 1e-12
        assert abs(abs(cp.vd1.item()) ** 2 - 0.5) < 1e-12

    def test_gaussian_sample_mean(self):
        # mean of many entries within 3 sigma of zero
        entries = []
        for seed in range(200):
            cp = sample_ensemble(
                EnsembleSpec(m=2, distribution="gaussian", field="real", seed=seed)
            )
            entries.append(cp.h1.ravel())
        pool = np.concatenate(entries)
        assert abs(pool.mean()) < 3.0 / np.sqrt(pool.size)

    def test_bad_r_rejected(self):
        with pytest.raises(BadSpecError):
            EnsembleSpec(m=1, r=0.0, seed=0)
        with pytest.raises(BadSpecError):
            EnsembleSpec(m=1, r=1.5, seed=0)

    def test_uniform_phase_is_complex_only(self):
        with pytest.raises(BadSpecError):
            EnsembleSpec(m=1, distribution="uniform_phase", field="real")

    def test_gaussian_conditions_pass_rate(self):
        # the three conditions are open (generic); failures need entries or
        # determinants within 1e-12 of zero
        ok = 0
        n = 10_000
        for seed in range(n):
            cp = sample_ensemble(
                EnsembleSpec(m=1, distribution="gaussian", field="real", seed=seed)
            )
            ok += check_scalar_conditions(cp).all_pass
        assert ok / n >= 0.999


class TestScalarConditions:
    def test_all_ones_kills_cross_det(self):
        cp = real_pair([[1, 1], [1, 1]], [[1, 1], [1, 1]])
        rep = check_scalar_conditions(cp)
        assert not rep.c3_cross_det_nonzero
        assert not rep.all_pass

    def test_generic_channel_passes(self):
        cp = real_pair([[1, 2], [3, 4]], [[2, 1], [1, 3]])
        rep = check_scalar_conditions(cp)
        # independent evaluation of the three determinants
        assert np.isclose(rep.det_values["det_h1"], 1 * 4 - 2 * 3)
        assert np.isclose(rep.det_values["det_h2"], 2 * 3 - 1 * 1)
        cross = np.linalg.det(np.array([[2 * 2, 1 * 1], [4 * 1, 3 * 3]], float))
        assert np.isclose(rep.det_values["cross_det"], cross)
        assert rep.all_pass

    def test_zero_gain_fails_c1(self):
        cp = real_pair([[0, 2], [3, 4]], [[2, 1], [1, 3]])
        assert not check_scalar_conditions(cp).c1_all_nonzero


class TestAugment:
    def test_pure_imaginary_unit(self):
        cp = ChannelPair(
            m=1,
            field="complex",
            h1=np.array([[1j, 1.0], [1.0, 1j]]),
            h2=np.array([[1j, 1.0], [1.0, 1j]]),
        )
        out = augment(cp)
        assert out.field == "real" and out.m == 2
        assert np.allclose(out.s1u, [[0.0, -1.0], [1.0, 0.0]])

    def test_identity_maps_to_identity(self):
        eye = np.eye(2, dtype=complex)
        cp = ChannelPair(m=1, field="complex", h1=eye, h2=eye)
        assert np.allclose(augment(cp).h1, np.eye(4))

    def test_product_homomorphism(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        b = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))

        def aug(h):
            return np.block([[h.real, -h.imag], [h.imag, h.real]])

        assert np.allclose(aug(a @ b), aug(a) @ aug(b))
        assert np.allclose(aug(a + b), aug(a) + aug(b))
        assert np.linalg.norm(np.linalg.inv(aug(a)) - aug(np.linalg.inv(a))) < 1e-10

    def test_rejects_real(self):
        cp = real_pair([[1, 2], [3, 4]], [[2, 1], [1, 3]])
        with pytest.raises(ShapeMismatchError):
            augment(cp)


class TestModifiedSources:
    def test_m1_full_swap(self):
        cp = real_pair([[1, 2], [3, 4]], [[2, 1], [1, 3]])
        mod = modified_source_channels(cp, "last_first")
        assert mod.s1u.item() == 2.0 and mod.s2u.item() == 1.0
        assert mod.s1v.item() == 4.0 and mod.s2v.item() == 3.0

    def test_m2_column_bookkeeping(self):
        h1 = np.zeros((4, 4))
        h1[:2, :2] = [[1, 2], [3, 4]]  # source-1 -> u
        h1[:2, 2:] = [[5, 6], [7, 8]]  # source-2 -> u
        h1[2:, :2] = np.eye(2)
        h1[2:, 2:] = 2 * np.eye(2)
        cp = ChannelPair(m=2, field="real", h1=h1, h2=np.eye(4))
        mod = modified_source_channels(cp, "last_first")
        assert np.allclose(mod.s1u, [[1, 5], [3, 7]])
        assert np.allclose(mod.s2u, [[2, 6], [4, 8]])

    def test_first_first_variant(self):
        h1 = np.zeros((4, 4))
        h1[:2, :2] = [[1, 2], [3, 4]]
        h1[:2, 2:] = [[5, 6], [7, 8]]
        h1[2:, :2] = np.eye(2)
        h1[2:, 2:] = 2 * np.eye(2)
        cp = ChannelPair(m=2, field="real", h1=h1, h2=np.eye(4))
        mod = modified_source_channels(cp, "first_first")
        assert np.allclose(mod.s1u, [[5, 2], [7, 4]])
        assert np.allclose(mod.s2u, [[1, 6], [3, 8]])

    def test_columns_are_permutation(self):
        cp = sample_ensemble(
            EnsembleSpec(m=3, distribution="gaussian", field="real", seed=9)
        )
        for variant in ("last_first", "first_first"):
            mod = modified_source_channels(cp, variant)
            original = np.hstack([cp.s1u, cp.s2u])
            modified = np.hstack([mod.s1u, mod.s2u])
            orig_cols = sorted(map(tuple, original.T))
            mod_cols = sorted(map(tuple, modified.T))
            assert orig_cols == mod_cols


class TestJson:
    def test_real_round_trip(self):
        cp = sample_ensemble(
            EnsembleSpec(m=2, distribution="gaussian", field="real", seed=4)
        )
        back = ChannelPair.from_json(cp.to_json())
        assert np.array_equal(back.h1, cp.h1) and np.array_equal(back.h2, cp.h2)

    def test_complex_round_trip(self):
        cp = sample_ensemble(EnsembleSpec(m=1, r=0.25, seed=8))
        back = ChannelPair.from_json(cp.to_json())
        assert np.array_equal(back.h1, cp.h1)
        assert back.field == "complex" and back.m == 1
