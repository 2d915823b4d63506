"""Wavelet transform: block formulas, perfect reconstruction, energy, linearity."""

import numpy as np
import pytest

from wavepaint.wavelet import (
    SubbandSet,
    dwt2_haar,
    dwt2_multilevel,
    idwt2_haar,
    idwt2_multilevel,
)


def energy(x):
    return float(np.sum(np.square(np.asarray(x, dtype=np.float64))))


class TestSingleLevel:
    def test_hand_derived_block(self):
        # [[a, b], [c, d]] = [[1, 2], [3, 4]]:
        # ll=(1+2+3+4)/2, lh=(1+2-3-4)/2, hl=(1-2+3-4)/2, hh=(1-2-3+4)/2
        s = dwt2_haar(np.array([[1.0, 2.0], [3.0, 4.0]])[:, :, None])
        assert s.ll.item() == pytest.approx(5.0)
        assert s.lh.item() == pytest.approx(-2.0)
        assert s.hl.item() == pytest.approx(-1.0)
        assert s.hh.item() == pytest.approx(0.0)

    def test_constant_image_has_zero_detail(self):
        for v in (0.0, 1.0, -3.5):
            s = dwt2_haar(np.full((2, 2, 1), v))
            assert np.allclose(s.ll, 2.0 * v)
            assert np.all(s.lh == 0) and np.all(s.hl == 0) and np.all(s.hh == 0)

    def test_energy_conservation(self, rng):
        x = rng.normal(size=(4, 4, 3))
        s = dwt2_haar(x)
        assert s.energy() == pytest.approx(energy(x), rel=1e-5)

    def test_subband_shapes(self, rng):
        s = dwt2_haar(rng.normal(size=(8, 12, 5)))
        for band in s.bands:
            assert band.shape == (4, 6, 5)

    def test_roundtrip(self, rng):
        for shape in [(2, 2, 1), (8, 8, 3), (16, 6, 2), (32, 32, 4)]:
            x = rng.normal(size=shape)
            rec = idwt2_haar(dwt2_haar(x))
            assert np.max(np.abs(rec - x)) <= 1e-5 * max(1.0, np.max(np.abs(x)))

    def test_zero_subbands_give_zero_image(self):
        z = np.zeros((2, 2, 1))
        out = idwt2_haar(SubbandSet(z, z, z, z))
        assert out.shape == (4, 4, 1)
        assert np.all(out == 0)

    def test_constant_ll_inverts_to_constant(self):
        # ll = [[2v]], zero details -> constant 2x2 image of v (inverse block formulas).
        v = 0.7
        z = np.zeros((1, 1, 1))
        out = idwt2_haar(SubbandSet(np.full((1, 1, 1), 2.0 * v), z, z, z))
        assert np.allclose(out, v)

    def test_linearity(self, rng):
        x = rng.normal(size=(8, 8, 2))
        y = rng.normal(size=(8, 8, 2))
        a, b = 1.7, -0.3
        left = dwt2_haar(a * x + b * y)
        for band_l, band_x, band_y in zip(left.bands, dwt2_haar(x).bands, dwt2_haar(y).bands):
            assert np.max(np.abs(band_l - (a * band_x + b * band_y))) <= 1e-6

    def test_channel_independence(self, rng):
        x = rng.normal(size=(8, 8, 3))
        joint = dwt2_haar(x)
        for c in range(3):
            single = dwt2_haar(x[:, :, c])
            for bj, bs in zip(joint.bands, single.bands):
                assert np.array_equal(bj[:, :, c], bs)

    def test_odd_dims_rejected(self):
        with pytest.raises(ValueError, match="divisible"):
            dwt2_haar(np.zeros((3, 4, 1)))
        with pytest.raises(ValueError, match="divisible"):
            dwt2_haar(np.zeros((4, 6, 1))[:, :5])

    def test_nonfinite_rejected(self):
        x = np.zeros((4, 4, 1))
        x[0, 0, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            dwt2_haar(x)

    def test_mismatched_subbands_rejected(self):
        z2 = np.zeros((2, 2, 1))
        z3 = np.zeros((3, 3, 1))
        with pytest.raises(ValueError, match="match"):
            SubbandSet(z2, z2, z2, z3)


class TestMultiLevel:
    def test_level_one_equals_single(self, rng):
        x = rng.normal(size=(8, 8, 2))
        pyramid = dwt2_multilevel(x, 1)
        assert len(pyramid) == 1
        single = dwt2_haar(x)
        for a, b in zip(pyramid[0].bands, single.bands):
            assert np.array_equal(a, b)

    def test_level_two_constant(self):
        v = 0.25
        pyramid = dwt2_multilevel(np.full((4, 4, 1), v), 2)
        assert np.allclose(pyramid[1].ll, 4.0 * v)
        for s in pyramid:
            assert np.all(s.lh == 0) and np.all(s.hl == 0) and np.all(s.hh == 0)

    def test_level_three_cascade_roundtrip(self, rng):
        x = rng.normal(size=(8, 8, 3))
        pyramid = dwt2_multilevel(x, 3)
        assert [s.ll.shape for s in pyramid] == [(4, 4, 3), (2, 2, 3), (1, 1, 3)]
        # Bottom-up reconstruction oracle, written out explicitly.
        rec = pyramid[2].ll
        for s in reversed(pyramid):
            rec = idwt2_haar(SubbandSet(rec, s.lh, s.hl, s.hh))
        assert np.max(np.abs(rec - x)) <= 1e-5

    def test_idwt2_multilevel_helper_matches(self, rng):
        x = rng.normal(size=(16, 16, 2))
        assert np.max(np.abs(idwt2_multilevel(dwt2_multilevel(x, 2)) - x)) <= 1e-5

    def test_energy_conserved_at_every_level(self, rng):
        x = rng.normal(size=(16, 16, 2))
        pyramid = dwt2_multilevel(x, 3)
        total = energy(x)
        for s in pyramid:
            detail = sum(energy(b) for b in (s.lh, s.hl, s.hh))
            assert detail + energy(s.ll) == pytest.approx(total, rel=1e-5)
            total = energy(s.ll)

    def test_divisibility_enforced(self):
        with pytest.raises(ValueError, match="divisible"):
            dwt2_multilevel(np.zeros((4, 4, 1)), 3)
        with pytest.raises(ValueError, match="level"):
            dwt2_multilevel(np.zeros((4, 4, 1)), 0)
