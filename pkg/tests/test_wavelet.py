import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wlmf.wavelet import (
    WaveletPyramid,
    daubechies_filters,
    detail_scale_factor,
    dwt2,
    get_filters,
    idwt2,
)

pywt = pytest.importorskip("pywt")


def interior(side, taps):
    """Output indices whose periodized filter support does not cross the seam."""
    n = 2 * side
    first = math.ceil((taps // 2 - 1) / 2)
    last = (n - 1 - taps // 2) // 2
    return slice(first, last + 1)


def centred_moment(filt, p):
    k = np.arange(len(filt))
    t = (k - k.mean()) / len(filt)
    return float(np.sum(t**p * filt))


class TestFilters:
    def test_haar_exact(self):
        fp = daubechies_filters(1)
        assert np.array_equal(fp.lowpass, [2**-0.5, 2**-0.5])

    def test_db2_closed_form(self):
        s3, d = math.sqrt(3), 4 * math.sqrt(2)
        expected = [(1 + s3) / d, (3 + s3) / d, (3 - s3) / d, (1 - s3) / d]
        np.testing.assert_allclose(daubechies_filters(2).lowpass, expected, atol=1e-14)

    @pytest.mark.parametrize("n", range(1, 11))
    def test_invariants(self, n):
        fp = daubechies_filters(n)
        L = len(fp.lowpass)
        assert L == 2 * n and fp.vanishing_moments == n
        k = np.arange(L)
        np.testing.assert_allclose(fp.highpass, (-1.0) ** k * fp.lowpass[::-1], atol=0)
        assert abs(fp.lowpass.sum() - math.sqrt(2)) < 1e-10
        for p in range(n):
            assert abs(centred_moment(fp.highpass, p)) < 1e-8
        # the first non-vanishing moment really is nonzero
        assert abs(centred_moment(fp.highpass, n)) > 1e-8
        for m in range(n):
            shifted = np.sum(fp.lowpass[2 * m :] * fp.lowpass[: L - 2 * m])
            assert abs(shifted - (1.0 if m == 0 else 0.0)) < 1e-12

    @pytest.mark.parametrize("n", range(1, 11))
    def test_matches_pywavelets(self, n):
        ref = pywt.Wavelet(f"db{n}")
        np.testing.assert_allclose(daubechies_filters(n).lowpass, ref.rec_lo, atol=1e-12)
        np.testing.assert_allclose(daubechies_filters(n).highpass, ref.rec_hi, atol=1e-12)

    @pytest.mark.parametrize("bad", [0, 11, -1, 2.5, "3"])
    def test_unsupported_order(self, bad):
        with pytest.raises(ValueError):
            daubechies_filters(bad)

    def test_names(self):
        assert get_filters("haar").name == "db1"
        assert get_filters(" DB3 ").vanishing_moments == 3
        with pytest.raises(ValueError):
            get_filters("sym4")

    def test_filters_are_read_only(self):
        with pytest.raises(ValueError):
            daubechies_filters(3).lowpass[0] = 1.0


class TestDwt:
    def test_constant_image(self):
        pyr = dwt2(np.full((32, 32), 7.0), "db3", levels=3)
        for j in range(1, 4):
            for band in pyr.subbands(j):
                assert np.max(np.abs(band)) < 1e-10
        np.testing.assert_allclose(pyr.approximation, pyr.approximation.flat[0], atol=1e-10)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_polynomial_annihilation_interior(self, n):
        size = 64
        x = np.arange(size, dtype=float)
        img = np.tile(((x - size / 2) / size) ** (n - 1), (size, 1))
        pyr = dwt2(img, f"db{n}", levels=1)
        for band in pyr.subbands(1):
            inner = band[:, interior(band.shape[1], 2 * n)]
            assert inner.size and np.max(np.abs(inner)) < 1e-8

    def test_ramp_db3(self):
        img = np.tile(np.arange(64, dtype=float), (64, 1))
        pyr = dwt2(img, "db3", levels=1)
        for band in pyr.subbands(1):
            inner = band[:, interior(band.shape[1], 6)]
            assert np.max(np.abs(inner)) < 1e-8

    @pytest.mark.filterwarnings("ignore:Level value")
    @pytest.mark.parametrize("wavelet", ["db1", "db2", "db3", "db6"])
    def test_matches_pywavelets_periodization(self, wavelet):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((64, 64))
        ours = dwt2(x, wavelet, levels=3)
        ref = pywt.wavedec2(x, wavelet, mode="periodization", level=3)
        np.testing.assert_allclose(ours.approximation, ref[0], atol=1e-12)
        for j in range(1, 4):
            for a, b in zip(ours.subbands(j), ref[-j]):
                np.testing.assert_allclose(a, b, atol=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(1)
        for wavelet in ("db1", "db2", "db3", "db8"):
            x = rng.standard_normal((64, 64))
            assert np.max(np.abs(idwt2(dwt2(x, wavelet, 4)) - x)) < 1e-10

    @pytest.mark.parametrize("shape", [(33, 47), (50, 64), (21, 21)])
    def test_round_trip_odd_sizes(self, shape):
        x = np.random.default_rng(2).random(shape)
        pyr = dwt2(x, "db2", levels=2)
        assert pyr.shapes[0] == shape
        out = idwt2(pyr)
        assert out.shape == shape
        assert np.max(np.abs(out - x)) < 1e-10

    def test_subband_dimensions(self):
        pyr = dwt2(np.random.default_rng(3).random((40, 72)), "db2", levels=3)
        for j in range(1, 4):
            expect = (math.ceil(40 / 2**j), math.ceil(72 / 2**j))
            assert all(b.shape == expect for b in pyr.subbands(j))

    def test_energy_conservation_l2(self):
        x = np.random.default_rng(4).standard_normal((128, 128))
        pyr = dwt2(x, "db3", levels=5, normalization=2)
        energy = np.sum(pyr.approximation**2) + sum(
            np.sum(b**2) for bands in pyr.details for b in bands
        )
        assert abs(energy - np.sum(x**2)) < 1e-8

    def test_l1_normalization(self):
        x = np.random.default_rng(5).standard_normal((64, 64))
        l2 = dwt2(x, "db3", levels=3, normalization=2)
        l1 = dwt2(x, "db3", levels=3, normalization=1)
        for j in range(1, 4):
            assert detail_scale_factor(j, 1) == 2.0**-j
            for a, b in zip(l1.subbands(j), l2.subbands(j)):
                np.testing.assert_allclose(a, b * 2.0**-j, rtol=1e-14)
        assert np.allclose(idwt2(l1), x, atol=1e-10)

    def test_orientation_convention(self):
        # stripes varying down the rows light up the horizontal band only
        rows = np.tile(np.array([1.0, -1.0] * 16)[:, None], (1, 32))
        h, v, d = dwt2(rows, "db1", levels=1).subbands(1)
        assert np.max(np.abs(h)) > 1 and np.max(np.abs(v)) < 1e-12 and np.max(np.abs(d)) < 1e-12
        h, v, d = dwt2(rows.T, "db1", levels=1).subbands(1)
        assert np.max(np.abs(v)) > 1 and np.max(np.abs(h)) < 1e-12

    def test_errors(self):
        with pytest.raises(ValueError):
            dwt2(np.zeros((4, 4)), "db3", levels=1)
        with pytest.raises(ValueError):
            dwt2(np.zeros((16, 16)), "db1", levels=5)
        with pytest.raises(ValueError):
            dwt2(np.zeros((16, 16)), "db1", levels=0)
        with pytest.raises(ValueError):
            dwt2(np.zeros(16), "db1", levels=1)

    @settings(max_examples=25, deadline=None)
    @given(
        arrays(np.float64, (16, 16), elements=st.floats(-1e3, 1e3)),
        arrays(np.float64, (16, 16), elements=st.floats(-1e3, 1e3)),
        st.floats(-10, 10),
        st.floats(-10, 10),
    )
    def test_linearity(self, x, y, a, b):
        lhs = dwt2(a * x + b * y, "db2", levels=2)
        px, py = dwt2(x, "db2", levels=2), dwt2(y, "db2", levels=2)
        scale = 1 + abs(a) * np.abs(x).max() + abs(b) * np.abs(y).max()
        for j in (1, 2):
            for l_, u, v in zip(lhs.subbands(j), px.subbands(j), py.subbands(j)):
                assert np.max(np.abs(l_ - (a * u + b * v))) <= 1e-10 * scale


class TestIdwt:
    def test_zero_pyramid(self):
        fp = get_filters("db2")
        pyr = WaveletPyramid(
            [tuple(np.zeros((8 >> (j - 1),) * 2) for _ in range(3)) for j in (1, 2)],
            np.zeros((4, 4)),
            fp,
            2,
        )
        assert np.array_equal(idwt2(pyr), np.zeros((16, 16)))

    def test_doubling(self):
        x = np.random.default_rng(6).random((32, 32))
        pyr = dwt2(x, "db3", levels=2)
        assert np.allclose(idwt2(pyr.scaled(2.0)), 2 * x, atol=1e-10)

    def test_inconsistent_subbands(self):
        pyr = dwt2(np.random.default_rng(7).random((32, 32)), "db2", levels=2)
        h, v, d = pyr.details[0]
        pyr.details[0] = (h, v[:-1], d)
        with pytest.raises(ValueError):
            idwt2(pyr)
        pyr.details[0] = (h, v)
        with pytest.raises(ValueError):
            idwt2(pyr)
