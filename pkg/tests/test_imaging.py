import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import direct_gaussian_blur
from wlmf.imaging import (
    AugmentParams,
    BinaryMask,
    GrayImage,
    ImageLoadError,
    RawFormat,
    RawSizeMismatchError,
    UnreadableImageError,
    UnsupportedFormatError,
    apply_mask_smooth,
    augment,
    augment_dataset,
    gaussian_kernel,
    load_image,
    load_mask,
    rotate,
    save_image,
)


class TestTypes:
    def test_gray_image_invariants(self):
        img = GrayImage(np.array([[1.0, 2.0, 3.0]]), 8)
        assert (img.width, img.height) == (3, 1)
        for bad in (np.zeros((0, 3)), np.array([[-1.0]]), np.array([[np.nan]]), np.zeros(4)):
            with pytest.raises(ValueError):
                GrayImage(bad)

    def test_mask_needs_a_true_pixel(self):
        with pytest.raises(ValueError):
            BinaryMask(np.zeros((3, 3)))

    @pytest.mark.parametrize("kwargs", [{"shear": -0.1}, {"zoom": -1}, {"rotation": 90}, {"rotation": -95}])
    def test_augment_params(self, kwargs):
        with pytest.raises(ValueError):
            AugmentParams(**kwargs)


class TestLoad:
    def test_pgm_binary(self, tmp_path):
        path = tmp_path / "a.pgm"
        path.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 128, 255, 64]))
        img = load_image(path, "pgm")
        assert img.data.ravel().tolist() == [0, 128, 255, 64]
        assert img.bit_depth == 8

    def test_pgm_ascii_with_comment(self, tmp_path):
        path = tmp_path / "a.pgm"
        path.write_text("P2\n# comment\n2 2\n255\n0 128\n255 64\n")
        assert load_image(path).data.ravel().tolist() == [0, 128, 255, 64]

    def test_raw16_big_endian(self, tmp_path):
        path = tmp_path / "a.img"
        path.write_bytes(bytes([0, 1, 0, 2, 0, 3, 0, 4]))
        img = load_image(path, RawFormat(2, 2, True, 12))
        assert img.data.ravel().tolist() == [1, 2, 3, 4]
        assert load_image(path, RawFormat(2, 2, False, 16)).data.ravel().tolist() == [256, 512, 768, 1024]

    def test_raw16_clipped_to_significant_bits(self, tmp_path):
        path = tmp_path / "a.raw"
        path.write_bytes(bytes([0xFF, 0xFF, 0, 1]))
        assert load_image(path, RawFormat(2, 1, True, 12)).data.ravel().tolist() == [4095, 1]

    def test_raw16_size_mismatch(self, tmp_path):
        path = tmp_path / "a.img"
        path.write_bytes(bytes(6))
        with pytest.raises(RawSizeMismatchError):
            load_image(path, RawFormat(2, 2))

    def test_distinct_errors(self, tmp_path):
        with pytest.raises(UnreadableImageError):
            load_image(tmp_path / "missing.pgm")
        bad = tmp_path / "bad.pgm"
        bad.write_bytes(b"P5\n4 4\n255\n" + bytes(3))
        with pytest.raises(UnreadableImageError):
            load_image(bad)
        p6 = tmp_path / "colour.pgm"
        p6.write_bytes(b"P6\n1 1\n255\n" + bytes(3))
        with pytest.raises(UnsupportedFormatError):
            load_image(p6)
        other = tmp_path / "x.tif"
        other.write_bytes(b"II*")
        with pytest.raises(UnsupportedFormatError):
            load_image(other)
        with pytest.raises(UnsupportedFormatError):
            load_image(bad, "jpeg")
        for cls in (UnreadableImageError, RawSizeMismatchError, UnsupportedFormatError):
            assert issubclass(cls, ImageLoadError)

    @pytest.mark.parametrize("suffix,depth", [(".pgm", 8), (".pgm", 16), (".png", 8), (".png", 16)])
    def test_round_trip(self, tmp_path, suffix, depth):
        rng = np.random.default_rng(0)
        data = rng.integers(0, 2**depth, (7, 5)).astype(float)
        path = tmp_path / f"img{suffix}"
        save_image(GrayImage(data, depth), path)
        first = load_image(path)
        save_image(first, path)
        assert np.array_equal(load_image(path).data, data)

    def test_mask_file(self, tmp_path):
        path = tmp_path / "m.png"
        save_image(GrayImage(np.array([[0.0, 255.0], [0.0, 1.0]])), path)
        assert load_mask(path).data.tolist() == [[False, True], [False, True]]


class TestMaskSmooth:
    def test_identity(self):
        x = np.random.default_rng(1).random((9, 7))
        assert np.array_equal(apply_mask_smooth(x, np.ones((9, 7), bool), 0), x)

    def test_single_pixel(self):
        mask = np.zeros((5, 5), bool)
        mask[2, 3] = True
        out = apply_mask_smooth(np.full((5, 5), 100.0), mask, 0)
        expected = np.zeros((5, 5))
        expected[2, 3] = 100
        assert np.array_equal(out, expected)

    def test_constant_interior(self):
        out = apply_mask_smooth(np.full((32, 32), 50.0), np.ones((32, 32), bool), 2)
        assert np.max(np.abs(out[6:-6, 6:-6] - 50)) < 1e-9
        # reflection keeps the border at 50 too
        assert np.max(np.abs(out - 50)) < 1e-9

    @pytest.mark.parametrize("sigma", [0.8, 2.0, 3.5])
    def test_matches_direct_convolution(self, sigma):
        rng = np.random.default_rng(2)
        img = rng.random((24, 30))
        mask = rng.random((24, 30)) > 0.3
        ref = direct_gaussian_blur(np.where(mask, img, 0.0), sigma)
        assert np.max(np.abs(apply_mask_smooth(img, mask, sigma) - ref)) < 1e-12

    def test_support_cutoff(self):
        sigma = 1.5
        mask = np.zeros((40, 40), bool)
        mask[5:9, 5:9] = True
        out = apply_mask_smooth(np.ones((40, 40)), mask, sigma)
        rr, cc = np.mgrid[0:40, 0:40]
        pts = np.argwhere(mask)
        dist = np.min(np.hypot(rr[..., None] - pts[:, 0], cc[..., None] - pts[:, 1]), axis=-1)
        assert np.all(out[dist > 6 * sigma] == 0)
        assert np.all(out[mask] > 0)

    def test_kernel_normalized(self):
        k = gaussian_kernel(2.0)
        assert k.size == 13 and abs(k.sum() - 1) < 1e-15 and np.array_equal(k, k[::-1])

    def test_errors(self):
        with pytest.raises(ValueError):
            apply_mask_smooth(np.ones((3, 3)), np.ones((3, 4), bool))
        with pytest.raises(ValueError):
            apply_mask_smooth(np.ones((3, 3)), np.ones((3, 3), bool), -1)


class TestAugment:
    def test_zero_params_identity(self):
        x = np.random.default_rng(3).random((16, 12))
        out = augment(GrayImage(x), AugmentParams(0, 0, 0, 1), seed=0)
        assert len(out) == 3 and all(np.array_equal(o, x) for o in out)

    def test_count_and_shape(self):
        x = np.random.default_rng(4).random((20, 24))
        out = augment(x, AugmentParams(), seed=1)
        assert len(out) == 96 and all(o.shape == x.shape for o in out)
        assert all(np.all(o >= 0) for o in out)

    def test_deterministic(self):
        x = np.random.default_rng(5).random((16, 16))
        a = augment(x, AugmentParams(count_per_transform=4), seed=7)
        b = augment(x, AugmentParams(count_per_transform=4), seed=7)
        c = augment(x, AugmentParams(count_per_transform=4), seed=8)
        assert all(np.array_equal(u, v) for u, v in zip(a, b))
        assert not all(np.array_equal(u, v) for u, v in zip(a, c))

    def test_rotate_180(self):
        assert rotate(np.array([[1.0, 2.0], [3.0, 4.0]]), 180).tolist() == [[4, 3], [2, 1]]

    def test_rotate_90_square(self):
        x = np.arange(9.0).reshape(3, 3)
        assert np.array_equal(rotate(x, 90), np.rot90(x, 1)) or np.array_equal(rotate(x, 90), np.rot90(x, -1))

    def test_dataset(self):
        imgs = [np.random.default_rng(s).random((8, 8)) for s in range(2)]
        out = augment_dataset(imgs, AugmentParams(count_per_transform=2), seed=0)
        assert len(out) == 2 * 7
        assert np.array_equal(out[0], imgs[0]) and np.array_equal(out[7], imgs[1])

    @settings(max_examples=20, deadline=None)
    @given(arrays(np.float64, (6, 5), elements=st.floats(0, 1e4)), st.integers(0, 2**31))
    def test_identity_property(self, x, seed):
        for o in augment(x, AugmentParams(0, 0, 0, 2), seed):
            assert np.array_equal(o, x)
