"""Image buffers, sRGB conversion, HDR/LDR I/O."""

import numpy as np
import pytest

from glassgen import exr, imagecore
from glassgen.imagecore import (ImageError, LdrImage, RadianceImage, hconcat,
                                load_hdr, load_ldr, srgb_decode, srgb_encode,
                                write_jpeg, write_png)

# Oracle: sRGB encode of the linear breakpoint 0.0031308 is 12.92 * 0.0031308
BREAK_ENCODED = 0.040449936  # 12.92 * 0.0031308


def test_srgb_round_trip_accuracy():
    x = np.random.default_rng(1).random(10000)
    err = np.abs(srgb_decode(srgb_encode(x)) - x)
    assert err.max() < 1e-6


def test_srgb_branch_continuity():
    lo = srgb_encode(imagecore.SRGB_BREAK - 1e-9)
    hi = srgb_encode(imagecore.SRGB_BREAK + 1e-9)
    assert abs(hi - lo) < 1e-7
    assert abs(srgb_encode(imagecore.SRGB_BREAK) - BREAK_ENCODED) < 1e-7


def test_srgb_known_values():
    assert srgb_encode(0.0) == 0.0
    assert srgb_encode(1.0) == pytest.approx(1.0, abs=1e-12)
    # oracle: 1.055 * 0.5**(1/2.4) - 0.055
    assert srgb_encode(0.5) == pytest.approx(0.7353569830524495, abs=1e-12)


def test_srgb_rejects_bad_input():
    with pytest.raises(ValueError):
        srgb_encode(np.array([np.nan]))
    with pytest.raises(ValueError):
        srgb_decode(np.array([-0.1]))
    with pytest.raises(ValueError):
        srgb_decode(np.array([1.1]))


def test_radiance_image_validation():
    with pytest.raises(ImageError):
        RadianceImage(np.zeros((4, 4)))  # not 3-channel
    with pytest.raises(ImageError):
        RadianceImage(np.full((2, 2, 3), np.inf, dtype=np.float32))
    with pytest.raises(ImageError):
        RadianceImage(-np.ones((2, 2, 3), dtype=np.float32))
    img = RadianceImage(np.ones((2, 3, 3), dtype=np.float32))
    assert (img.height, img.width) == (2, 3)
    with pytest.raises(ValueError):
        img.data[0, 0, 0] = 2.0  # frozen buffer


def test_ldr_image_validation():
    with pytest.raises(ImageError):
        LdrImage(np.zeros((2, 2, 3), dtype=np.float32))
    img = LdrImage(np.zeros((2, 2, 3), dtype=np.uint8))
    assert img.width == 2


def test_exr_round_trip_through_imagecore(tmp_path):
    img = RadianceImage(np.random.default_rng(0).random((9, 7, 3)).astype(np.float32))
    imagecore.write_exr(img, tmp_path / "x.exr")
    back = load_hdr(tmp_path / "x.exr")
    assert np.array_equal(back.data, img.data)
    assert back.clamped_negatives == 0


def test_load_hdr_clamps_negatives(tmp_path):
    data = np.full((4, 4, 3), 0.5, dtype=np.float32)
    data[0, 0, 0] = -0.25
    exr.write_exr(tmp_path / "neg.exr", data)  # bypasses RadianceImage checks
    img = load_hdr(tmp_path / "neg.exr")
    assert img.clamped_negatives == 1
    assert img.data.min() == 0.0


def test_load_hdr_unsupported_extension(tmp_path):
    with pytest.raises(ImageError):
        load_hdr(tmp_path / "nope.tiff")


def test_jpeg_flat_field_round_trip(tmp_path):
    img = LdrImage(np.full((32, 32, 3), 128, dtype=np.uint8))
    write_jpeg(img, 90, tmp_path / "f.jpg")
    back = load_ldr(tmp_path / "f.jpg")
    assert back.data.shape == (32, 32, 3)
    # flat fields survive JPEG nearly exactly
    assert np.abs(back.data.astype(int) - 128).max() <= 1


def test_jpeg_quality_validated(tmp_path):
    img = LdrImage(np.zeros((8, 8, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        write_jpeg(img, 0, tmp_path / "x.jpg")
    with pytest.raises(ValueError):
        write_jpeg(img, 101, tmp_path / "x.jpg")


def test_jpeg_lower_quality_smaller_file(tmp_path):
    arr = (np.random.default_rng(2).random((64, 64, 3)) * 255).astype(np.uint8)
    img = LdrImage(arr)
    write_jpeg(img, 95, tmp_path / "hi.jpg")
    write_jpeg(img, 30, tmp_path / "lo.jpg")
    assert (tmp_path / "lo.jpg").stat().st_size < (tmp_path / "hi.jpg").stat().st_size


def test_png_lossless_round_trip(tmp_path):
    arr = (np.random.default_rng(3).random((16, 16, 3)) * 255).astype(np.uint8)
    write_png(LdrImage(arr), tmp_path / "p.png")
    assert np.array_equal(load_ldr(tmp_path / "p.png").data, arr)


def test_hconcat():
    a = LdrImage(np.zeros((4, 2, 3), dtype=np.uint8))
    b = LdrImage(np.full((4, 3, 3), 9, dtype=np.uint8))
    out = hconcat([a, b])
    assert out.data.shape == (4, 5, 3)
    assert np.all(out.data[:, 2:] == 9)
    with pytest.raises(ImageError):
        hconcat([a, LdrImage(np.zeros((5, 2, 3), dtype=np.uint8))])
    with pytest.raises(ImageError):
        hconcat([a, RadianceImage(np.zeros((4, 2, 3), dtype=np.float32))])
