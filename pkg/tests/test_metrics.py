"""PSNR, SSIM, reflection mask, regional protocol."""

import numpy as np
import pytest

from glassgen.imagecore import ImageError, LdrImage
from glassgen.metrics import (evaluate_pair, psnr, reflection_mask,
                              regional_metric, ssim)


def _ldr(arr):
    return LdrImage(np.asarray(arr, dtype=np.uint8))


def _rand(shape=(32, 32, 3), seed=0):
    return np.random.default_rng(seed).random(shape)


def test_psnr_identical_is_infinite():
    x = _rand()
    assert psnr(x, x) == float("inf")


def test_psnr_uniform_difference():
    # oracle: |diff| = 0.1 -> MSE = 0.01 -> 20 dB
    a = np.full((16, 16, 3), 0.5)
    b = np.full((16, 16, 3), 0.6)
    assert psnr(a, b) == pytest.approx(20.0, abs=1e-9)


def test_psnr_checkerboard():
    # oracle: half the pixels differ by 1 -> MSE = 0.5 -> 3.0103 dB
    a = np.indices((16, 16)).sum(axis=0) % 2
    a = np.repeat(a[:, :, None], 3, axis=2).astype(np.float64)
    b = np.zeros_like(a)
    assert psnr(a, b) == pytest.approx(10 * np.log10(2.0), abs=1e-9)
    assert psnr(a, b) == pytest.approx(3.0103, abs=1e-4)


def test_psnr_symmetry_and_shape_check():
    a, b = _rand(seed=1), _rand(seed=2)
    assert psnr(a, b) == psnr(b, a)
    with pytest.raises(ImageError):
        psnr(a, _rand((16, 16, 3)))


def test_ssim_self_is_one():
    for seed in range(3):
        x = _rand(seed=seed)
        assert ssim(x, x) == pytest.approx(1.0, abs=1e-9)


def test_ssim_constant_images_closed_form():
    # oracle: zero variance -> SSIM = (2 mu_a mu_b + C1)/(mu_a^2 + mu_b^2 + C1)
    mu_a, mu_b, c1 = 0.4, 0.5, 0.01**2
    a = np.full((24, 24, 3), mu_a)
    b = np.full((24, 24, 3), mu_b)
    expect = (2 * mu_a * mu_b + c1) / (mu_a**2 + mu_b**2 + c1)
    assert ssim(a, b) == pytest.approx(expect, abs=1e-6)


def test_ssim_structure_inversion_negative():
    board = (np.indices((32, 32)).sum(axis=0) % 2).astype(np.float64)
    a = np.repeat(board[:, :, None], 3, axis=2)
    assert ssim(a, 1.0 - a) < 0.0


def test_ssim_symmetry_and_min_size():
    a, b = _rand(seed=3), _rand(seed=4)
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)
    with pytest.raises(ImageError):
        ssim(_rand((8, 8, 3)), _rand((8, 8, 3)))


def test_ssim_accepts_ldr_images():
    arr = (_rand(seed=5) * 255).astype(np.uint8)
    assert ssim(_ldr(arr), _ldr(arr)) == pytest.approx(1.0, abs=1e-9)


def test_reflection_mask_identical_inputs():
    x = (_rand(seed=6) * 255).astype(np.uint8)
    mask, coverage = reflection_mask(_ldr(x), _ldr(x))
    assert not mask.any() and coverage == 0.0


def test_reflection_mask_single_pixel_dilation():
    a = np.zeros((16, 16, 3), dtype=np.uint8)
    b = a.copy()
    b[8, 8] = 255  # one differing pixel
    mask, coverage = reflection_mask(_ldr(a), _ldr(b), threshold=0.05,
                                     dilation_radius=2)
    # oracle: radius-2 dilation of one pixel is a 5x5 block
    assert mask.sum() == 25
    assert mask[6:11, 6:11].all()
    assert coverage == pytest.approx(25 / 256)


def test_reflection_mask_region_coverage():
    a = np.zeros((20, 20, 3))
    b = a.copy()
    b[0:4, 0:20] = 0.3  # 20% of rows differ by 0.3
    mask, coverage = reflection_mask(a, b, threshold=0.05, dilation_radius=0)
    assert coverage == pytest.approx(0.20)
    _, grown = reflection_mask(a, b, threshold=0.05, dilation_radius=2)
    assert grown == pytest.approx(0.30)  # grows two rows downward


def test_reflection_mask_monotone_in_threshold():
    a = _rand(seed=7)
    b = _rand(seed=8)
    lo, _ = reflection_mask(a, b, threshold=0.05, dilation_radius=0)
    hi, _ = reflection_mask(a, b, threshold=0.2, dilation_radius=0)
    assert np.all(lo | ~hi)  # hi is a subset of lo


def test_regional_full_mask_equals_global():
    a, b = _rand(seed=9), _rand(seed=10)
    full = np.ones(a.shape[:2], dtype=bool)
    assert regional_metric("psnr", a, b, full) == pytest.approx(psnr(a, b))
    assert regional_metric("ssim", a, b, full) == pytest.approx(ssim(a, b), abs=1e-9)


def test_regional_psnr_known_mse():
    # oracle: masked MSE 0.04 -> 10*log10(1/0.04) = 13.9794 dB
    a = np.zeros((16, 16, 3))
    b = np.zeros((16, 16, 3))
    mask = np.zeros((16, 16), dtype=bool)
    mask[:4] = True
    b[:4] = 0.2
    assert regional_metric("psnr", a, b, mask) == pytest.approx(13.9794, abs=1e-4)


def test_regional_psnr_infinite_when_masked_region_matches():
    a = _rand(seed=11)
    b = a.copy()
    b[10:, :] += 0.1  # differs only outside the mask
    mask = np.zeros(a.shape[:2], dtype=bool)
    mask[:5] = True
    assert regional_metric("psnr", a, b, mask) == float("inf")


def test_regional_empty_mask_errors():
    a = _rand(seed=12)
    with pytest.raises(ValueError):
        regional_metric("psnr", a, a, np.zeros(a.shape[:2], dtype=bool))


def test_evaluate_pair_report():
    gt = (_rand(seed=13) * 255).astype(np.uint8)
    pred = np.clip(gt.astype(int) + 5, 0, 255).astype(np.uint8)
    inp = np.clip(gt.astype(int) + 60, 0, 255).astype(np.uint8)
    rep = evaluate_pair(_ldr(pred), _ldr(gt), mask_source=(_ldr(inp), _ldr(gt)))
    assert rep.psnr > 30.0
    assert 0.0 < rep.ssim <= 1.0
    assert rep.mask_coverage == 1.0  # everything differs by ~60/255
    assert rep.regional_psnr == pytest.approx(rep.psnr)
    d = rep.to_json_dict()
    assert set(d) == {"psnr", "ssim", "regional_psnr", "regional_ssim",
                      "mask_coverage"}
