"""Reference-based quality metrics (PSNR, single-scale SSIM) and the
regional reflection-mask protocol.

Metrics operate on 8-bit images decoded to float in [0, 1], matching
common evaluation practice on JPEG benchmarks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_dilation
from scipy.signal import fftconvolve

from .imagecore import ImageError, LdrImage

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class MetricReport:
    psnr: float  # dB; inf when identical
    ssim: float
    regional_psnr: float | None = None
    regional_ssim: float | None = None
    mask_coverage: float | None = None

    def to_json_dict(self) -> dict:
        def enc(v):
            if v is None:
                return None
            return "inf" if np.isinf(v) else float(v)
        return {"psnr": enc(self.psnr), "ssim": float(self.ssim),
                "regional_psnr": enc(self.regional_psnr),
                "regional_ssim": enc(self.regional_ssim),
                "mask_coverage": enc(self.mask_coverage)}


def _as_float(img) -> np.ndarray:
    if isinstance(img, LdrImage):
        return img.data.astype(np.float64) / 255.0
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None].repeat(3, axis=2)
    return arr


def _check_shapes(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise ImageError(f"dimension mismatch: {a.shape} vs {b.shape}")


def psnr(a, b) -> float:
    """10*log10(1/MSE) over all channels, inputs in [0, 1]; inf when equal."""
    x, y = _as_float(a), _as_float(b)
    _check_shapes(x, y)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(1.0 / mse))


def _gaussian_window():
    r = np.arange(SSIM_WINDOW) - SSIM_WINDOW // 2
    g = np.exp(-(r**2) / (2.0 * SSIM_SIGMA**2))
    w = np.outer(g, g)
    return w / w.sum()


def _ssim_map(a, b) -> np.ndarray:
    """Per-window local SSIM map (valid convolution), averaged over channels."""
    x, y = _as_float(a), _as_float(b)
    _check_shapes(x, y)
    if min(x.shape[0], x.shape[1]) < SSIM_WINDOW:
        raise ImageError(f"image smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")
    w = _gaussian_window()[:, :, None]
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2

    def filt(z):
        return fftconvolve(z, w, mode="valid")

    mu_x = filt(x)
    mu_y = filt(y)
    sxx = filt(x * x) - mu_x**2
    syy = filt(y * y) - mu_y**2
    sxy = filt(x * y) - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * sxy + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (sxx + syy + c2)
    return (num / den).mean(axis=-1)


def ssim(a, b) -> float:
    """Mean single-scale SSIM, 11x11 Gaussian window sigma=1.5, L=1."""
    return float(np.mean(_ssim_map(a, b)))


def reflection_mask(input_i, reflection_free_t, threshold: float = 0.05,
                    dilation_radius: int = 2):
    """Binary reflection-region mask from |I - T|, dilated.

    Returns (mask bool (h, w), coverage fraction)."""
    x, y = _as_float(input_i), _as_float(reflection_free_t)
    _check_shapes(x, y)
    diff = np.abs(x - y).mean(axis=-1)
    mask = diff > threshold
    if dilation_radius > 0 and mask.any():
        r = int(dilation_radius)
        yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
        # square structuring element: radius-2 dilation of a point is 5x5
        structure = (np.maximum(np.abs(yy), np.abs(xx)) <= r)
        mask = binary_dilation(mask, structure=structure)
    return mask, float(mask.mean())


def regional_metric(metric, a, b, mask) -> float:
    """Evaluate `metric` ("psnr" or "ssim", or a callable) inside `mask`.

    PSNR uses the MSE over masked pixels; SSIM averages windows whose
    centers fall in the mask."""
    m = np.asarray(mask, dtype=bool)
    if not m.any():
        raise ValueError("regional metric needs a non-empty mask")
    name = metric if isinstance(metric, str) else getattr(metric, "__name__", "")
    if name == "psnr" or metric is psnr:
        x, y = _as_float(a), _as_float(b)
        _check_shapes(x, y)
        if m.shape != x.shape[:2]:
            raise ImageError("mask shape mismatch")
        mse = float(np.mean((x[m] - y[m]) ** 2))
        return float("inf") if mse == 0.0 else float(10.0 * np.log10(1.0 / mse))
    if name == "ssim" or metric is ssim:
        smap = _ssim_map(a, b)
        off = SSIM_WINDOW // 2
        centers = m[off:off + smap.shape[0], off:off + smap.shape[1]]
        if not centers.any():
            raise ValueError("mask contains no interior SSIM window centers")
        return float(smap[centers].mean())
    if callable(metric):
        return float(metric(a, b, m))
    raise ValueError(f"unknown metric {metric!r}")


def evaluate_pair(pred, gt, mask_source=None, threshold: float = 0.05,
                  dilation_radius: int = 2) -> MetricReport:
    """Global PSNR/SSIM of pred vs gt, plus regional variants when a
    (input_I, reflection_free_T) pair is given as the mask source."""
    report = MetricReport(psnr=psnr(pred, gt), ssim=ssim(pred, gt))
    if mask_source is None:
        return report
    mask, coverage = reflection_mask(mask_source[0], mask_source[1],
                                     threshold, dilation_radius)
    if not mask.any():
        return MetricReport(psnr=report.psnr, ssim=report.ssim, mask_coverage=0.0)
    return MetricReport(
        psnr=report.psnr, ssim=report.ssim,
        regional_psnr=regional_metric("psnr", pred, gt, mask),
        regional_ssim=regional_metric("ssim", pred, gt, mask),
        mask_coverage=coverage,
    )
