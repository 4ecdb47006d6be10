"""Camera-simulation post-processing: exposure, gray-world white balance,
sRGB tonemapping, the legacy 8-bit blend baseline and training-pair assembly.

All five layers of a quintuple are tonemapped with one shared PostParams
(computed from the full image I) so the separation ground truth stays
radiometrically consistent across the set.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .envmap import luminance
from .imagecore import ImageError, LdrImage, RadianceImage, hconcat, srgb_encode

EXPOSURE_TARGET_PERCENTILE = 99.0
EXPOSURE_TARGET_LEVEL = 0.95  # pre-gamma level the percentile maps to
EXPOSURE_BOUNDS = (0.25, 4.0)


@dataclass(frozen=True)
class PostParams:
    """Shared post-processing parameters for one quintuple."""

    exposure: float = 1.0
    awb_gains: tuple[float, float, float] = (1.0, 1.0, 1.0)
    jpeg_quality: int = 90
    clip_stats: float = 0.0  # fraction of clipped pixels, filled by tonemap

    def __post_init__(self):
        if not self.exposure > 0:
            raise ValueError("exposure must be positive")
        if any(not g > 0 for g in self.awb_gains):
            raise ValueError("awb_gains must be positive")
        if not 1 <= int(self.jpeg_quality) <= 100:
            raise ValueError("jpeg_quality must lie in [1, 100]")


def compute_awb_gains(img: RadianceImage) -> tuple[float, float, float]:
    """Gray-world white-balance gains, normalized so the green gain is 1."""
    means = img.data.reshape(-1, 3).mean(axis=0, dtype=np.float64)
    if np.any(means <= 0):
        raise ValueError("gray-world gains need a nonzero mean in every channel")
    gains = means[1] / means
    return (float(gains[0]), 1.0, float(gains[2]))


def compute_exposure(img: RadianceImage) -> float:
    """Exposure scaling the 99th-percentile luminance of I to 0.95, clamped
    to [0.25, 4.0]."""
    lum = luminance(img.data.astype(np.float64))
    p = float(np.percentile(lum, EXPOSURE_TARGET_PERCENTILE))
    if p <= 0:
        return EXPOSURE_BOUNDS[1]
    return float(np.clip(EXPOSURE_TARGET_LEVEL / p, *EXPOSURE_BOUNDS))


def tonemap(img: RadianceImage, params: PostParams) -> tuple[LdrImage, PostParams]:
    """Linear -> 8-bit sRGB: clamp(exposure*gain*value, 0, 1), sRGB encode,
    round. Returns the LDR image and params with clip_stats filled in."""
    gains = np.asarray(params.awb_gains, dtype=np.float64)
    scaled = img.data.astype(np.float64) * params.exposure * gains
    clipped = float(np.count_nonzero(scaled > 1.0) / scaled.size)
    encoded = srgb_encode(np.clip(scaled, 0.0, 1.0))
    bytes_ = np.rint(encoded * 255.0).astype(np.uint8)
    return LdrImage(bytes_), replace(params, clip_stats=clipped)


def shared_tonemap_quintuple(images: dict[str, RadianceImage],
                             jpeg_quality: int = 90):
    """Tonemap the five layers {I,T,B,R,MR} with one PostParams computed
    from I. Returns ({mode: LdrImage}, PostParams with I's clip fraction)."""
    required = {"I", "T", "B", "R", "MR"}
    if set(images) != required:
        raise ValueError(f"expected layers {sorted(required)}, got {sorted(images)}")
    shapes = {im.data.shape for im in images.values()}
    if len(shapes) > 1:
        raise ImageError(f"layer dimension mismatch: {sorted(shapes)}")
    full = images["I"]
    params = PostParams(exposure=compute_exposure(full),
                        awb_gains=compute_awb_gains(full),
                        jpeg_quality=jpeg_quality)
    ldr = {}
    for mode, im in images.items():
        ldr[mode], out_params = tonemap(im, params)
        if mode == "I":
            params = out_params
    return ldr, params


def legacy_blend(t: LdrImage, r: LdrImage, alpha: float, beta: float) -> LdrImage:
    """8-bit blend baseline I = clamp(alpha*T + beta*R - T*R, 0, 1)."""
    if not 0.0 <= alpha <= 1.5 or not 0.0 <= beta <= 1.5:
        raise ValueError("alpha and beta must lie in [0, 1.5]")
    if t.data.shape != r.data.shape:
        raise ImageError("legacy_blend dimension mismatch")
    tf = t.data.astype(np.float64) / 255.0
    rf = r.data.astype(np.float64) / 255.0
    blend = np.clip(alpha * tf + beta * rf - tf * rf, 0.0, 1.0)
    return LdrImage(np.rint(blend * 255.0).astype(np.uint8))


def build_training_pair(i: LdrImage, t: LdrImage, r: LdrImage):
    """Composite [I:T:R] and control [I:white:white] for one sample."""
    white = LdrImage(np.full_like(i.data, 255))
    composite = hconcat([i, t, r])
    control = hconcat([i, white, white])
    return composite, control
