"""Linear HDR / 8-bit LDR image buffers, sRGB conversion and file I/O."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import exr

# cv2 is only used for Radiance .hdr files; Pillow handles LDR formats
import cv2
from PIL import Image

SRGB_BREAK = 0.0031308
_SRGB_BREAK_ENC = 12.92 * SRGB_BREAK


class ImageError(ValueError):
    """Invalid image data or unreadable file."""


@dataclass(frozen=True)
class RadianceImage:
    """Linear RGB radiance buffer, float32, shape (height, width, 3)."""

    data: np.ndarray
    clamped_negatives: int = 0

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ImageError(f"expected (h, w, 3) array, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ImageError("radiance must be finite")
        if np.any(arr < 0):
            raise ImageError("radiance must be non-negative")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class LdrImage:
    """8-bit sRGB-encoded RGB buffer, shape (height, width, 3)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.dtype != np.uint8:
            raise ImageError(f"LDR data must be uint8, got {arr.dtype}")
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ImageError(f"expected (h, w, 3) array, got {arr.shape}")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


def srgb_encode(c):
    """Linear [0, inf) -> sRGB-encoded [0, 1] (IEC 61966-2-1 forward curve)."""
    c = np.asarray(c, dtype=np.float64)
    if not np.all(np.isfinite(c)):
        raise ValueError("non-finite input to srgb_encode")
    c = np.clip(c, 0.0, 1.0)
    out = np.where(c <= SRGB_BREAK, 12.92 * c, 1.055 * np.power(c, 1.0 / 2.4) - 0.055)
    return out if out.ndim else float(out)


def srgb_decode(e):
    """Inverse of srgb_encode on [0, 1]."""
    e = np.asarray(e, dtype=np.float64)
    if np.any(e < 0) or np.any(e > 1) or not np.all(np.isfinite(e)):
        raise ValueError("srgb_decode input must lie in [0, 1]")
    out = np.where(e <= _SRGB_BREAK_ENC, e / 12.92, np.power((e + 0.055) / 1.055, 2.4))
    return out if out.ndim else float(out)


def load_hdr(path) -> RadianceImage:
    """Load a Radiance .hdr or OpenEXR .exr file as linear radiance.

    Negative components are clamped to zero; the clamp count is recorded
    on the returned image.
    """
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".exr":
        rgb = exr.read_exr(path)
    elif ext == ".hdr":
        bgr = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
        if bgr is None:
            raise ImageError(f"cannot read {path}")
        if bgr.ndim != 3 or bgr.shape[2] != 3:
            raise ImageError(f"{path}: expected 3-channel HDR")
        rgb = bgr[:, :, ::-1].astype(np.float32)
    else:
        raise ImageError(f"{path}: unsupported HDR format {ext!r}")
    if not np.all(np.isfinite(rgb)):
        raise ImageError(f"{path}: non-finite pixel values")
    neg = int(np.count_nonzero(rgb < 0))
    if neg:
        rgb = np.maximum(rgb, 0.0)
    return RadianceImage(rgb, clamped_negatives=neg)


def write_exr(img: RadianceImage, path) -> None:
    """Write 32-bit float RGB EXR; round-trips losslessly through load_hdr."""
    exr.write_exr(path, img.data)


def load_ldr(path) -> LdrImage:
    """Load a JPEG or PNG as 8-bit sRGB."""
    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"))
    return LdrImage(rgb)


def write_jpeg(img: LdrImage, quality: int, path) -> None:
    """Write a baseline JPEG at the given quality (1..100)."""
    if not 1 <= int(quality) <= 100:
        raise ValueError(f"jpeg quality must be in [1, 100], got {quality}")
    Image.fromarray(img.data).save(path, format="JPEG", quality=int(quality), subsampling=1)


def write_png(img: LdrImage, path) -> None:
    Image.fromarray(img.data).save(path, format="PNG")


def hconcat(images):
    """Concatenate same-height, same-kind images left to right."""
    if not images:
        raise ValueError("hconcat needs at least one image")
    kinds = {type(im) for im in images}
    if len(kinds) > 1:
        raise ImageError("hconcat images must all be the same kind")
    heights = {im.height for im in images}
    if len(heights) > 1:
        raise ImageError(f"hconcat height mismatch: {sorted(heights)}")
    data = np.concatenate([im.data for im in images], axis=1)
    kind = kinds.pop()
    return kind(data)
