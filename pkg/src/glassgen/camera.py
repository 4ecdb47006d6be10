"""Thin-lens camera: primary ray generation with depth of field."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# 35mm-equivalent sensor height, used only to convert f-numbers to an
# aperture radius in meters
SENSOR_HEIGHT_M = 0.024


@dataclass(frozen=True)
class CameraSpec:
    position: tuple[float, float, float]
    look_at: tuple[float, float, float]
    up: tuple[float, float, float] = (0.0, 1.0, 0.0)
    vertical_fov: float = 45.0  # degrees
    focal_distance: float = 2.0  # meters
    aperture_radius: float = 0.0  # meters; 0 = pinhole
    width: int = 256
    height: int = 256

    def __post_init__(self):
        if not 1.0 < self.vertical_fov < 120.0:
            raise ValueError(f"vertical_fov {self.vertical_fov} outside (1, 120) degrees")
        if not self.focal_distance > 0:
            raise ValueError("focal_distance must be positive")
        if self.aperture_radius < 0:
            raise ValueError("aperture_radius must be >= 0")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("resolution must be positive")

    def basis(self):
        """Right-handed (right, up, forward) orthonormal camera frame."""
        pos = np.asarray(self.position, dtype=np.float64)
        fwd = np.asarray(self.look_at, dtype=np.float64) - pos
        fwd /= np.linalg.norm(fwd)
        right = np.cross(fwd, np.asarray(self.up, dtype=np.float64))
        right /= np.linalg.norm(right)
        up = np.cross(right, fwd)
        return right, up, fwd


def aperture_radius_from_f_number(f_number: float, vertical_fov: float) -> float:
    """Aperture radius in meters for an f-number, via the 35mm-equivalent
    focal length implied by the vertical field of view."""
    focal_length = 0.5 * SENSOR_HEIGHT_M / np.tan(np.radians(vertical_fov) / 2.0)
    return focal_length / (2.0 * f_number)


def concentric_disk(u, v):
    """Map [0,1)^2 to the unit disk with the low-distortion concentric mapping."""
    ox = 2.0 * np.asarray(u, dtype=np.float64) - 1.0
    oy = 2.0 * np.asarray(v, dtype=np.float64) - 1.0
    zero = (ox == 0) & (oy == 0)
    use_x = np.abs(ox) > np.abs(oy)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(use_x, ox, oy)
        theta = np.where(
            use_x,
            (np.pi / 4.0) * np.where(ox != 0, oy / ox, 0.0),
            (np.pi / 2.0) - (np.pi / 4.0) * np.where(oy != 0, ox / oy, 0.0),
        )
    x = np.where(zero, 0.0, r * np.cos(theta))
    y = np.where(zero, 0.0, r * np.sin(theta))
    return x, y


def generate_rays(cam: CameraSpec, px, py, jitter_x, jitter_y, lens_u, lens_v):
    """Primary rays for pixel coordinates (px, py); all arguments broadcast.

    jitter_* ∈ [0,1) place the sample inside the pixel footprint; lens_*
    ∈ [0,1) choose the point on the lens disk. Returns (origins, directions),
    directions normalized.
    """
    right, up, fwd = cam.basis()
    pos = np.asarray(cam.position, dtype=np.float64)

    half_h = np.tan(np.radians(cam.vertical_fov) / 2.0)
    half_w = half_h * cam.width / cam.height

    # NDC in [-1, 1], y up
    sx = (np.asarray(px, dtype=np.float64) + np.asarray(jitter_x)) / cam.width * 2.0 - 1.0
    sy = 1.0 - (np.asarray(py, dtype=np.float64) + np.asarray(jitter_y)) / cam.height * 2.0

    d = (sx * half_w)[..., None] * right + (sy * half_h)[..., None] * up + fwd
    d /= np.linalg.norm(d, axis=-1, keepdims=True)

    if cam.aperture_radius == 0.0:
        origins = np.broadcast_to(pos, d.shape).copy()
        return origins, d

    # thin lens: focus the pinhole ray at the focal plane, offset the origin
    t_focus = cam.focal_distance / np.sum(d * fwd, axis=-1)
    focus_pt = pos + t_focus[..., None] * d
    lx, ly = concentric_disk(lens_u, lens_v)
    origins = pos + cam.aperture_radius * (lx[..., None] * right + ly[..., None] * up)
    dirs = focus_pt - origins
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    return origins, dirs


def generate_ray(cam: CameraSpec, pixel, lens_sample=(0.5, 0.5), pixel_jitter=(0.5, 0.5)):
    """Single-ray convenience wrapper around generate_rays."""
    o, d = generate_rays(cam, np.array([pixel[0]]), np.array([pixel[1]]),
                         pixel_jitter[0], pixel_jitter[1],
                         lens_sample[0], lens_sample[1])
    return o[0], d[0]
