"""Equirectangular environment maps: lookup and luminance importance sampling.

World convention is y-up: a direction maps to latitude theta in [0, pi]
measured from +y and azimuth phi = atan2(z, x) in [0, 2pi). The map's
azimuthal rotation shifts phi at lookup/sample time.

Importance sampling is texel-based: a texel is chosen with probability
proportional to luminance times its solid angle, then the direction is
drawn uniformly inside that texel's solid angle, so the returned pdf is
piecewise constant and exactly consistent with the draw density.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imagecore import RadianceImage

LUMA = np.array([0.2126, 0.7152, 0.0722])

TWO_PI = 2.0 * np.pi


def luminance(rgb):
    return np.asarray(rgb, dtype=np.float64) @ LUMA


@dataclass(frozen=True)
class EnvironmentMap:
    image: RadianceImage
    rotation: float  # azimuthal offset, radians
    row_cdf: np.ndarray  # (h,)
    cond_cdf: np.ndarray  # (h, w)
    pdf_grid: np.ndarray  # (h, w), solid-angle density per texel
    cos_edges: np.ndarray  # (h+1,), cos(theta) at row edges, decreasing

    @property
    def width(self) -> int:
        return self.image.width

    @property
    def height(self) -> int:
        return self.image.height


def build_env_cdf(image: RadianceImage, rotation: float = 0.0) -> EnvironmentMap:
    """Precompute the sampling tables for an equirectangular radiance map."""
    h, w = image.height, image.width
    if w != 2 * h:
        raise ValueError(f"equirectangular map needs width = 2*height, got {w}x{h}")
    lum = luminance(image.data)
    if not np.any(lum > 0):
        raise ValueError("environment map has no energy")

    theta_edges = np.linspace(0.0, np.pi, h + 1)
    cos_edges = np.cos(theta_edges)
    band = cos_edges[:-1] - cos_edges[1:]  # per-row solid angle / delta-phi
    weights = lum * band[:, None]

    row_sum = weights.sum(axis=1)
    total = row_sum.sum()
    row_cdf = np.cumsum(row_sum) / total
    row_cdf[-1] = 1.0

    safe = np.where(row_sum > 0, row_sum, 1.0)[:, None]
    cond_cdf = np.cumsum(weights, axis=1) / safe
    cond_cdf[:, -1] = np.where(row_sum > 0, 1.0, cond_cdf[:, -1])

    omega = band[:, None] * (TWO_PI / w)
    pdf_grid = weights / (total * omega)
    return EnvironmentMap(image, float(rotation), row_cdf, cond_cdf, pdf_grid, cos_edges)


def _dir_to_uv(env: EnvironmentMap, direction):
    d = np.asarray(direction, dtype=np.float64)
    y = np.clip(d[..., 1], -1.0, 1.0)
    theta = np.arccos(y)
    phi = np.arctan2(d[..., 2], d[..., 0]) - env.rotation
    u = (phi / TWO_PI) % 1.0
    v = theta / np.pi
    return u, v


def env_lookup(env: EnvironmentMap, direction):
    """Bilinear radiance lookup; near the poles the pole row's average is used
    to avoid seam artifacts."""
    u, v = _dir_to_uv(env, direction)
    h, w = env.height, env.width
    img = env.image.data

    x = u * w - 0.5
    y = v * h - 0.5
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    x0m = x0 % w
    x1m = (x0 + 1) % w
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)

    out = ((1 - fx) * (1 - fy) * img[y0c, x0m]
           + fx * (1 - fy) * img[y0c, x1m]
           + (1 - fx) * fy * img[y1c, x0m]
           + fx * fy * img[y1c, x1m])

    near_top = v * h < 0.5
    near_bot = v * h > h - 0.5
    if np.any(near_top):
        out = np.where(near_top[..., None], img[0].mean(axis=0), out)
    if np.any(near_bot):
        out = np.where(near_bot[..., None], img[h - 1].mean(axis=0), out)
    return out


def sample_env(env: EnvironmentMap, u1, u2):
    """Importance-sample directions from two uniforms in [0,1).

    Returns (directions, pdf) with pdf in solid-angle measure; zero-luminance
    texels are never drawn."""
    u1 = np.asarray(u1, dtype=np.float64)
    u2 = np.asarray(u2, dtype=np.float64)
    h, w = env.height, env.width

    row = np.searchsorted(env.row_cdf, u1, side="right")
    row = np.clip(row, 0, h - 1)
    cdf_lo = np.where(row > 0, env.row_cdf[row - 1], 0.0)
    seg = env.row_cdf[row] - cdf_lo
    tv = np.where(seg > 0, (u1 - cdf_lo) / np.where(seg > 0, seg, 1.0), 0.5)

    cond = env.cond_cdf[row]
    col = np.sum(cond <= u2[..., None], axis=-1)  # row-wise searchsorted
    col = np.clip(col, 0, w - 1)
    ccdf_lo = np.where(col > 0, np.take_along_axis(cond, np.maximum(col - 1, 0)[..., None],
                                                   -1)[..., 0], 0.0)
    ccdf_hi = np.take_along_axis(cond, col[..., None], -1)[..., 0]
    cseg = ccdf_hi - ccdf_lo
    tu = np.where(cseg > 0, (u2 - ccdf_lo) / np.where(cseg > 0, cseg, 1.0), 0.5)

    # uniform inside the texel's solid angle: cos(theta) linear, phi linear
    cos_theta = env.cos_edges[row] + tv * (env.cos_edges[row + 1] - env.cos_edges[row])
    sin_theta = np.sqrt(np.maximum(1.0 - cos_theta**2, 0.0))
    phi = (col + tu) / w * TWO_PI + env.rotation

    d = np.stack([sin_theta * np.cos(phi), cos_theta, sin_theta * np.sin(phi)], axis=-1)
    pdf = env.pdf_grid[row, col]
    return d, pdf


def env_pdf(env: EnvironmentMap, direction):
    """Density (solid angle) that sample_env uses for `direction`."""
    u, v = _dir_to_uv(env, direction)
    col = np.clip((u * env.width).astype(np.int64), 0, env.width - 1)
    row = np.clip((v * env.height).astype(np.int64), 0, env.height - 1)
    return env.pdf_grid[row, col]
