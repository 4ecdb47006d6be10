"""Glass optics: Fresnel, Snell, absorption, the closed-form slab response
and GGX rough-dielectric sampling.

All functions broadcast over numpy arrays; directions are unit vectors with
shape (..., 3). Conventions: `fresnel_reflectance` is the unpolarized power
reflectance; slab responses assume air on both sides of the glass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GlassSpec:
    """Physical description of a (possibly double-layer) glass pane."""

    thickness: float  # meters
    ior: float = 1.5
    roughness: float = 0.0  # GGX alpha
    absorption: tuple[float, float, float] = (0.0, 0.0, 0.0)  # sigma per channel, 1/m
    double_layer: bool = False
    interlayer_gap: float = 0.0  # meters, air gap between panes

    def __post_init__(self):
        if not self.thickness > 0:
            raise ValueError("thickness must be positive")
        if not 1.0 <= self.ior <= 3.0:
            raise ValueError(f"ior {self.ior} outside [1, 3]")
        if not 0.0 <= self.roughness <= 1.0:
            raise ValueError("roughness must lie in [0, 1]")
        if any(s < 0 for s in self.absorption):
            raise ValueError("absorption coefficients must be >= 0")
        if self.double_layer and not self.interlayer_gap > 0:
            raise ValueError("double_layer requires a positive interlayer_gap")

    @property
    def sigma(self) -> np.ndarray:
        return np.asarray(self.absorption, dtype=np.float64)


@dataclass(frozen=True)
class SlabResponse:
    """Directional per-channel reflectance/transmittance of a glass slab."""

    reflectance: np.ndarray
    transmittance: np.ndarray


def fresnel_reflectance(cos_theta_i, eta_i, eta_t):
    """Unpolarized Fresnel power reflectance; 1 under total internal reflection."""
    cos_i = np.clip(np.asarray(cos_theta_i, dtype=np.float64), 0.0, 1.0)
    eta_i = np.asarray(eta_i, dtype=np.float64)
    eta_t = np.asarray(eta_t, dtype=np.float64)
    sin2_t = (eta_i / eta_t) ** 2 * (1.0 - cos_i**2)
    tir = sin2_t >= 1.0
    cos_t = np.sqrt(np.maximum(1.0 - sin2_t, 0.0))
    rs = (eta_i * cos_i - eta_t * cos_t) / (eta_i * cos_i + eta_t * cos_t)
    rp = (eta_t * cos_i - eta_i * cos_t) / (eta_t * cos_i + eta_i * cos_t)
    r = np.where(tir, 1.0, 0.5 * (rs**2 + rp**2))
    return r if r.ndim else float(r)


def refract(direction, normal, eta_ratio):
    """Snell refraction of `direction` about `normal` (pointing against it).

    Returns (refracted_direction, tir_mask); the direction entries where
    tir_mask is True are unspecified.
    """
    d = np.asarray(direction, dtype=np.float64)
    n = np.asarray(normal, dtype=np.float64)
    eta = np.asarray(eta_ratio, dtype=np.float64)
    cos_i = -np.sum(d * n, axis=-1)
    sin2_t = eta**2 * (1.0 - cos_i**2)
    tir = sin2_t > 1.0
    cos_t = np.sqrt(np.maximum(1.0 - sin2_t, 0.0))
    t = eta[..., None] * d + (eta * cos_i - cos_t)[..., None] * n
    norm = np.linalg.norm(t, axis=-1, keepdims=True)
    t = t / np.where(norm > 0, norm, 1.0)
    return t, tir


def reflect(direction, normal):
    d = np.asarray(direction, dtype=np.float64)
    n = np.asarray(normal, dtype=np.float64)
    return d - 2.0 * np.sum(d * n, axis=-1, keepdims=True) * n


def beer_lambert(sigma, path_length):
    """Beer-Lambert attenuation exp(-sigma * path_length), per channel."""
    if np.any(np.asarray(path_length) < 0):
        raise ValueError("path_length must be >= 0")
    sigma = np.asarray(sigma, dtype=np.float64)
    pl = np.asarray(path_length, dtype=np.float64)
    return np.exp(-sigma * pl)


def _snell_cos_t(cos_i, eta_i, eta_t):
    sin2_t = (eta_i / eta_t) ** 2 * (1.0 - cos_i**2)
    return np.sqrt(max(1.0 - sin2_t, 0.0))


def slab_response_analytic(glass: GlassSpec, cos_theta_i: float) -> SlabResponse:
    """Closed-form response of a smooth slab: the interface reflectance r and
    internal attenuation a summed over all interreflection orders gives

        transmittance = (1-r)^2 a / (1 - r^2 a^2)
        reflectance   = r + r (1-r)^2 a^2 / (1 - r^2 a^2)
    """
    if glass.roughness != 0.0:
        raise ValueError("analytic slab response requires smooth glass")
    r = fresnel_reflectance(cos_theta_i, 1.0, glass.ior)
    cos_t = _snell_cos_t(float(np.clip(cos_theta_i, 0.0, 1.0)), 1.0, glass.ior)
    a = beer_lambert(glass.sigma, glass.thickness / cos_t)
    denom = 1.0 - r**2 * a**2
    tau = (1.0 - r) ** 2 * a / denom
    rho = r + r * (1.0 - r) ** 2 * a**2 / denom
    return SlabResponse(reflectance=rho, transmittance=np.asarray(tau))


def combine_slabs(first: SlabResponse, second: SlabResponse) -> SlabResponse:
    """Stack two slabs separated by a non-absorbing gap, summing the
    interreflection series between them."""
    r1, t1 = first.reflectance, first.transmittance
    r2, t2 = second.reflectance, second.transmittance
    denom = 1.0 - r1 * r2
    tau = t1 * t2 / denom
    rho = r1 + t1**2 * r2 / denom
    return SlabResponse(reflectance=np.asarray(rho), transmittance=np.asarray(tau))


def double_slab_response_analytic(glass: GlassSpec, cos_theta_i: float) -> SlabResponse:
    """Response of two identical smooth panes separated by an air gap."""
    if not glass.double_layer:
        raise ValueError("glass spec is not double layer")
    single = slab_response_analytic(glass, cos_theta_i)
    return combine_slabs(single, single)


# ---------------------------------------------------------------------------
# GGX rough dielectric


def _ggx_lambda(cos_theta, alpha):
    c2 = np.clip(cos_theta**2, 1e-12, 1.0)
    tan2 = (1.0 - c2) / c2
    return 0.5 * (np.sqrt(1.0 + alpha**2 * tan2) - 1.0)


def sample_ggx_vndf(wi_local, alpha, u1, u2):
    """Sample a visible GGX microfacet normal in the local frame (n = +z).

    `wi_local` must point away from the surface (z > 0)."""
    wi = np.asarray(wi_local, dtype=np.float64)
    vh = wi * np.array([alpha, alpha, 1.0])
    vh /= np.linalg.norm(vh, axis=-1, keepdims=True)

    lensq = vh[..., 0] ** 2 + vh[..., 1] ** 2
    safe = lensq > 1e-14
    inv = 1.0 / np.sqrt(np.where(safe, lensq, 1.0))
    t1 = np.stack([
        np.where(safe, -vh[..., 1] * inv, 1.0),
        np.where(safe, vh[..., 0] * inv, 0.0),
        np.zeros_like(inv),
    ], axis=-1)
    t2 = np.cross(vh, t1)

    r = np.sqrt(u1)
    phi = 2.0 * np.pi * u2
    p1 = r * np.cos(phi)
    p2 = r * np.sin(phi)
    s = 0.5 * (1.0 + vh[..., 2])
    p2 = (1.0 - s) * np.sqrt(np.maximum(1.0 - p1**2, 0.0)) + s * p2
    pz = np.sqrt(np.maximum(1.0 - p1**2 - p2**2, 0.0))
    nh = p1[..., None] * t1 + p2[..., None] * t2 + pz[..., None] * vh

    m = nh * np.array([alpha, alpha, 1.0])
    m[..., 2] = np.maximum(m[..., 2], 1e-9)
    m /= np.linalg.norm(m, axis=-1, keepdims=True)
    return m


def sample_rough_dielectric(wi_local, eta_ratio, alpha, u1, u2, u_choice):
    """One rough-dielectric scattering event in the local frame (n = +z).

    `wi_local` points away from the surface (toward the incident side,
    z > 0); `eta_ratio` is eta_incident / eta_transmitted. A visible GGX
    microfacet normal is sampled, then reflection vs refraction about it is
    chosen with the Fresnel probability at unit weight, so a lossless
    interface conserves energy exactly (white-furnace clean). Samples that
    would scatter below the horizon fall back to the same event about the
    geometric normal instead of being discarded.

    Returns (wo_local, weight, reflected_mask); weight is always 1.
    """
    wi = np.asarray(wi_local, dtype=np.float64)
    eta = np.asarray(eta_ratio, dtype=np.float64)
    m = sample_ggx_vndf(wi, alpha, np.asarray(u1), np.asarray(u2))
    cos_im = np.sum(wi * m, axis=-1)
    f = fresnel_reflectance(cos_im, 1.0, 1.0 / eta)

    do_reflect = np.asarray(u_choice) < f
    wo_r = 2.0 * cos_im[..., None] * m - wi
    wo_t, tir = refract(-wi, m, eta)
    do_reflect = do_reflect | tir
    wo = np.where(do_reflect[..., None], wo_r, wo_t)
    good = np.where(do_reflect, wo[..., 2] > 0, wo[..., 2] < 0)

    # fallback about the geometric normal; a refract decision that is TIR
    # there becomes a reflection
    z = np.zeros_like(wi)
    z[..., 2] = 1.0
    wo_rz = wi * np.array([-1.0, -1.0, 1.0])
    wo_tz, tir_z = refract(-wi, z, eta)
    fb_reflect = do_reflect | tir_z
    fallback = np.where(fb_reflect[..., None], wo_rz, wo_tz)

    reflected = np.where(good, do_reflect, fb_reflect)
    wo = np.where(good[..., None], wo, fallback)
    return wo, np.ones(wo.shape[:-1]), reflected


def sample_rough_dielectric_rng(wi_local, eta_ratio, alpha, rng: np.random.Generator):
    """Convenience wrapper drawing the three uniforms from `rng`."""
    shape = np.asarray(wi_local).shape[:-1]
    u = rng.random(shape + (3,))
    return sample_rough_dielectric(wi_local, eta_ratio, alpha, u[..., 0], u[..., 1], u[..., 2])
