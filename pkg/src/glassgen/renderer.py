"""Wavefront path tracer for glass-slab scenes.

The integrator traces one stochastic branch per interface event: reflect
or refract is chosen with the Fresnel probability at unit weight, which
keeps the full image the exact expectation of the transmission-family and
reflection-family images. A path belongs to the reflection family iff it
interacted with the pane and finally escaped on the camera side; every
other path is transmission-family.

All randomness is counter-based (see rng.py): a uniform is a pure function
of (seed, pixel index, sample index, dimension), so renders are bit-equal
for any tile schedule or worker count.
"""

from __future__ import annotations

import enum
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import rng as crng
from .camera import generate_rays
from .envmap import env_lookup, luminance
from .imagecore import RadianceImage
from .optics import fresnel_reflectance, sample_rough_dielectric
from .scene import EPS_T, SceneConfig, ray_quad

AIR = -1  # medium id for "not inside any pane"

# random-stream dimension ids
DIM_JITTER_X, DIM_JITTER_Y, DIM_LENS_U, DIM_LENS_V = 0, 1, 2, 3
DIM_BOUNCE_BASE = 8
DIMS_PER_BOUNCE = 4  # u1, u2, reflect-vs-refract choice, roulette

MAX_RAYS_PER_CHUNK = 1 << 19  # bounds wavefront memory, fixed for determinism


class RenderMode(enum.Enum):
    FULL = "I"
    TRANSMISSION = "T"
    BACKGROUND = "B"
    REFLECTION = "R"
    MIRROR = "MR"


# fixed seed offsets for render_quintuple
MODE_SEED_OFFSET = {
    RenderMode.FULL: 0,
    RenderMode.TRANSMISSION: 1,
    RenderMode.BACKGROUND: 2,
    RenderMode.REFLECTION: 3,
    RenderMode.MIRROR: 4,
}


@dataclass(frozen=True)
class RenderSettings:
    max_bounces: int = 32
    base_spp: int = 64
    max_spp: int = 256
    adaptive_threshold: float = 0.02  # relative 95% CI half-width target
    seed: int = 0
    tile_size: int = 32
    rr_start: int = 8  # first bounce eligible for Russian roulette

    def __post_init__(self):
        if self.max_bounces < 4:
            raise ValueError("max_bounces must be >= 4")
        if self.base_spp < 16:
            raise ValueError("base_spp must be >= 16")
        if self.max_spp < self.base_spp:
            raise ValueError("max_spp must be >= base_spp")
        if not self.adaptive_threshold > 0:
            raise ValueError("adaptive_threshold must be positive")
        if self.tile_size < 1:
            raise ValueError("tile_size must be >= 1")


@dataclass
class RenderStats:
    total_samples: int = 0
    total_bounces: int = 0
    nonfinite_samples: int = 0
    wall_time: float = 0.0


@dataclass
class RenderOutput:
    image: RadianceImage
    spp_map: np.ndarray
    stats: RenderStats


def _orthonormal_basis(n):
    """Tangent frames for an array of unit normals (Duff et al. branchless)."""
    nx, ny, nz = n[..., 0], n[..., 1], n[..., 2]
    sign = np.where(nz >= 0.0, 1.0, -1.0)
    a = -1.0 / (sign + nz)
    b = nx * ny * a
    t = np.stack([1.0 + sign * nx * nx * a, sign * b, -sign * nx], axis=-1)
    bt = np.stack([b, sign + ny * ny * a, -ny], axis=-1)
    return t, bt


def _to_local(v, n):
    t, bt = _orthonormal_basis(n)
    return np.stack([np.sum(v * t, -1), np.sum(v * bt, -1), np.sum(v * n, -1)], axis=-1)


def _from_local(v, n):
    t, bt = _orthonormal_basis(n)
    return v[..., 0:1] * t + v[..., 1:2] * bt + v[..., 2:3] * n


def trace_given_rays(scene: SceneConfig, origins, dirs, mode: RenderMode,
                     seed: int, pixel_ids, sample_ids, settings: RenderSettings):
    """Trace arbitrary rays; returns (radiance (N,3), bounce_count).

    The (pixel_ids, sample_ids) pair names each ray's random stream."""
    N = len(dirs)
    spec = scene.pane.spec
    pane = scene.pane
    faces = pane.face_points()
    pane_n = np.asarray(pane.normal, dtype=np.float64)
    # classify escape side against the front pane's volume center so that
    # points on either face land strictly on one side
    pane_center = np.asarray(pane.center, dtype=np.float64)
    tan_u = np.asarray(pane.tangent_u, dtype=np.float64)
    tan_v = np.asarray(pane.tangent_v, dtype=np.float64)
    center_u = pane_center @ tan_u
    center_v = pane_center @ tan_v
    # plane offsets along the normal, flattened (pane, face) order
    nfaces = 2 * pane.pane_count
    face_off = faces.reshape(-1, 3) @ pane_n
    env_t = scene.env
    env_r = scene.env_reflection if scene.env_reflection is not None else scene.env
    sigma = spec.sigma
    absorbing = bool(np.any(sigma > 0))
    alpha = spec.roughness

    L = np.zeros((N, 3))
    # live state, compacted every bounce
    idx = np.arange(N)
    o = np.array(origins, dtype=np.float64)
    d = np.array(dirs, dtype=np.float64)
    tp = np.ones((N, 3))
    inside = np.full(N, AIR, dtype=np.int8)
    touched = np.zeros(N, dtype=bool)
    key = crng.stream_key(seed, np.asarray(pixel_ids), np.asarray(sample_ids))

    include_panes = mode is not RenderMode.BACKGROUND
    mirror = mode is RenderMode.MIRROR
    total_bounces = 0

    for bounce in range(settings.max_bounces):
        if idx.size == 0:
            break
        total_bounces += idx.size
        dim0 = DIM_BOUNCE_BASE + bounce * DIMS_PER_BOUNCE

        if bounce >= settings.rr_start:
            p_survive = np.clip(luminance(tp), 0.05, 1.0)
            u_rr = crng.uniform_from_key(key, dim0 + 3)
            live = u_rr < p_survive
            tp = tp[live] / p_survive[live, None]
            idx, o, d, inside, touched = idx[live], o[live], d[live], inside[live], touched[live]
            key = key[live]
            if idx.size == 0:
                break

        in_air = inside == AIR
        keep = np.zeros(idx.size, dtype=bool)

        # ---- rays travelling in air ----
        air = np.nonzero(in_air)[0]
        if air.size:
            oa, da = o[air], d[air]
            dn = da @ pane_n
            on = oa @ pane_n
            t_pane = np.full(air.size, np.inf)
            face_flat = np.zeros(air.size, dtype=np.int8)
            if include_panes:
                # all faces are parallel planes sharing one rectangle
                ou, ov = oa @ tan_u, oa @ tan_v
                du, dv = da @ tan_u, da @ tan_v
                with np.errstate(divide="ignore", invalid="ignore"):
                    inv_dn = np.where(np.abs(dn) > 1e-12, 1.0 / dn, 0.0)
                for k in range(1 if mirror else nfaces):
                    t_k = (face_off[k] - on) * inv_dn
                    u_k = (ou + t_k * du - center_u) / pane.half_u
                    v_k = (ov + t_k * dv - center_v) / pane.half_v
                    ok = ((inv_dn != 0.0) & (t_k > EPS_T) & (t_k < t_pane)
                          & (np.abs(u_k) <= 1.0) & (np.abs(v_k) <= 1.0))
                    t_pane = np.where(ok, t_k, t_pane)
                    face_flat = np.where(ok, k, face_flat)

            boards = scene.billboards
            t_bb = np.full(air.size, np.inf)
            bb_id = np.full(air.size, -1, dtype=np.int8)
            bb_u = bb_v = None
            if boards:
                bb_u = np.zeros(air.size)
                bb_v = np.zeros(air.size)
                for b, board in enumerate(boards):
                    t_q, u_q, v_q = ray_quad(oa, da, board.center, board.normal,
                                             board.tangent_u, board.tangent_v,
                                             board.half_u, board.half_v)
                    closer = t_q < t_bb
                    t_bb = np.where(closer, t_q, t_bb)
                    bb_id = np.where(closer, b, bb_id)
                    bb_u = np.where(closer, u_q, bb_u)
                    bb_v = np.where(closer, v_q, bb_v)

            escaped = np.isinf(t_pane) & np.isinf(t_bb)
            if np.any(escaped):
                e = air[escaped]
                camera_side = (o[e] - pane_center) @ pane_n > 0
                if env_r is env_t:
                    rad = env_lookup(env_t, d[e])
                else:
                    rad = np.empty((e.size, 3))
                    rad[camera_side] = env_lookup(env_r, d[e][camera_side])
                    rad[~camera_side] = env_lookup(env_t, d[e][~camera_side])
                _deposit(L, mode, idx[e], tp[e] * rad, touched[e], camera_side)

            hit_bb = t_bb < t_pane
            if np.any(hit_bb):
                for b, board in enumerate(boards):
                    sel = np.nonzero(hit_bb & (bb_id == b))[0]
                    if sel.size == 0:
                        continue
                    e = air[sel]
                    rad = board.emission(bb_u[sel], bb_v[sel])
                    camera_side = np.full(sel.size, board is scene.front_billboard)
                    _deposit(L, mode, idx[e], tp[e] * rad, touched[e], camera_side)

            hit_pane = np.nonzero(np.isfinite(t_pane) & ~hit_bb)[0]
            if hit_pane.size:
                a = air[hit_pane]
                t = t_pane[hit_pane]
                face = face_flat[hit_pane] & 1  # 0 front face, 1 back face
                pane_id = face_flat[hit_pane] >> 1
                o[a] = o[a] + t[:, None] * d[a]
                # outward normal of the struck face
                n_face = np.where((face == 0)[:, None], pane_n, -pane_n)
                touched[a] = True
                if mirror:
                    d[a] = d[a] - 2.0 * np.sum(d[a] * n_face, -1, keepdims=True) * n_face
                    keep[a] = True
                else:
                    u1 = crng.uniform_from_key(key[a], dim0)
                    u2 = crng.uniform_from_key(key[a], dim0 + 1)
                    uc = crng.uniform_from_key(key[a], dim0 + 2)
                    new_d, refl, w = _interface(d[a], n_face, 1.0 / spec.ior, alpha,
                                                u1, u2, uc)
                    d[a] = new_d
                    tp[a] *= w[:, None]
                    inside[a] = np.where(refl, AIR, pane_id)
                    keep[a] = w > 0

        # ---- rays travelling inside glass ----
        glass = np.nonzero(~in_air)[0]
        if glass.size:
            g_pane = inside[glass].astype(np.int64)
            # distance to the two face planes of the containing pane (unbounded)
            denom = d[glass] @ pane_n
            on_g = o[glass] @ pane_n
            with np.errstate(divide="ignore", invalid="ignore"):
                t0 = (face_off[2 * g_pane] - on_g) / denom
                t1 = (face_off[2 * g_pane + 1] - on_g) / denom
            t0 = np.where(t0 > 1e-9, t0, np.inf)
            t1 = np.where(t1 > 1e-9, t1, np.inf)
            t = np.minimum(t0, t1)
            face = np.where(t1 < t0, 1, 0)
            bad = ~np.isfinite(t)  # parallel ray, numerically degenerate
            t = np.where(bad, 0.0, t)

            o[glass] = o[glass] + t[:, None] * d[glass]
            if absorbing:
                tp[glass] *= np.exp(-sigma[None, :] * t[:, None])
            # incident-side normal points back into the glass
            n_face = np.where((face == 0)[:, None], -pane_n, pane_n)

            u1 = crng.uniform_from_key(key[glass], dim0)
            u2 = crng.uniform_from_key(key[glass], dim0 + 1)
            uc = crng.uniform_from_key(key[glass], dim0 + 2)
            new_d, refl, w = _interface(d[glass], n_face, spec.ior, alpha, u1, u2, uc)
            d[glass] = new_d
            tp[glass] *= w[:, None]
            inside[glass] = np.where(refl, inside[glass], AIR)
            keep[glass] = (w > 0) & ~bad

        sel = np.nonzero(keep)[0]
        idx, o, d, tp = idx[sel], o[sel], d[sel], tp[sel]
        inside, touched, key = inside[sel], touched[sel], key[sel]

    return L, total_bounces


def _interface(d, n_face, eta_ratio, alpha, u1, u2, uc):
    """One dielectric interface event.

    `n_face` is the face normal on the incident side (d . n_face < 0);
    `eta_ratio` is eta_i/eta_t for the crossing. Returns
    (new_direction, reflected_mask, weight)."""
    cos_i = -np.sum(d * n_face, -1)
    if alpha == 0.0:
        r = fresnel_reflectance(cos_i, 1.0, 1.0 / eta_ratio)
        refl = uc < r
        d_refl = d + 2.0 * cos_i[:, None] * n_face
        sin2_t = eta_ratio**2 * (1.0 - cos_i**2)
        cos_t = np.sqrt(np.maximum(1.0 - sin2_t, 0.0))
        d_refr = eta_ratio * d + (eta_ratio * cos_i - cos_t)[:, None] * n_face
        nrm = np.linalg.norm(d_refr, axis=-1, keepdims=True)
        d_refr /= np.where(nrm > 0, nrm, 1.0)
        return np.where(refl[:, None], d_refl, d_refr), refl, np.ones_like(cos_i)

    wi_local = _to_local(-d, n_face)
    wo_local, w, refl = sample_rough_dielectric(wi_local, eta_ratio, alpha,
                                                u1, u2, uc)
    return _from_local(wo_local, n_face), refl, w


def _deposit(L, mode, targets, radiance, touched, camera_side):
    if mode in (RenderMode.FULL, RenderMode.BACKGROUND, RenderMode.MIRROR):
        accept = np.ones(len(targets), dtype=bool)
    else:
        refl_family = touched & camera_side
        accept = refl_family if mode is RenderMode.REFLECTION else ~refl_family
    sel = np.nonzero(accept)[0]
    L[targets[sel]] = radiance[sel]


def trace_camera_samples(scene: SceneConfig, mode: RenderMode, seed: int,
                         pixel_ids, sample_ids, settings: RenderSettings):
    """Camera-ray generation plus path trace for (pixel, sample) pairs."""
    cam = scene.camera
    pixel_ids = np.asarray(pixel_ids, dtype=np.int64)
    sample_ids = np.asarray(sample_ids, dtype=np.int64)
    px = pixel_ids % cam.width
    py = pixel_ids // cam.width
    key = crng.stream_key(seed, pixel_ids, sample_ids)
    jx = crng.uniform_from_key(key, DIM_JITTER_X)
    jy = crng.uniform_from_key(key, DIM_JITTER_Y)
    lu = crng.uniform_from_key(key, DIM_LENS_U)
    lv = crng.uniform_from_key(key, DIM_LENS_V)
    origins, dirs = generate_rays(cam, px, py, jx, jy, lu, lv)
    return trace_given_rays(scene, origins, dirs, mode, seed, pixel_ids,
                            sample_ids, settings)


def trace_path(scene: SceneConfig, pixel: tuple[int, int], sample_index: int,
               mode: RenderMode, settings: RenderSettings):
    """Single radiance sample for one pixel (convenience over the batch API)."""
    pid = pixel[1] * scene.camera.width + pixel[0]
    L, _ = trace_camera_samples(scene, mode, settings.seed,
                                np.array([pid]), np.array([sample_index]), settings)
    return L[0]


def _render_tile(scene, mode, settings, tile_pixel_ids):
    n = tile_pixel_ids.size
    sum_rgb = np.zeros((n, 3))
    sum_lum = np.zeros(n)
    sum_lum2 = np.zeros(n)
    counts = np.zeros(n, dtype=np.int64)
    stats = RenderStats()

    active = np.arange(n)
    while active.size:
        count_now = counts[active[0]]
        batch = min(settings.base_spp, settings.max_spp - count_now)
        pix = np.repeat(tile_pixel_ids[active], batch)
        smp = np.tile(np.arange(count_now, count_now + batch), active.size)

        rad = np.empty((active.size * batch, 3))
        bounces = 0
        for lo in range(0, pix.size, MAX_RAYS_PER_CHUNK):
            hi = min(lo + MAX_RAYS_PER_CHUNK, pix.size)
            rad[lo:hi], nb = trace_camera_samples(scene, mode, settings.seed,
                                                  pix[lo:hi], smp[lo:hi], settings)
            bounces += nb

        finite = np.all(np.isfinite(rad), axis=-1)
        stats.nonfinite_samples += int(np.count_nonzero(~finite))
        rad[~finite] = 0.0

        rad = rad.reshape(active.size, batch, 3)
        lum = luminance(rad)
        sum_rgb[active] += rad.sum(axis=1)
        sum_lum[active] += lum.sum(axis=1)
        sum_lum2[active] += (lum**2).sum(axis=1)
        counts[active] += batch
        stats.total_samples += pix.size
        stats.total_bounces += bounces

        nct = counts[active]
        mean = sum_lum[active] / nct
        var = np.maximum(sum_lum2[active] - nct * mean**2, 0.0) / np.maximum(nct - 1, 1)
        ci = 1.96 * np.sqrt(var / nct)
        done = (ci <= settings.adaptive_threshold * (mean + 0.01)) | (nct >= settings.max_spp)
        active = active[~done]

    image = sum_rgb / counts[:, None]
    return image, counts, stats


def render(scene: SceneConfig, mode: RenderMode, settings: RenderSettings,
           workers: int = 1) -> RenderOutput:
    """Adaptive tile render; bit-identical for any `workers` value."""
    t_start = time.perf_counter()
    cam = scene.camera
    W, H = cam.width, cam.height
    ts = settings.tile_size

    tiles = []
    for ty in range(0, H, ts):
        for tx in range(0, W, ts):
            ys, xs = np.mgrid[ty:min(ty + ts, H), tx:min(tx + ts, W)]
            tiles.append((ys.ravel() * W + xs.ravel()))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda t: _render_tile(scene, mode, settings, t), tiles))
    else:
        results = [_render_tile(scene, mode, settings, t) for t in tiles]

    image = np.zeros((H * W, 3))
    spp = np.zeros(H * W, dtype=np.int64)
    stats = RenderStats()
    for tile_ids, (img, counts, st) in zip(tiles, results):
        image[tile_ids] = img
        spp[tile_ids] = counts
        stats.total_samples += st.total_samples
        stats.total_bounces += st.total_bounces
        stats.nonfinite_samples += st.nonfinite_samples

    stats.wall_time = time.perf_counter() - t_start
    return RenderOutput(
        image=RadianceImage(np.maximum(image, 0.0).reshape(H, W, 3).astype(np.float32)),
        spp_map=spp.reshape(H, W),
        stats=stats,
    )


def render_quintuple(scene: SceneConfig, settings: RenderSettings,
                     workers: int = 1) -> dict[RenderMode, RenderOutput]:
    """The five-layer decomposition: I, T, B, R, MR with per-mode seeds."""
    out = {}
    for mode in RenderMode:
        mode_settings = replace(settings,
                                seed=crng.derive_seed(settings.seed, MODE_SEED_OFFSET[mode]))
        out[mode] = render(scene, mode, mode_settings, workers=workers)
    return out
