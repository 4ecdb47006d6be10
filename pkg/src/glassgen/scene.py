"""Scene assembly: finite glass panes, emissive LDR billboards, environment
lighting, and ray/surface queries used by the integrator."""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import imagecore
from .camera import CameraSpec, aperture_radius_from_f_number
from .envmap import EnvironmentMap, build_env_cdf
from .imagecore import LdrImage, RadianceImage, load_hdr, load_ldr, srgb_decode
from .optics import GlassSpec

INF = np.inf
EPS_T = 1e-7  # minimum ray parameter, rejects self-intersection


class SceneSetup(enum.Enum):
    HDR_HDR = "hdr_hdr"
    HDR_LDR = "hdr_ldr"
    LDR_HDR = "ldr_hdr"


@dataclass(frozen=True)
class Billboard:
    """Emissive textured quad showing a linearized LDR image."""

    image: LdrImage
    center: tuple[float, float, float]
    tangent_u: tuple[float, float, float]
    tangent_v: tuple[float, float, float]
    half_u: float
    half_v: float
    emission_scale: float = 1.0

    def __post_init__(self):
        if self.half_u <= 0 or self.half_v <= 0:
            raise ValueError("billboard half-extents must be positive")
        if self.emission_scale <= 0:
            raise ValueError("emission_scale must be positive")
        # linear emission texture, cached once
        object.__setattr__(self, "_radiance",
                           srgb_decode(self.image.data / 255.0) * self.emission_scale)

    @property
    def normal(self) -> np.ndarray:
        n = np.cross(self.tangent_u, self.tangent_v)
        return n / np.linalg.norm(n)

    def emission(self, u, v):
        """Linear radiance at quad coordinates u, v in [-1, 1] (bilinear)."""
        tex = self._radiance
        h, w = tex.shape[:2]
        x = (np.asarray(u) * 0.5 + 0.5) * w - 0.5
        y = (0.5 - np.asarray(v) * 0.5) * h - 0.5
        x0 = np.clip(np.floor(x).astype(np.int64), 0, w - 1)
        y0 = np.clip(np.floor(y).astype(np.int64), 0, h - 1)
        x1 = np.minimum(x0 + 1, w - 1)
        y1 = np.minimum(y0 + 1, h - 1)
        fx = np.clip(x - x0, 0.0, 1.0)[..., None]
        fy = np.clip(y - y0, 0.0, 1.0)[..., None]
        return ((1 - fx) * (1 - fy) * tex[y0, x0] + fx * (1 - fy) * tex[y0, x1]
                + (1 - fx) * fy * tex[y1, x0] + fx * fy * tex[y1, x1])


@dataclass(frozen=True)
class GlassPane:
    """Rectangular glass slab; `normal` points toward the camera side.

    For double-layer specs the second, identical pane sits behind the first
    at `interlayer_gap` along -normal."""

    spec: GlassSpec
    center: tuple[float, float, float]
    normal: tuple[float, float, float]
    tangent_u: tuple[float, float, float]
    tangent_v: tuple[float, float, float]
    half_u: float
    half_v: float

    def __post_init__(self):
        if self.half_u <= 0 or self.half_v <= 0:
            raise ValueError("pane half-extents must be positive")

    @property
    def pane_count(self) -> int:
        return 2 if self.spec.double_layer else 1

    def face_points(self):
        """(pane_count, 2, 3) world points on each pane's front/back face."""
        c = np.asarray(self.center, dtype=np.float64)
        n = np.asarray(self.normal, dtype=np.float64)
        th = self.spec.thickness
        pts = []
        for p in range(self.pane_count):
            cp = c - n * p * (th + self.spec.interlayer_gap)
            pts.append([cp + n * (th / 2.0), cp - n * (th / 2.0)])
        return np.asarray(pts)


@dataclass(frozen=True)
class SceneConfig:
    """A renderable scene.

    `env` illuminates the far (transmission) side of the pane; rays escaping
    on the camera side sample `env_reflection` instead when it is set,
    otherwise the same map lights both sides."""

    setup: SceneSetup
    env: EnvironmentMap
    pane: GlassPane
    camera: CameraSpec
    env_reflection: EnvironmentMap | None = None
    front_billboard: Billboard | None = None
    back_billboard: Billboard | None = None

    def __post_init__(self):
        if self.setup is SceneSetup.HDR_LDR and self.front_billboard is None:
            raise ValueError("HDR_LDR setup requires a front billboard")
        if self.setup is SceneSetup.LDR_HDR and self.back_billboard is None:
            raise ValueError("LDR_HDR setup requires a back billboard")
        if self.setup is SceneSetup.HDR_HDR and (self.front_billboard or self.back_billboard):
            raise ValueError("HDR_HDR setup takes no billboards")

    @property
    def billboards(self) -> list[Billboard]:
        return [b for b in (self.front_billboard, self.back_billboard) if b is not None]


def ray_quad(origins, dirs, point, normal, tangent_u, tangent_v, half_u, half_v):
    """Intersect rays with a bounded quad.

    Returns (t, u, v); t = inf where the ray misses, u/v in [-1, 1] scaled
    by the half-extents."""
    p = np.asarray(point, dtype=np.float64)
    n = np.asarray(normal, dtype=np.float64)
    tu = np.asarray(tangent_u, dtype=np.float64)
    tv = np.asarray(tangent_v, dtype=np.float64)

    denom = dirs @ n
    with np.errstate(divide="ignore", invalid="ignore"):
        t = ((p - origins) @ n) / denom
    hitp = origins + t[..., None] * dirs
    u = (hitp - p) @ tu / half_u
    v = (hitp - p) @ tv / half_v
    ok = (np.abs(denom) > 1e-12) & (t > EPS_T) & (np.abs(u) <= 1.0) & (np.abs(v) <= 1.0)
    return np.where(ok, t, INF), u, v


def ray_plane(origins, dirs, point, normal):
    """Unbounded plane intersection; inf where parallel or behind."""
    p = np.asarray(point, dtype=np.float64)
    n = np.asarray(normal, dtype=np.float64)
    denom = dirs @ n
    with np.errstate(divide="ignore", invalid="ignore"):
        t = ((p - origins) @ n) / denom
    return np.where((np.abs(denom) > 1e-12) & (t > EPS_T), t, INF)


# hit surface codes
MISS = 0
PANE_FACE = 1
BILLBOARD = 2


def intersect(scene: SceneConfig, origins, dirs, include_panes=True,
              front_pane_only=False):
    """Nearest exterior hit for each ray.

    Returns a dict of arrays: t, kind (MISS/PANE_FACE/BILLBOARD),
    pane (pane index), face (0 front face, 1 back face), board (billboard
    index), u, v (quad coordinates of the hit)."""
    origins = np.asarray(origins, dtype=np.float64)
    dirs = np.asarray(dirs, dtype=np.float64)
    shape = dirs.shape[:-1]

    best_t = np.full(shape, INF)
    kind = np.zeros(shape, dtype=np.int8)
    pane_idx = np.zeros(shape, dtype=np.int8)
    face_idx = np.zeros(shape, dtype=np.int8)
    board_idx = np.full(shape, -1, dtype=np.int8)
    uu = np.zeros(shape)
    vv = np.zeros(shape)

    pane = scene.pane
    if include_panes:
        faces = pane.face_points()
        npanes = 1 if front_pane_only else pane.pane_count
        for p in range(npanes):
            nfaces = 1 if front_pane_only else 2
            for f in range(nfaces):
                t, u, v = ray_quad(origins, dirs, faces[p, f], pane.normal,
                                   pane.tangent_u, pane.tangent_v,
                                   pane.half_u, pane.half_v)
                closer = t < best_t
                best_t = np.where(closer, t, best_t)
                kind = np.where(closer, PANE_FACE, kind)
                pane_idx = np.where(closer, p, pane_idx)
                face_idx = np.where(closer, f, face_idx)
                uu = np.where(closer, u, uu)
                vv = np.where(closer, v, vv)

    for b, board in enumerate(scene.billboards):
        t, u, v = ray_quad(origins, dirs, board.center, board.normal,
                           board.tangent_u, board.tangent_v,
                           board.half_u, board.half_v)
        closer = t < best_t
        best_t = np.where(closer, t, best_t)
        kind = np.where(closer, BILLBOARD, kind)
        board_idx = np.where(closer, b, board_idx)
        uu = np.where(closer, u, uu)
        vv = np.where(closer, v, vv)

    return {"t": best_t, "kind": kind, "pane": pane_idx, "face": face_idx,
            "board": board_idx, "u": uu, "v": vv}


class AssetRegistry:
    """Local asset directory: `env/` holds .hdr/.exr maps, `ldr/` holds
    .jpg/.png images; assets are referenced by file stem."""

    ENV_EXTS = (".exr", ".hdr")
    LDR_EXTS = (".jpg", ".jpeg", ".png")

    def __init__(self, root):
        self.root = Path(root)
        self._env_paths = self._scan(self.root / "env", self.ENV_EXTS)
        self._ldr_paths = self._scan(self.root / "ldr", self.LDR_EXTS)
        self._env_cache: dict[str, RadianceImage] = {}

    @staticmethod
    def _scan(directory, exts):
        if not directory.is_dir():
            return {}
        return {p.stem: p for p in sorted(directory.iterdir())
                if p.suffix.lower() in exts}

    @property
    def env_ids(self) -> list[str]:
        return sorted(self._env_paths)

    @property
    def ldr_ids(self) -> list[str]:
        return sorted(self._ldr_paths)

    def env_path(self, env_id: str) -> Path:
        try:
            return self._env_paths[env_id]
        except KeyError:
            raise KeyError(f"unknown environment asset {env_id!r}") from None

    def load_env(self, env_id: str) -> RadianceImage:
        if env_id not in self._env_cache:
            self._env_cache[env_id] = load_hdr(self.env_path(env_id))
        return self._env_cache[env_id]

    def load_ldr(self, ldr_id: str) -> LdrImage:
        try:
            return load_ldr(self._ldr_paths[ldr_id])
        except KeyError:
            raise KeyError(f"unknown LDR asset {ldr_id!r}") from None


def make_scene(params, registry: AssetRegistry) -> SceneConfig:
    """Deterministically build a renderable scene from sampled parameters.

    World frame: pane center at the origin with its normal along +z; the
    camera sits on the +z side."""
    glass = GlassSpec(
        thickness=params.thickness,
        ior=params.ior,
        roughness=params.roughness,
        absorption=tuple(params.absorption),
        double_layer=params.double_layer,
        interlayer_gap=params.interlayer_gap,
    )

    dist = params.cam_distance
    fov = params.fov
    aspect = params.resolution[0] / params.resolution[1]
    half_h = np.tan(np.radians(fov) / 2.0) * dist * params.pane_cover
    half_w = half_h * aspect

    pane = GlassPane(
        spec=glass,
        center=(0.0, 0.0, 0.0),
        normal=(0.0, 0.0, 1.0),
        tangent_u=(1.0, 0.0, 0.0),
        tangent_v=(0.0, 1.0, 0.0),
        half_u=float(half_w),
        half_v=float(half_h),
    )

    cam = CameraSpec(
        position=(params.cam_offset[0], params.cam_offset[1], dist),
        look_at=(0.0, 0.0, 0.0),
        vertical_fov=fov,
        focal_distance=params.focal_distance,
        aperture_radius=aperture_radius_from_f_number(params.f_number, fov),
        width=params.resolution[0],
        height=params.resolution[1],
    )

    env = build_env_cdf(registry.load_env(params.env_id), rotation=params.env_rotation)
    env_refl = None
    if params.env_reflection_id is not None and params.env_reflection_id != params.env_id:
        env_refl = build_env_cdf(registry.load_env(params.env_reflection_id),
                                 rotation=params.env_rotation)

    setup = SceneSetup(params.setup)
    front_bb = back_bb = None
    if setup is SceneSetup.HDR_LDR:
        # emissive quad behind the camera, covering the mirror-reflected frustum
        d_b = params.billboard_distance
        span = np.tan(np.radians(fov) / 2.0) * (d_b + 2.0 * dist) * 1.3
        front_bb = Billboard(
            image=registry.load_ldr(params.ldr_id),
            center=(params.cam_offset[0], params.cam_offset[1], dist + d_b),
            tangent_u=(1.0, 0.0, 0.0),
            tangent_v=(0.0, 1.0, 0.0),
            half_u=float(span * aspect),
            half_v=float(span),
            emission_scale=params.emission_scale,
        )
    elif setup is SceneSetup.LDR_HDR:
        # artwork behind the glass, covering the transmitted frustum
        d_b = params.billboard_distance
        span = np.tan(np.radians(fov) / 2.0) * (dist + d_b) * 1.15
        back_bb = Billboard(
            image=registry.load_ldr(params.ldr_id),
            center=(0.0, 0.0, -d_b),
            tangent_u=(1.0, 0.0, 0.0),
            tangent_v=(0.0, 1.0, 0.0),
            half_u=float(span * aspect),
            half_v=float(span),
            emission_scale=params.emission_scale,
        )

    return SceneConfig(setup=setup, env=env, pane=pane, camera=cam,
                       env_reflection=env_refl, front_billboard=front_bb,
                       back_billboard=back_bb)
