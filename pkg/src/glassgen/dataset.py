"""Dataset workflow: parameter sampling, per-sample rendering and packaging,
manifest emission, and the analytic-oracle verification report.

Determinism contract: sample i draws everything from seed = derive_seed(
base_seed, i), so outputs are byte-identical regardless of parallelism.
"""

from __future__ import annotations

import dataclasses
import json
import os
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import imagecore
from .envmap import build_env_cdf
from .imagecore import RadianceImage
from .camera import CameraSpec
from .optics import (GlassSpec, double_slab_response_analytic,
                     slab_response_analytic)
from .postfx import build_training_pair, shared_tonemap_quintuple
from .renderer import RenderMode, RenderSettings, render, render_quintuple
from .rng import derive_seed
from .scene import (AssetRegistry, GlassPane, SceneConfig, SceneSetup,
                    make_scene)

# Fixed caption attached to every manifest line.
PROMPT = (
    "This set of three images showcases an image decomposition task; "
    "[IMAGE1] captures an image looking through a transparent glass, both "
    "the scene behind the glass and the reflection of the glass could be "
    "seen; [IMAGE2] displays the transmission of glass with reflection "
    "removed; [IMAGE3] shows only the reflection of glass without "
    "transmission; [IMAGE1] could be decomposed to [IMAGE2] and [IMAGE3]."
)

MODE_ORDER = ("I", "T", "B", "R", "MR")


@dataclass(frozen=True)
class SamplerConfig:
    """All sampling ranges and weights in one overridable block.

    Paper-sourced: the two thickness bands, the IOR range, and the FOV /
    f-number / focal-distance spreads. Mixture weights and everything else
    are generator design choices.
    """

    thickness_thin_mm: tuple[float, float] = (3.0, 6.0)
    thickness_thick_mm: tuple[float, float] = (10.0, 40.0)
    thin_probability: float = 0.7
    ior_range: tuple[float, float] = (1.45, 1.65)
    smooth_probability: float = 0.8
    roughness_max: float = 0.3
    clear_probability: float = 0.6  # no absorption
    absorption_max: float = 150.0  # 1/m, per channel
    double_layer_probability: float = 0.2
    interlayer_gap_mm: tuple[float, float] = (6.0, 20.0)
    setup_weights: tuple[float, float, float] = (0.6, 0.2, 0.2)  # hdr_hdr, hdr_ldr, ldr_hdr
    fov_deg: tuple[float, float] = (25.0, 75.0)
    f_number: tuple[float, float] = (1.8, 16.0)
    focal_distance_m: tuple[float, float] = (0.5, 10.0)
    cam_distance_m: tuple[float, float] = (0.5, 3.0)
    cam_offset_m: float = 0.15  # max |x|,|y| camera offset from pane axis
    pane_cover: tuple[float, float] = (1.2, 2.0)  # pane size / frustum size
    billboard_distance_m: tuple[float, float] = (0.5, 3.0)
    emission_scale: tuple[float, float] = (0.5, 2.0)
    separate_reflection_env_probability: float = 0.3
    jpeg_quality: tuple[int, int] = (60, 95)  # inclusive
    resolution: tuple[int, int] = (256, 256)
    base_spp: int = 64
    max_spp: int = 256
    adaptive_threshold: float = 0.02

    @classmethod
    def from_overrides(cls, overrides: dict | None) -> "SamplerConfig":
        if not overrides:
            return cls()
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(overrides) - names
        if unknown:
            raise ValueError(f"unknown sampler config keys: {sorted(unknown)}")
        clean = {k: tuple(v) if isinstance(v, list) else v
                 for k, v in overrides.items()}
        return cls(**clean)


@dataclass(frozen=True)
class SampledParameters:
    """Everything needed to rebuild one sample's scene, bit-for-bit."""

    seed: int
    setup: str  # SceneSetup value
    thickness: float  # meters
    ior: float
    roughness: float
    absorption: tuple[float, float, float]
    double_layer: bool
    interlayer_gap: float  # meters
    env_id: str
    env_reflection_id: str | None
    ldr_id: str | None
    env_rotation: float  # radians
    fov: float  # degrees, vertical
    f_number: float
    focal_distance: float
    cam_distance: float
    cam_offset: tuple[float, float]
    pane_cover: float
    billboard_distance: float
    emission_scale: float
    jpeg_quality: int
    resolution: tuple[int, int]

    def to_json_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json_dict(cls, d: dict) -> "SampledParameters":
        d = dict(d)
        for key in ("absorption", "cam_offset", "resolution"):
            d[key] = tuple(d[key])
        return cls(**d)


def sample_parameters(seed: int, registry: AssetRegistry,
                      config: SamplerConfig | None = None) -> SampledParameters:
    """Draw one parameter set; a fixed seed reproduces the draw exactly."""
    cfg = config or SamplerConfig()
    if not registry.env_ids:
        raise ValueError("asset registry has no environment maps")
    rng = np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))

    if rng.random() < cfg.thin_probability:
        thickness = rng.uniform(*cfg.thickness_thin_mm) * 1e-3
    else:
        thickness = rng.uniform(*cfg.thickness_thick_mm) * 1e-3
    ior = rng.uniform(*cfg.ior_range)
    if rng.random() < cfg.smooth_probability:
        roughness = 0.0
    else:
        # uniform on (0, roughness_max]
        roughness = cfg.roughness_max * (1.0 - rng.random())
    if rng.random() < cfg.clear_probability:
        absorption = (0.0, 0.0, 0.0)
    else:
        absorption = tuple(rng.uniform(0.0, cfg.absorption_max, size=3))
    double_layer = rng.random() < cfg.double_layer_probability
    gap = rng.uniform(*cfg.interlayer_gap_mm) * 1e-3 if double_layer else 0.0

    setups = [SceneSetup.HDR_HDR, SceneSetup.HDR_LDR, SceneSetup.LDR_HDR]
    weights = np.asarray(cfg.setup_weights, dtype=np.float64)
    if not registry.ldr_ids:  # billboard setups need LDR assets
        weights = np.array([1.0, 0.0, 0.0])
    setup = setups[rng.choice(3, p=weights / weights.sum())]

    env_id = registry.env_ids[rng.integers(len(registry.env_ids))]
    env_reflection_id = None
    if (setup is SceneSetup.HDR_HDR and len(registry.env_ids) > 1
            and rng.random() < cfg.separate_reflection_env_probability):
        others = [e for e in registry.env_ids if e != env_id]
        env_reflection_id = others[rng.integers(len(others))]
    ldr_id = None
    if setup is not SceneSetup.HDR_HDR:
        ldr_id = registry.ldr_ids[rng.integers(len(registry.ldr_ids))]

    return SampledParameters(
        seed=int(seed),
        setup=setup.value,
        thickness=float(thickness),
        ior=float(ior),
        roughness=float(roughness),
        absorption=tuple(float(a) for a in absorption),
        double_layer=bool(double_layer),
        interlayer_gap=float(gap),
        env_id=env_id,
        env_reflection_id=env_reflection_id,
        ldr_id=ldr_id,
        env_rotation=float(rng.uniform(0.0, 2.0 * np.pi)),
        fov=float(rng.uniform(*cfg.fov_deg)),
        f_number=float(rng.uniform(*cfg.f_number)),
        focal_distance=float(rng.uniform(*cfg.focal_distance_m)),
        cam_distance=float(rng.uniform(*cfg.cam_distance_m)),
        cam_offset=(float(rng.uniform(-cfg.cam_offset_m, cfg.cam_offset_m)),
                    float(rng.uniform(-cfg.cam_offset_m, cfg.cam_offset_m))),
        pane_cover=float(rng.uniform(*cfg.pane_cover)),
        billboard_distance=float(rng.uniform(*cfg.billboard_distance_m)),
        emission_scale=float(rng.uniform(*cfg.emission_scale)),
        jpeg_quality=int(rng.integers(cfg.jpeg_quality[0], cfg.jpeg_quality[1] + 1)),
        resolution=(int(cfg.resolution[0]), int(cfg.resolution[1])),
    )


@dataclass
class SampleRecord:
    sample_id: str
    params: SampledParameters
    post: dict
    files: dict[str, str]
    stats: dict

    def to_json_dict(self) -> dict:
        return {"sample_id": self.sample_id,
                "params": self.params.to_json_dict(),
                "post": self.post, "files": self.files, "stats": self.stats}

    @classmethod
    def from_json_dict(cls, d: dict) -> "SampleRecord":
        return cls(sample_id=d["sample_id"],
                   params=SampledParameters.from_json_dict(d["params"]),
                   post=d["post"], files=d["files"], stats=d["stats"])


def _render_settings(params: SampledParameters, cfg: SamplerConfig) -> RenderSettings:
    return RenderSettings(base_spp=cfg.base_spp, max_spp=cfg.max_spp,
                          adaptive_threshold=cfg.adaptive_threshold,
                          seed=params.seed)


def generate_sample(params: SampledParameters, registry: AssetRegistry,
                    out_dir, config: SamplerConfig | None = None,
                    workers: int = 1) -> SampleRecord:
    """Render one quintuple and write the full sample package."""
    cfg = config or SamplerConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scene = make_scene(params, registry)
    settings = _render_settings(params, cfg)

    outputs = render_quintuple(scene, settings, workers=workers)
    linear = {m: outputs[RenderMode(m)].image for m in MODE_ORDER}
    ldr, post = shared_tonemap_quintuple(linear, jpeg_quality=params.jpeg_quality)
    composite, control = build_training_pair(ldr["I"], ldr["T"], ldr["R"])

    files = {}
    for m in MODE_ORDER:
        exr_path = out / f"{m}.exr"
        jpg_path = out / f"{m}.jpg"
        imagecore.write_exr(linear[m], exr_path)
        imagecore.write_jpeg(ldr[m], post.jpeg_quality, jpg_path)
        files[f"{m}.exr"] = str(exr_path)
        files[f"{m}.jpg"] = str(jpg_path)
    imagecore.write_jpeg(composite, post.jpeg_quality, out / "composite.jpg")
    imagecore.write_jpeg(control, post.jpeg_quality, out / "control.jpg")
    files["composite"] = str(out / "composite.jpg")
    files["control"] = str(out / "control.jpg")

    stats = {m: {"total_samples": outputs[RenderMode(m)].stats.total_samples,
                 "total_bounces": outputs[RenderMode(m)].stats.total_bounces,
                 "nonfinite_samples": outputs[RenderMode(m)].stats.nonfinite_samples,
                 "wall_time": outputs[RenderMode(m)].stats.wall_time}
             for m in MODE_ORDER}
    record = SampleRecord(
        sample_id=out.name,
        params=params,
        post={"exposure": post.exposure, "awb_gains": list(post.awb_gains),
              "jpeg_quality": post.jpeg_quality, "clip_stats": post.clip_stats},
        files=files,
        stats=stats,
    )
    meta_path = out / "meta.json"
    meta_path.write_text(json.dumps(record.to_json_dict(), indent=2) + "\n")
    files["meta"] = str(meta_path)
    return record


@dataclass
class DatasetResult:
    records: list[SampleRecord | None]  # index-aligned; None where failed
    failures: dict[int, str]
    manifest_path: str

    @property
    def all_succeeded(self) -> bool:
        return not self.failures


def generate_dataset(count: int, base_seed: int, registry: AssetRegistry,
                     out_dir, parallelism: int = 1,
                     config: SamplerConfig | None = None) -> DatasetResult:
    """Render `count` samples into out_dir/sample_#####/ plus manifest.jsonl.

    Failed samples are skipped (recorded in the result) to keep seed-index
    alignment; the manifest lists successes in index order.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    cfg = config or SamplerConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def run_one(i: int):
        seed = derive_seed(base_seed, i)
        params = sample_parameters(seed, registry, cfg)
        return generate_sample(params, registry, out / f"sample_{i:05d}", cfg)

    records: list[SampleRecord | None] = [None] * count
    failures: dict[int, str] = {}
    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            futures = {i: pool.submit(run_one, i) for i in range(count)}
        for i, fut in futures.items():
            try:
                records[i] = fut.result()
            except Exception:
                failures[i] = traceback.format_exc(limit=4)
    else:
        for i in range(count):
            try:
                records[i] = run_one(i)
            except Exception:
                failures[i] = traceback.format_exc(limit=4)

    if len(failures) == count:
        raise RuntimeError(f"all {count} samples failed; first error:\n"
                           + next(iter(failures.values())))

    # paths are stored relative to the manifest so datasets are relocatable
    # (and byte-identical across output directories)
    manifest_path = out / "manifest.jsonl"
    with open(manifest_path, "w") as fh:
        for rec in records:
            if rec is None:
                continue
            fh.write(json.dumps(
                {"composite": os.path.relpath(rec.files["composite"], out),
                 "control": os.path.relpath(rec.files["control"], out),
                 "caption": PROMPT}) + "\n")
    return DatasetResult(records=records, failures=failures,
                         manifest_path=str(manifest_path))


# ---------------------------------------------------------------------------
# Oracle verification


def _uniform_env(value: float = 0.7):
    img = np.full((8, 16, 3), value, dtype=np.float32)
    return build_env_cdf(RadianceImage(img), rotation=0.0)


def _oracle_scene(spec: GlassSpec, env_value: float = 0.7,
                  fov: float = 3.0, res: int = 24) -> SceneConfig:
    pane = GlassPane(spec=spec, center=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0),
                     tangent_u=(1.0, 0.0, 0.0), tangent_v=(0.0, 1.0, 0.0),
                     half_u=50.0, half_v=50.0)
    cam = CameraSpec(position=(0.0, 0.0, 3.0), look_at=(0.0, 0.0, 0.0),
                     vertical_fov=fov, focal_distance=3.0, aperture_radius=0.0,
                     width=res, height=res)
    return SceneConfig(setup=SceneSetup.HDR_HDR, camera=cam, pane=pane,
                       env=_uniform_env(env_value))


def verify_oracle(spp: int = 1024, seed: int = 7) -> dict:
    """Run the analytic renderer checks; returns a JSON-able report with an
    overall `passed` flag. Failures are report content, not exceptions."""
    env_value = 0.7
    settings = RenderSettings(base_spp=spp, max_spp=spp, seed=seed)
    checks = []

    def check(name, measured, expected, tolerance):
        scale = abs(expected) if expected != 0 else 1.0
        err = abs(measured - expected) / scale
        checks.append({"name": name, "measured": float(measured),
                       "expected": float(expected), "relative_error": float(err),
                       "tolerance": tolerance, "passed": bool(err <= tolerance)})

    spec = GlassSpec(thickness=0.006, ior=1.5)
    scene = _oracle_scene(spec, env_value)
    ana = slab_response_analytic(spec, 1.0)
    t_img = render(scene, RenderMode.TRANSMISSION, settings).image.data
    r_img = render(scene, RenderMode.REFLECTION, settings).image.data
    check("slab_T", t_img.mean() / env_value, float(ana.transmittance[0]), 0.005)
    check("slab_R", r_img.mean() / env_value, float(np.asarray(ana.reflectance)[0]), 0.005)

    full = render(scene, RenderMode.FULL, settings)
    check("furnace_smooth", full.image.data.mean(), env_value, 0.01)
    checks.append({"name": "furnace_nonfinite", "measured": full.stats.nonfinite_samples,
                   "expected": 0, "relative_error": float(full.stats.nonfinite_samples),
                   "tolerance": 0, "passed": full.stats.nonfinite_samples == 0})

    rough = GlassSpec(thickness=0.006, ior=1.5, roughness=0.3)
    full_r = render(_oracle_scene(rough, env_value), RenderMode.FULL, settings)
    check("furnace_rough", full_r.image.data.mean(), env_value, 0.01)

    i_img = full.image.data
    lin_err = np.abs(i_img - (t_img + r_img)).mean() / i_img.mean()
    checks.append({"name": "linearity_I_eq_T_plus_R", "measured": float(lin_err),
                   "expected": 0.0, "relative_error": float(lin_err),
                   "tolerance": 0.01, "passed": bool(lin_err < 0.01)})

    mr_img = render(scene, RenderMode.MIRROR, settings).image.data
    rho = float(np.asarray(ana.reflectance)[0])
    check("R_eq_rho_MR", r_img.mean() / mr_img.mean(), rho, 0.02)

    double = GlassSpec(thickness=0.006, ior=1.5, double_layer=True,
                       interlayer_gap=0.012)
    scene2 = _oracle_scene(double, env_value)
    ana2 = double_slab_response_analytic(double, 1.0)
    t2 = render(scene2, RenderMode.TRANSMISSION, settings).image.data
    r2 = render(scene2, RenderMode.REFLECTION, settings).image.data
    check("double_T", t2.mean() / env_value, float(ana2.transmittance[0]), 0.01)
    check("double_R", r2.mean() / env_value, float(np.asarray(ana2.reflectance)[0]), 0.01)

    return {"spp": spp, "seed": seed, "checks": checks,
            "passed": all(c["passed"] for c in checks)}
