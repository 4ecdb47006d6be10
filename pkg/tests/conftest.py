"""Shared fixtures: uniform environments, oracle scenes, a tiny asset tree."""

import numpy as np
import pytest

from glassgen import imagecore
from glassgen.camera import CameraSpec
from glassgen.envmap import build_env_cdf
from glassgen.imagecore import LdrImage, RadianceImage
from glassgen.optics import GlassSpec
from glassgen.scene import GlassPane, SceneConfig, SceneSetup


def uniform_env(value=0.7, shape=(8, 16)):
    img = np.full(shape + (3,), value, dtype=np.float32)
    return build_env_cdf(RadianceImage(img), rotation=0.0)


def oracle_scene(spec, env_value=0.7, fov=3.0, res=24, angle_deg=0.0,
                 dist=3.0, env=None):
    """Narrow-FOV camera looking at a huge pane, so every camera ray meets
    the pane at ~angle_deg from its normal."""
    th = np.radians(angle_deg)
    pane = GlassPane(spec=spec, center=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0),
                     tangent_u=(1.0, 0.0, 0.0), tangent_v=(0.0, 1.0, 0.0),
                     half_u=200.0, half_v=200.0)
    cam = CameraSpec(position=(dist * np.sin(th), 0.0, dist * np.cos(th)),
                     look_at=(0.0, 0.0, 0.0), vertical_fov=fov,
                     focal_distance=dist, aperture_radius=0.0,
                     width=res, height=res)
    return SceneConfig(setup=SceneSetup.HDR_HDR, camera=cam, pane=pane,
                       env=env if env is not None else uniform_env(env_value))


@pytest.fixture(scope="session")
def asset_root(tmp_path_factory):
    """Registry tree with two small environment maps and one LDR image."""
    root = tmp_path_factory.mktemp("assets")
    (root / "env").mkdir()
    (root / "ldr").mkdir()
    rng = np.random.default_rng(11)
    for name in ("env_a", "env_b"):
        img = (rng.random((32, 64, 3)) * 2.0).astype(np.float32)
        imagecore.write_exr(RadianceImage(img), root / "env" / f"{name}.exr")
    arr = (rng.random((40, 60, 3)) * 255).astype(np.uint8)
    imagecore.write_png(LdrImage(arr), root / "ldr" / "pic_a.png")
    return root


def smooth_spec(**kw):
    defaults = dict(thickness=0.006, ior=1.5)
    defaults.update(kw)
    return GlassSpec(**defaults)
