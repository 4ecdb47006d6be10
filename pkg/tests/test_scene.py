"""Scene geometry, intersection queries, asset registry, scene building."""

import numpy as np
import pytest

from conftest import smooth_spec, uniform_env
from glassgen.dataset import SampledParameters
from glassgen.imagecore import LdrImage
from glassgen.optics import GlassSpec
from glassgen.scene import (BILLBOARD, MISS, PANE_FACE, AssetRegistry,
                            Billboard, GlassPane, SceneConfig, SceneSetup,
                            make_scene, ray_plane, ray_quad, intersect)


def _pane(**kw):
    base = dict(spec=smooth_spec(), center=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0),
                tangent_u=(1.0, 0.0, 0.0), tangent_v=(0.0, 1.0, 0.0),
                half_u=1.0, half_v=1.0)
    base.update(kw)
    return GlassPane(**base)


def test_ray_quad_hit_and_miss():
    o = np.array([[0.2, 0.3, 2.0], [5.0, 0.0, 2.0], [0.0, 0.0, 2.0]])
    d = np.array([[0.0, 0.0, -1.0], [0.0, 0.0, -1.0], [0.0, 0.0, 1.0]])
    t, u, v = ray_quad(o, d, (0, 0, 0), (0, 0, 1), (1, 0, 0), (0, 1, 0), 1.0, 1.0)
    assert t[0] == pytest.approx(2.0)
    assert u[0] == pytest.approx(0.2) and v[0] == pytest.approx(0.3)
    assert np.isinf(t[1])  # outside bounds
    assert np.isinf(t[2])  # behind


def test_ray_plane_parallel_is_miss():
    o = np.array([[0.0, 0.0, 1.0]])
    d = np.array([[1.0, 0.0, 0.0]])
    assert np.isinf(ray_plane(o, d, (0, 0, 0), (0, 0, 1))[0])


def test_face_points_single_and_double():
    p = _pane()
    pts = p.face_points()
    assert pts.shape == (1, 2, 3)
    assert pts[0, 0, 2] == pytest.approx(0.003)  # front face
    assert pts[0, 1, 2] == pytest.approx(-0.003)

    pd = _pane(spec=smooth_spec(double_layer=True, interlayer_gap=0.01))
    pts = pd.face_points()
    assert pts.shape == (2, 2, 3)
    # second pane sits thickness+gap behind the first
    assert pts[1, 0, 2] == pytest.approx(0.003 - 0.016)


def test_intersect_finds_nearest_pane_face():
    scene = SceneConfig(setup=SceneSetup.HDR_HDR, env=uniform_env(),
                        pane=_pane(), camera=_dummy_cam())
    o = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [3.0, 0.0, 1.0]])
    d = np.array([[0.0, 0.0, -1.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    hit = intersect(scene, o, d)
    assert hit["kind"][0] == PANE_FACE
    assert hit["t"][0] == pytest.approx(1.0 - 0.003)
    assert hit["face"][0] == 0
    assert hit["kind"][1] == MISS
    assert hit["kind"][2] == MISS  # outside the pane rectangle


def _dummy_cam():
    from glassgen.camera import CameraSpec
    return CameraSpec(position=(0.0, 0.0, 3.0), look_at=(0.0, 0.0, 0.0),
                      vertical_fov=40.0, width=8, height=8)


def test_intersect_billboard():
    board = Billboard(image=LdrImage(np.full((4, 4, 3), 255, dtype=np.uint8)),
                      center=(0.0, 0.0, -2.0), tangent_u=(1.0, 0.0, 0.0),
                      tangent_v=(0.0, 1.0, 0.0), half_u=3.0, half_v=3.0)
    scene = SceneConfig(setup=SceneSetup.LDR_HDR, env=uniform_env(),
                        pane=_pane(), camera=_dummy_cam(), back_billboard=board)
    o = np.array([[2.0, 0.0, 1.0]])  # misses the pane, hits the board
    d = np.array([[0.0, 0.0, -1.0]])
    hit = intersect(scene, o, d)
    assert hit["kind"][0] == BILLBOARD
    assert hit["t"][0] == pytest.approx(3.0)


def test_billboard_emission_matches_srgb_decode():
    arr = np.full((4, 4, 3), 128, dtype=np.uint8)
    board = Billboard(image=LdrImage(arr), center=(0, 0, 0),
                      tangent_u=(1, 0, 0), tangent_v=(0, 1, 0),
                      half_u=1.0, half_v=1.0, emission_scale=2.0)
    from glassgen.imagecore import srgb_decode
    val = board.emission(np.array([0.0]), np.array([0.0]))
    assert np.allclose(val, srgb_decode(128 / 255.0) * 2.0)


def test_scene_config_setup_invariants():
    with pytest.raises(ValueError):
        SceneConfig(setup=SceneSetup.HDR_LDR, env=uniform_env(), pane=_pane(),
                    camera=_dummy_cam())  # missing front billboard
    with pytest.raises(ValueError):
        SceneConfig(setup=SceneSetup.LDR_HDR, env=uniform_env(), pane=_pane(),
                    camera=_dummy_cam())  # missing back billboard


def test_asset_registry(asset_root):
    reg = AssetRegistry(asset_root)
    assert reg.env_ids == ["env_a", "env_b"]
    assert reg.ldr_ids == ["pic_a"]
    img = reg.load_env("env_a")
    assert img is reg.load_env("env_a")  # cached
    assert reg.load_ldr("pic_a").data.shape == (40, 60, 3)
    with pytest.raises(KeyError):
        reg.env_path("nope")
    with pytest.raises(KeyError):
        reg.load_ldr("nope")


def _params(**kw):
    base = dict(seed=1, setup="hdr_hdr", thickness=0.006, ior=1.5, roughness=0.0,
                absorption=(0.0, 0.0, 0.0), double_layer=False, interlayer_gap=0.0,
                env_id="env_a", env_reflection_id=None, ldr_id=None,
                env_rotation=0.4, fov=45.0, f_number=8.0, focal_distance=2.0,
                cam_distance=2.0, cam_offset=(0.05, -0.02), pane_cover=1.5,
                billboard_distance=1.0, emission_scale=1.0, jpeg_quality=90,
                resolution=(64, 48))
    base.update(kw)
    return SampledParameters(**base)


def test_make_scene_setups(asset_root):
    reg = AssetRegistry(asset_root)
    s = make_scene(_params(), reg)
    assert s.setup is SceneSetup.HDR_HDR and not s.billboards
    assert s.camera.width == 64 and s.camera.height == 48
    # pane covers the frustum at the pane plane times pane_cover
    expect_half_v = np.tan(np.radians(45.0) / 2.0) * 2.0 * 1.5
    assert s.pane.half_v == pytest.approx(expect_half_v)

    s2 = make_scene(_params(setup="hdr_ldr", ldr_id="pic_a"), reg)
    assert s2.front_billboard is not None and s2.back_billboard is None
    assert s2.front_billboard.center[2] > s2.camera.position[2]

    s3 = make_scene(_params(setup="ldr_hdr", ldr_id="pic_a"), reg)
    assert s3.back_billboard is not None and s3.front_billboard is None
    assert s3.back_billboard.center[2] < 0

    s4 = make_scene(_params(env_reflection_id="env_b"), reg)
    assert s4.env_reflection is not None
