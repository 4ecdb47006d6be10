"""Equirectangular environment maps: lookup, pdf consistency, sampling."""

import numpy as np
import pytest

from glassgen.envmap import (build_env_cdf, env_lookup, env_pdf, luminance,
                             sample_env)
from glassgen.imagecore import RadianceImage

FOUR_PI = 4.0 * np.pi


def _img(arr):
    return RadianceImage(np.asarray(arr, dtype=np.float32))


def test_build_validation():
    with pytest.raises(ValueError):
        build_env_cdf(_img(np.ones((8, 8, 3))))  # wrong aspect
    with pytest.raises(ValueError):
        build_env_cdf(_img(np.zeros((8, 16, 3))))  # no energy


def test_uniform_map_pdf_is_uniform_sphere():
    env = build_env_cdf(_img(np.ones((16, 32, 3))))
    # oracle: uniform luminance -> draw density is exactly 1/(4 pi) everywhere
    assert np.allclose(env.pdf_grid, 1.0 / FOUR_PI, atol=1e-12)
    rng = np.random.default_rng(0)
    d, pdf = sample_env(env, rng.random(1000), rng.random(1000))
    assert np.allclose(pdf, 1.0 / FOUR_PI)
    assert np.allclose(np.linalg.norm(d, axis=-1), 1.0, atol=1e-9)


def test_pdf_integrates_to_one():
    rng = np.random.default_rng(1)
    env = build_env_cdf(_img(rng.random((16, 32, 3))))
    # sum pdf * texel solid angle over the grid = 1
    theta_edges = np.linspace(0, np.pi, 17)
    band = np.cos(theta_edges[:-1]) - np.cos(theta_edges[1:])
    omega = band[:, None] * (2 * np.pi / 32)
    assert float((env.pdf_grid * omega).sum()) == pytest.approx(1.0, abs=1e-9)


def test_sample_env_matches_env_pdf():
    rng = np.random.default_rng(2)
    env = build_env_cdf(_img(rng.random((16, 32, 3)) ** 2), rotation=0.7)
    d, pdf = sample_env(env, rng.random(500), rng.random(500))
    assert np.allclose(env_pdf(env, d), pdf, rtol=1e-9)


def test_monte_carlo_estimates_average_radiance():
    """f/pdf over importance samples must estimate the sphere average."""
    rng = np.random.default_rng(3)
    img = rng.random((16, 32, 3)).astype(np.float64) + 0.05
    env = build_env_cdf(_img(img))
    n = 200000
    d, pdf = sample_env(env, rng.random(n), rng.random(n))
    vals = luminance(env_lookup(env, d)) / pdf
    estimate = vals.mean() / FOUR_PI  # mean radiance over the sphere

    theta_edges = np.linspace(0, np.pi, 17)
    band = np.cos(theta_edges[:-1]) - np.cos(theta_edges[1:])
    omega = band[:, None] * (2 * np.pi / 32)
    truth = float((luminance(img) * omega).sum() / FOUR_PI)
    assert estimate == pytest.approx(truth, rel=0.02)


def test_lookup_direction_mapping():
    """+y maps to the top row, -y to the bottom, rotation shifts azimuth."""
    img = np.zeros((16, 32, 3), dtype=np.float32)
    img[0, :] = 3.0  # top rows = around +y
    img[-1, :] = 5.0
    img[8, :] = 1.0
    env = build_env_cdf(_img(img))
    assert np.allclose(env_lookup(env, np.array([0.0, 1.0, 0.0])), 3.0)
    assert np.allclose(env_lookup(env, np.array([0.0, -1.0, 0.0])), 5.0)


def test_lookup_rotation_shifts_azimuth():
    img = np.zeros((8, 16, 3), dtype=np.float32)
    img[:, 0] = 2.0  # phi ~ 0 column
    img += 0.01
    base = build_env_cdf(_img(img), rotation=0.0)
    spun = build_env_cdf(_img(img), rotation=np.pi / 2.0)
    d_x = np.array([1.0, 0.0, 0.0])  # phi = 0
    d_z = np.array([0.0, 0.0, 1.0])  # phi = pi/2
    assert np.allclose(env_lookup(base, d_x), env_lookup(spun, d_z))


def test_lookup_bilinear_between_texels():
    img = np.zeros((8, 16, 3), dtype=np.float32)
    img[4, :] = 1.0
    img[3, :] = 0.0
    img += 0.0
    env = build_env_cdf(_img(img + 1e-3))
    # direction exactly between row 3 and 4 centers -> average of the rows
    theta = np.pi * (4.0 / 8.0)  # v = 0.5, y*h = 4.0, halfway between centers
    d = np.array([np.sin(theta), np.cos(theta), 0.0])
    val = env_lookup(env, d)
    assert np.allclose(val, 0.5 * (img[3, 0] + img[4, 0]) + 1e-3, atol=1e-6)


def test_zero_luminance_texels_never_sampled():
    img = np.zeros((8, 16, 3), dtype=np.float32)
    img[2, 5] = 4.0  # single bright texel
    env = build_env_cdf(_img(img))
    rng = np.random.default_rng(4)
    d, pdf = sample_env(env, rng.random(2000), rng.random(2000))
    assert np.all(luminance(env_lookup(env, d)) > 0)
    assert np.all(pdf > 0)
