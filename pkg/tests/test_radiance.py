import numpy as np
import pytest

from relightkit.radiance import (
    EnvironmentMap,
    LinearImage,
    Mask,
    direction_to_uv,
    env_texel_directions,
    gamma_decode,
    gamma_encode,
    rotate_env,
    sample_env,
    texel_solid_angle,
    texel_solid_angles,
    uv_to_direction,
    yaw_matrix,
)


def test_linear_image_validates_shape_and_range():
    with pytest.raises(ValueError):
        LinearImage(np.zeros((4, 4, 2), np.float32))
    with pytest.raises(ValueError):
        LinearImage(np.full((4, 4, 3), -0.1, np.float32))
    with pytest.raises(ValueError):
        LinearImage(np.full((4, 4, 3), np.nan, np.float32))
    img = LinearImage(np.zeros((4, 6), np.float32))
    assert img.channels == 1 and img.width == 6 and img.height == 4


def test_mask_range():
    with pytest.raises(ValueError):
        Mask(np.full((4, 4), 1.5, np.float32))
    m = Mask.full(6, 4)
    assert m.data.shape == (4, 6)


def test_env_requires_two_to_one_aspect():
    with pytest.raises(ValueError):
        EnvironmentMap(LinearImage(np.zeros((8, 8, 3), np.float32)))
    env = EnvironmentMap.constant(8, 2.0)
    assert env.width == 16 and float(env.data[0, 0, 0]) == 2.0


def test_gamma_endpoints_and_known_value():
    img = LinearImage(np.array([[[0.0], [1.0], [0.5]]], np.float32))
    enc = gamma_encode(img)
    assert float(enc.data[0, 0, 0]) == 0.0
    assert float(enc.data[0, 1, 0]) == 1.0
    # 0.5 ** (1/2.2)
    assert abs(float(enc.data[0, 2, 0]) - 0.7297400) < 1e-6


def test_gamma_round_trip():
    vals = np.linspace(0.0, 1.0, 64, dtype=np.float32).reshape(8, 8, 1)
    back = gamma_decode(gamma_encode(LinearImage(vals)))
    assert np.abs(back.data - vals).max() < 1e-6


def test_gamma_decode_rejects_out_of_range():
    with pytest.raises(ValueError):
        gamma_decode(LinearImage(np.full((2, 2, 1), 1.5, np.float32)))


def test_uv_direction_round_trip():
    rng = np.random.default_rng(11)
    uv = rng.random((128, 2))
    uv[:, 1] = 0.02 + 0.96 * uv[:, 1]  # stay off the degenerate poles
    back = direction_to_uv(uv_to_direction(uv))
    du = np.abs(back[:, 0] - uv[:, 0])
    du = np.minimum(du, 1.0 - du)  # azimuth wraps
    assert du.max() < 1e-6
    assert np.abs(back[:, 1] - uv[:, 1]).max() < 1e-6


def test_direction_axes():
    assert np.allclose(uv_to_direction([0.0, 0.5]), [1, 0, 0], atol=1e-12)
    assert np.allclose(uv_to_direction([0.25, 0.5]), [0, 1, 0], atol=1e-12)
    assert np.allclose(uv_to_direction([0.0, 0.0]), [0, 0, 1], atol=1e-12)
    assert np.allclose(uv_to_direction([0.0, 1.0]), [0, 0, -1], atol=1e-12)


def test_direction_to_uv_rejects_zero():
    with pytest.raises(ValueError):
        direction_to_uv([0.0, 0.0, 0.0])


def test_sample_constant_env_exact():
    env = EnvironmentMap.constant(16, 0.7)
    rng = np.random.default_rng(3)
    d = rng.normal(size=(64, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    vals = sample_env(env, d)
    assert np.all(vals == np.float32(0.7))


def test_sample_single_hot_texel():
    data = np.zeros((8, 16, 3), np.float32)
    data[3, 5] = 4.0
    env = EnvironmentMap(LinearImage(data))
    centers = env_texel_directions(16, 8)
    assert np.allclose(sample_env(env, centers[3, 5]), 4.0, atol=1e-6)
    # opposite direction sees nothing
    assert np.allclose(sample_env(env, -centers[3, 5]), 0.0)


def test_bilinear_midpoint_average():
    # halfway between two horizontally adjacent texels on the same row
    data = np.zeros((4, 8, 1), np.float64)
    data[2, 3] = 1.0
    data[2, 4] = 3.0
    env = EnvironmentMap(LinearImage(data.astype(np.float32)))
    uv = np.array([(4.0) / 8.0, (2.5) / 4.0])  # u midway between texels 3 and 4
    val = sample_env(env, uv_to_direction(uv))
    assert abs(float(val[0]) - 2.0) < 1e-6


def test_solid_angles_sum_to_sphere():
    for h in (4, 16, 64):
        total = texel_solid_angles(2 * h, h).sum() * 2 * h
        assert abs(total - 4.0 * np.pi) < 1e-9
    env = EnvironmentMap.constant(8)
    assert texel_solid_angle(env, 0) > 0
    with pytest.raises(IndexError):
        texel_solid_angle(env, 8)


def test_solid_angle_quartering():
    # doubling both dimensions cuts the equator texel solid angle to ~1/4
    a = texel_solid_angles(32, 16)[8]
    b = texel_solid_angles(64, 32)[16]
    assert abs(a / b - 4.0) < 0.02


def test_yaw_rotation_moves_content():
    data = np.zeros((8, 16, 3), np.float32)
    data[4, 0] = 1.0  # phi ~ 0 on the equator band
    env = EnvironmentMap(LinearImage(data))
    rot = rotate_env(env, np.pi)
    assert float(rot.data[4, 8, 0]) == 1.0
    assert float(rot.data[4, 0, 0]) == 0.0


def test_yaw_full_turn_is_identity():
    rng = np.random.default_rng(5)
    env = EnvironmentMap(LinearImage(rng.random((8, 16, 3)).astype(np.float32)))
    out = rotate_env(env, 2.0 * np.pi)
    assert np.array_equal(out.data, env.data)


def test_yaw_matches_matrix_rotation():
    rng = np.random.default_rng(6)
    env = EnvironmentMap(LinearImage(rng.random((16, 32, 3)).astype(np.float32)))
    yaw = 2.0 * np.pi * 5 / 32  # texel-aligned so both paths are exact
    a = rotate_env(env, yaw)
    b = rotate_env(env, yaw_matrix(yaw))
    assert np.abs(a.data - b.data).max() < 1e-5


def test_rotation_group_action():
    # texel-aligned yaws compose exactly (integer column rolls); fractional
    # yaws would interpolate twice and only agree on smooth maps
    rng = np.random.default_rng(7)
    env = EnvironmentMap(LinearImage(rng.random((8, 16, 3)).astype(np.float32)))
    y1 = 2.0 * np.pi * 3 / 16
    y2 = 2.0 * np.pi * 5 / 16
    a = rotate_env(rotate_env(env, y1), y2)
    b = rotate_env(env, y1 + y2)
    assert np.abs(a.data - b.data).max() < 1e-6


def test_rotated_sample_consistency():
    # sampling the rotated map at d equals sampling the source at R^-1 d,
    # exactly for texel-aligned yaw
    rng = np.random.default_rng(8)
    env = EnvironmentMap(LinearImage(rng.random((16, 32, 3)).astype(np.float32)))
    yaw = 2.0 * np.pi * 3 / 32
    rot = rotate_env(env, yaw)
    d = np.array([0.6, -0.3, 0.74])
    d /= np.linalg.norm(d)
    lhs = sample_env(rot, d)
    rhs = sample_env(env, yaw_matrix(-yaw) @ d)
    assert np.abs(lhs - rhs).max() < 1e-6


def test_sample_env_nonnegative_everywhere():
    rng = np.random.default_rng(9)
    env = EnvironmentMap(LinearImage(rng.random((8, 16, 3)).astype(np.float32)))
    d = rng.normal(size=(256, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    assert sample_env(env, d).min() >= 0.0
