import numpy as np
import pytest

from relightkit.degrade import (
    DegradeConfig,
    GlareParams,
    MotionBlurParams,
    NoiseParams,
    SpatialRanges,
    asymmetric_pair,
    composite_degrade,
    convolve_reflect,
    exponential_psf,
    glare_field,
    make_psf,
    masked_mean,
    moffat_psf,
    motion_blur_kernel,
    photometric_transform,
    psf_support_radius,
    render_light_sources,
    replay_degrade,
    sensor_noise,
    spatial_augment,
)
from relightkit.radiance import LinearImage, Mask, gamma_encode
from relightkit.synthgen import NormalMap


# ---------------------------------------------------------------------------
# PSFs


def test_psfs_normalized():
    for sigma in (50.0, 125.0, 200.0):
        for beta in (1.0, 2.0, 3.0):
            for fn in (moffat_psf, exponential_psf):
                k = fn(sigma, beta, radius=40)
                assert abs(k.sum() - 1.0) < 1e-6
                assert k.min() >= 0.0
                assert k.shape == (81, 81)


def test_moffat_half_width_ratio():
    # by construction K(0) / K(sigma) = 2^beta
    for beta in (1.0, 2.0, 3.5):
        k = moffat_psf(sigma=10.0, beta=beta, radius=30)
        center = k[30, 30]
        at_sigma = k[30, 40]
        assert abs(center / at_sigma - 2.0**beta) < 1e-9


def test_exponential_beta2_is_gaussian():
    # exp(-r^2/sigma^2) separates into per-axis variance sigma^2/2
    sigma = 6.0
    k = exponential_psf(sigma, 2.0, radius=25)
    ax = np.arange(-25, 26, dtype=np.float64)
    g1 = np.exp(-(ax**2) / sigma**2)
    ref = np.outer(g1, g1)
    ref /= ref.sum()
    assert np.abs(k - ref).max() < 1e-4


def test_psf_monotone_decreasing_from_center():
    k = moffat_psf(sigma=4.0, beta=2.0, radius=12)
    row = k[12, 12:]
    assert np.all(np.diff(row) < 0)


def test_make_psf_dispatch_and_validation():
    assert np.array_equal(make_psf("moffat", 5, 2, 8), moffat_psf(5, 2, 8))
    with pytest.raises(ValueError):
        make_psf("box", 5, 2, 8)
    with pytest.raises(ValueError):
        moffat_psf(-1, 2, 8)
    with pytest.raises(ValueError):
        exponential_psf(5, 2, 0)


def test_support_radius_tracks_sigma_and_cap():
    small = psf_support_radius("exponential", 2.0, 2.0, cap=512)
    big = psf_support_radius("exponential", 8.0, 2.0, cap=512)
    assert small < big
    assert psf_support_radius("moffat", 200.0, 1.0, cap=31) == 31
    with pytest.raises(ValueError):
        psf_support_radius("moffat", 5.0, 2.0, cap=0)


# ---------------------------------------------------------------------------
# convolution


def test_convolve_identity_kernel():
    rng = np.random.default_rng(0)
    img = rng.uniform(0, 1, (16, 16, 3)).astype(np.float32)
    ident = np.zeros((3, 3))
    ident[1, 1] = 1.0
    out = convolve_reflect(img, ident)
    assert np.abs(out - img).max() < 1e-6


def test_convolve_direct_and_fft_agree():
    rng = np.random.default_rng(1)
    img = rng.uniform(0, 1, (80, 80)).astype(np.float32)
    kern = exponential_psf(9.0, 2.0, radius=31)  # direct path
    kern_big = np.pad(kern, 1)  # radius 33 forces the fft path
    kern_big /= kern_big.sum()
    a = convolve_reflect(img, kern)
    b = convolve_reflect(img, kern_big)
    assert np.abs(a - b).max() / np.abs(a).max() < 1e-4


def test_convolve_preserves_mean_under_reflection():
    # reflection padding keeps total energy of a constant image exact
    img = np.full((20, 20), 0.7, np.float32)
    out = convolve_reflect(img, moffat_psf(3.0, 2.0, 5))
    assert np.abs(out - 0.7).max() < 1e-6


def test_convolve_rejects_bad_kernels():
    img = np.zeros((8, 8), np.float32)
    with pytest.raises(ValueError):
        convolve_reflect(img, np.ones((2, 2)))
    with pytest.raises(ValueError):
        convolve_reflect(img, np.ones((9, 9)) / 81.0)


# ---------------------------------------------------------------------------
# glare


def test_light_sources_deterministic_and_additive():
    gp = GlareParams(psf_kind="moffat", sigma=10, beta=2, alpha=1,
                     source_count=3, source_size=(4.0, 10.0))
    a = render_light_sources(32, 24, gp, np.random.default_rng(5))
    b = render_light_sources(32, 24, gp, np.random.default_rng(5))
    assert np.array_equal(a.data, b.data)
    assert a.data.shape == (24, 32, 3)
    assert a.data.max() > 0
    # a same-center pair of max-brightness sources stacks linearly
    gp1 = GlareParams(psf_kind="moffat", sigma=10, beta=2, alpha=1,
                      source_count=1, source_size=(20.0, 20.0),
                      source_color=(2.0, 2.0))
    one = render_light_sources(32, 32, gp1, np.random.default_rng(1))
    gp2 = GlareParams(psf_kind="moffat", sigma=10, beta=2, alpha=1,
                      source_count=2, source_size=(20.0, 20.0),
                      source_color=(2.0, 2.0))
    assert render_light_sources(32, 32, gp2, np.random.default_rng(7)).data.max() \
        >= one.data.max()


def test_glare_field_requires_normalized_kernel():
    src = LinearImage.constant(16, 16, 1.0)
    with pytest.raises(ValueError):
        glare_field(src, np.ones((5, 5)))
    out = glare_field(src, moffat_psf(3.0, 2.0, 5))
    assert np.abs(out.data - 1.0).max() < 1e-6


# ---------------------------------------------------------------------------
# noise


def test_sensor_noise_std_calibration():
    params = NoiseParams(read_std=0.01, shot_gain=0.0)
    sig = LinearImage.constant(256, 256, 0.5)
    n = sensor_noise((256, 256, 3), params, sig, np.random.default_rng(0))
    assert abs(n.std() - 0.01) < 0.001
    assert abs(n.mean()) < 0.001


def test_sensor_noise_shot_component():
    params = NoiseParams(read_std=0.0, shot_gain=0.04)
    bright = LinearImage.constant(128, 128, 1.0)
    dim = LinearImage.constant(128, 128, 0.04)
    nb = sensor_noise((128, 128, 3), params, bright, np.random.default_rng(1))
    nd = sensor_noise((128, 128, 3), params, dim, np.random.default_rng(1))
    # std scales with sqrt(signal): 0.04 vs 0.008
    assert abs(nb.std() - 0.04) < 0.004
    assert abs(nd.std() - 0.008) < 0.0008


def test_correlated_noise_keeps_std_and_gains_correlation():
    params = NoiseParams(read_std=0.02, shot_gain=0.0, correlation_radius=1.2)
    sig = LinearImage.constant(192, 192, 0.0)
    n = sensor_noise((192, 192, 3), params, sig, np.random.default_rng(2))[:, :, 0]
    interior = n[8:-8, 8:-8]
    assert abs(interior.std() - 0.02) < 0.002
    # neighboring pixels are now positively correlated
    r = np.corrcoef(interior[:, :-1].ravel(), interior[:, 1:].ravel())[0, 1]
    assert r > 0.4
    white = sensor_noise((192, 192, 3), NoiseParams(0.02, 0.0), sig,
                         np.random.default_rng(2))[:, :, 0]
    rw = np.corrcoef(white[8:-8, 8:-9].ravel(), white[8:-8, 9:-8].ravel())[0, 1]
    assert abs(rw) < 0.05


# ---------------------------------------------------------------------------
# motion blur


def test_motion_kernel_k1_is_identity():
    assert np.array_equal(motion_blur_kernel(1, 0.7), np.array([[1.0]]))


def test_motion_kernel_axis_aligned_taps():
    k = motion_blur_kernel(15, 0.0)
    row = k[k.shape[0] // 2]
    taps = row[row > 0]
    assert len(taps) == 15
    assert np.allclose(taps, 1.0 / 15.0)
    assert abs(k.sum() - 1.0) < 1e-12


def test_motion_kernel_theta_pi_symmetry():
    a = motion_blur_kernel(9, 0.5)
    b = motion_blur_kernel(9, 0.5 + np.pi)
    assert np.abs(a - b).max() < 1e-12


def test_motion_kernel_diagonal_normalized():
    k = motion_blur_kernel(21, np.pi / 4)
    assert abs(k.sum() - 1.0) < 1e-12
    assert k.min() >= 0.0


def test_motion_params_validation():
    with pytest.raises(ValueError):
        MotionBlurParams(k=0, theta=0.0)
    with pytest.raises(ValueError):
        MotionBlurParams(k=5, theta=7.0)


# ---------------------------------------------------------------------------
# photometric


def test_masked_mean():
    data = np.zeros((2, 2, 3), np.float32)
    data[0, 0] = 1.0
    mask = Mask(np.array([[1, 0], [0, 0]], np.float32))
    assert np.allclose(masked_mean(data, mask), 1.0)
    assert np.allclose(masked_mean(data), 0.25)


def test_photometric_contrast_pivots_on_mean():
    img = LinearImage(np.array([[[0.2] * 3, [0.6] * 3]], np.float32))
    out = photometric_transform(img, gain=1.0, contrast=0.5)
    # mean 0.4 is fixed; the values move halfway toward it
    assert np.allclose(out.data[0, 0], 0.3) and np.allclose(out.data[0, 1], 0.5)


def test_photometric_identity_returns_same_object():
    img = LinearImage.constant(4, 4, 0.5)
    assert photometric_transform(img, 1.0, 1.0) is img
    with pytest.raises(ValueError):
        photometric_transform(img, 0.0, 1.0)


def test_photometric_gain_scales():
    img = LinearImage.constant(4, 4, 0.5)
    out = photometric_transform(img, 1.5, 1.0)
    assert np.allclose(out.data, 0.75)


# ---------------------------------------------------------------------------
# composite model


def seeded_image(h=24, w=24, seed=3):
    rng = np.random.default_rng(seed)
    return LinearImage(rng.uniform(0.0, 1.0, (h, w, 3)).astype(np.float32))


def test_config_json_round_trip():
    cfg = DegradeConfig(p=0.25, k_range=(5, 9), enable_blur=False)
    back = DegradeConfig.from_json(cfg.to_json())
    assert back == cfg


def test_composite_p0_is_pure_gamma():
    img = seeded_image()
    out, record = composite_degrade(img, DegradeConfig(p=0.0), 11)
    assert np.array_equal(out.data, gamma_encode(img).data)
    assert all(not s["applied"] for s in record["stages"].values())


def test_composite_p1_applies_everything():
    img = seeded_image()
    out, record = composite_degrade(img, DegradeConfig(p=1.0), 11)
    assert all(s["applied"] for s in record["stages"].values())
    assert out.data.min() >= 0.0 and out.data.max() <= 1.0
    assert not np.array_equal(out.data, gamma_encode(img).data)


def test_composite_deterministic_in_seed():
    img = seeded_image()
    cfg = DegradeConfig(p=0.7)
    a, ra = composite_degrade(img, cfg, 42)
    b, rb = composite_degrade(img, cfg, 42)
    assert np.array_equal(a.data, b.data) and ra == rb
    c, _ = composite_degrade(img, cfg, 43)
    assert not np.array_equal(a.data, c.data)


def test_replay_reproduces_bitwise():
    img = seeded_image(h=32, w=40, seed=9)
    for seed in (0, 1, 2, 3, 17):
        out, record = composite_degrade(img, DegradeConfig(p=0.8), seed)
        again = replay_degrade(img, record)
        assert np.array_equal(out.data, again.data), f"seed {seed}"


def test_gate_rng_stream_is_stable():
    # disabling a stage must not shift the draws of the others
    img = seeded_image()
    base_cfg = DegradeConfig(p=1.0)
    off_cfg = DegradeConfig(p=1.0, enable_noise=False)
    _, r_all = composite_degrade(img, base_cfg, 5)
    _, r_off = composite_degrade(img, off_cfg, 5)
    assert r_all["stages"]["glare"] == r_off["stages"]["glare"]
    assert r_all["stages"]["blur"] == r_off["stages"]["blur"]
    assert not r_off["stages"]["noise"]["applied"]


# ---------------------------------------------------------------------------
# spatial augmentation


def aligned_sample(h=12, w=8):
    rng = np.random.default_rng(4)
    vec = rng.normal(size=(h, w, 3))
    vec /= np.linalg.norm(vec, axis=-1, keepdims=True)
    return {
        "image": LinearImage(rng.uniform(0, 1, (h, w, 3)).astype(np.float32)),
        "mask": Mask(np.ones((h, w), np.float32)),
        "normals": NormalMap(vec.astype(np.float32)),
    }


def test_spatial_identity_returns_inputs():
    sample = aligned_sample()
    out, record = spatial_augment(sample, SpatialRanges(), 0)
    assert record["scale"] == 1.0 and record["rotation"] == 0.0
    assert np.array_equal(out["image"].data, sample["image"].data)
    assert np.array_equal(out["normals"].vectors, sample["normals"].vectors)


def test_spatial_quarter_turn_is_rot90():
    sample = aligned_sample()
    half_pi = np.pi / 2.0
    out, record = spatial_augment(sample, SpatialRanges(rotation=(half_pi, half_pi)), 0)
    assert out["image"].data.shape[:2] == (8, 12)  # dims swap
    assert np.array_equal(out["image"].data,
                          np.ascontiguousarray(np.rot90(sample["image"].data)))
    # normals rotate with the frame: (nx, ny) -> (-ny, nx)
    v = sample["normals"].vectors
    expect = np.rot90(v, axes=(0, 1)).copy()
    expect_rot = expect.copy()
    expect_rot[..., 0] = -expect[..., 1]
    expect_rot[..., 1] = expect[..., 0]
    assert np.abs(out["normals"].vectors - expect_rot).max() < 1e-6


def test_spatial_general_warp_keeps_normals_unit():
    sample = aligned_sample(h=32, w=32)
    ranges = SpatialRanges(scale=(1.2, 1.2), rotation=(0.3, 0.3))
    out, record = spatial_augment(sample, ranges, 0)
    vec = out["normals"].vectors
    sel = np.linalg.norm(vec, axis=-1) > 1e-6
    norms = np.linalg.norm(vec[sel], axis=-1)
    assert np.abs(norms - 1.0).max() < 1e-5
    assert record["scale"] == 1.2 and record["rotation"] == 0.3


def test_spatial_crop_window():
    sample = aligned_sample(h=16, w=16)
    out, record = spatial_augment(sample, SpatialRanges(crop=(6, 10)), 123)
    oy, ox, ch, cw = record["crop"]
    assert (ch, cw) == (6, 10)
    assert out["image"].data.shape == (6, 10, 3)
    assert np.array_equal(out["image"].data,
                          sample["image"].data[oy:oy + 6, ox:ox + 10])
    with pytest.raises(ValueError):
        spatial_augment(sample, SpatialRanges(crop=(32, 4)), 0)


def test_spatial_rejects_misaligned_members():
    sample = aligned_sample()
    sample["odd"] = LinearImage.constant(3, 3, 1.0)
    with pytest.raises(ValueError):
        spatial_augment(sample, SpatialRanges(), 0)


# ---------------------------------------------------------------------------
# asymmetric pairs


def display_image(h=24, w=24, seed=6):
    rng = np.random.default_rng(seed)
    return LinearImage(rng.uniform(0.0, 1.0, (h, w, 3)).astype(np.float32))


def test_pair_teacher_is_untouched():
    img = display_image()
    teacher, student, record = asymmetric_pair(img, DegradeConfig(p=1.0), 0)
    assert teacher is img
    assert not np.array_equal(student.data, img.data)
    assert student.data.min() >= 0.0 and student.data.max() <= 1.0


def test_pair_p0_student_identical():
    img = display_image()
    teacher, student, record = asymmetric_pair(img, DegradeConfig(p=0.0), 0)
    assert np.array_equal(student.data, img.data)
    assert record["raw"] is None
    assert record["photometric"] is None and record["tint"] is None


def test_pair_deterministic():
    img = display_image()
    _, s1, r1 = asymmetric_pair(img, DegradeConfig(p=0.6), 31)
    _, s2, r2 = asymmetric_pair(img, DegradeConfig(p=0.6), 31)
    assert np.array_equal(s1.data, s2.data) and r1 == r2


def test_pair_rejects_linear_hdr_input():
    hot = LinearImage.constant(8, 8, 2.0)
    with pytest.raises(ValueError):
        asymmetric_pair(hot, DegradeConfig(), 0)
