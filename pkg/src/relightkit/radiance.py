"""Linear-radiance image containers and equirectangular environment-map geometry.

All pixel data is scene-referred linear radiance stored as float32 ndarrays of
shape (H, W, C). Environment maps are lat-long panoramas with row 0 at the
zenith: u in [0,1) maps to azimuth phi in [0,2pi), v in [0,1] maps to polar
angle theta in [0,pi]. Directions are unit 3-vectors with +z at the zenith.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Pure power-law display curve. Configurable here, fixed everywhere else.
DEFAULT_GAMMA = 2.2

_UNIT_TOL = 1e-6


def _as_image_array(data, channels_ok=(1, 3)) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in channels_ok:
        raise ValueError(f"expected (H, W, C) with C in {channels_ok}, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class LinearImage:
    """Row-major linear-radiance raster. Treated as immutable after construction.

    data: float32 array of shape (height, width, channels), channels 1 or 3,
    every value finite and non-negative.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = _as_image_array(self.data)
        if not np.all(np.isfinite(arr)):
            raise ValueError("radiance values must be finite")
        if arr.min(initial=0.0) < 0.0:
            raise ValueError("radiance values must be non-negative")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @classmethod
    def constant(cls, width: int, height: int, value=0.0, channels: int = 3) -> "LinearImage":
        value = np.broadcast_to(np.asarray(value, dtype=np.float32), (channels,))
        return cls(np.tile(value, (height, width, 1)))

    def scaled(self, factor: float) -> "LinearImage":
        return LinearImage(self.data * np.float32(factor))


@dataclass(frozen=True)
class Mask:
    """Single-channel coverage in [0,1], dimensions matching the image it masks."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim == 3 and arr.shape[2] == 1:
            arr = arr[:, :, 0]
        if arr.ndim != 2:
            raise ValueError(f"mask must be (H, W), got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min(initial=0.0) < 0.0 or arr.max(initial=0.0) > 1.0:
            raise ValueError("mask coverage must be finite and within [0, 1]")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @classmethod
    def full(cls, width: int, height: int) -> "Mask":
        return cls(np.ones((height, width), dtype=np.float32))


@dataclass(frozen=True)
class EnvironmentMap:
    """Equirectangular HDR panorama, width = 2 * height, row 0 = zenith."""

    image: LinearImage

    def __post_init__(self):
        if self.image.width != 2 * self.image.height:
            raise ValueError(
                f"equirectangular map needs width = 2*height, got {self.image.width}x{self.image.height}"
            )

    @property
    def height(self) -> int:
        return self.image.height

    @property
    def width(self) -> int:
        return self.image.width

    @property
    def data(self) -> np.ndarray:
        return self.image.data

    @classmethod
    def constant(cls, height: int, value=1.0, channels: int = 3) -> "EnvironmentMap":
        return cls(LinearImage.constant(2 * height, height, value, channels))


def gamma_encode(img: LinearImage, gamma: float = DEFAULT_GAMMA) -> LinearImage:
    """Clamp to [0,1] and apply the 1/gamma power law. Monotone, endpoints fixed."""
    out = np.clip(img.data, 0.0, 1.0) ** np.float32(1.0 / gamma)
    return LinearImage(out)


def gamma_decode(img: LinearImage, gamma: float = DEFAULT_GAMMA, tol: float = 1e-6) -> LinearImage:
    """Inverse of gamma_encode. Rejects inputs outside [0,1] beyond tol."""
    data = img.data
    if data.min(initial=0.0) < -tol or data.max(initial=0.0) > 1.0 + tol:
        raise ValueError("display values must lie in [0, 1]")
    out = np.clip(data, 0.0, 1.0) ** np.float32(gamma)
    return LinearImage(out)


def uv_to_direction(uv) -> np.ndarray:
    """Map lat-long texture coordinates to unit directions.

    Accepts (..., 2) arrays; u wraps the azimuth, v runs zenith (v=0, +z) to
    nadir (v=1, -z).
    """
    uv = np.asarray(uv, dtype=np.float64)
    phi = uv[..., 0] * (2.0 * np.pi)
    theta = uv[..., 1] * np.pi
    sin_t = np.sin(theta)
    return np.stack([np.cos(phi) * sin_t, np.sin(phi) * sin_t, np.cos(theta)], axis=-1)


def direction_to_uv(direction) -> np.ndarray:
    """Inverse of uv_to_direction for unit vectors (shape (..., 3)).

    Rejects zero-length input; directions are expected normalized within 1e-6.
    At the poles the azimuth is degenerate and u is reported as 0.
    """
    d = np.asarray(direction, dtype=np.float64)
    norm = np.linalg.norm(d, axis=-1)
    if np.any(norm < 1e-12):
        raise ValueError("zero-length direction")
    d = d / norm[..., None]
    phi = np.arctan2(d[..., 1], d[..., 0])
    phi = np.where(phi < 0.0, phi + 2.0 * np.pi, phi)
    theta = np.arccos(np.clip(d[..., 2], -1.0, 1.0))
    u = np.mod(phi / (2.0 * np.pi), 1.0)
    return np.stack([u, theta / np.pi], axis=-1)


def _bilinear_uv(data: np.ndarray, uv: np.ndarray) -> np.ndarray:
    """Bilinear lookup on an equirect grid: azimuth wraps, polar rows clamp."""
    h, w = data.shape[0], data.shape[1]
    x = uv[..., 0] * w - 0.5
    y = np.clip(uv[..., 1] * h - 0.5, 0.0, float(h - 1))
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = (x - x0)[..., None]
    fy = (y - y0)[..., None]
    x0w = np.mod(x0, w)
    x1w = np.mod(x0 + 1, w)
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    # a + (b - a) * t rather than a*(1-t) + b*t: constant maps come back bit-exact
    top = data[y0c, x0w]
    top = top + (data[y0c, x1w] - top) * fx
    bot = data[y1c, x0w]
    bot = bot + (data[y1c, x1w] - bot) * fx
    return top + (bot - top) * fy


def sample_env(env: EnvironmentMap, direction) -> np.ndarray:
    """Bilinear radiance lookup for one or many unit directions.

    Returns an array shaped like the input directions with the trailing axis
    replaced by the map's channel count.
    """
    uv = direction_to_uv(direction)
    out = _bilinear_uv(env.data.astype(np.float64), uv)
    return out


def env_texel_directions(width: int, height: int) -> np.ndarray:
    """Unit directions of every texel center, shape (height, width, 3)."""
    u = (np.arange(width, dtype=np.float64) + 0.5) / width
    v = (np.arange(height, dtype=np.float64) + 0.5) / height
    uu, vv = np.meshgrid(u, v)
    return uv_to_direction(np.stack([uu, vv], axis=-1))


def texel_solid_angle(env: EnvironmentMap, row: int) -> float:
    """Steradians covered by one texel of the given row.

    Exact band integral: (2pi/W) * (cos(theta_top) - cos(theta_bottom)),
    so the total over the map is 4pi up to float rounding.
    """
    h, w = env.height, env.width
    if not 0 <= row < h:
        raise IndexError(f"row {row} outside [0, {h})")
    theta0 = row * np.pi / h
    theta1 = (row + 1) * np.pi / h
    return float((2.0 * np.pi / w) * (np.cos(theta0) - np.cos(theta1)))


def texel_solid_angles(width: int, height: int) -> np.ndarray:
    """Per-row texel solid angles for a (height, width) equirect grid, shape (height,)."""
    rows = np.arange(height, dtype=np.float64)
    theta0 = rows * np.pi / height
    theta1 = (rows + 1.0) * np.pi / height
    return (2.0 * np.pi / width) * (np.cos(theta0) - np.cos(theta1))


def yaw_matrix(yaw: float) -> np.ndarray:
    """Rotation about the zenith axis carrying azimuth phi to phi + yaw."""
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotate_env(env: EnvironmentMap, rotation) -> EnvironmentMap:
    """Rotate the environment; content at direction w moves to R @ w.

    `rotation` is either a yaw angle in radians (rotation about the zenith,
    resolved as an exact fractional column roll) or a 3x3 rotation matrix
    (full 3-DoF, resampled bilinearly).
    """
    rot = np.asarray(rotation)
    if rot.ndim == 0:
        return _rotate_env_yaw(env, float(rotation))
    if rot.shape != (3, 3):
        raise ValueError("rotation must be a yaw scalar or a 3x3 matrix")
    out_dirs = env_texel_directions(env.width, env.height)
    src_dirs = out_dirs @ rot  # rows: R^-1 @ d  (R orthonormal)
    vals = sample_env(env, src_dirs)
    return EnvironmentMap(LinearImage(vals.astype(np.float32)))


def _rotate_env_yaw(env: EnvironmentMap, yaw: float) -> EnvironmentMap:
    w = env.width
    shift = (yaw / (2.0 * np.pi)) * w
    base = int(np.floor(shift))
    frac = shift - base
    data = env.data
    rolled = np.roll(data, base, axis=1)
    if frac == 0.0:
        return EnvironmentMap(LinearImage(rolled.copy()))
    prev = np.roll(data, base + 1, axis=1)
    out = rolled + (prev - rolled) * np.float32(frac)
    return EnvironmentMap(LinearImage(out))
