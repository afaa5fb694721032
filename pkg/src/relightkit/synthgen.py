"""Analytic toy scenes: spheres with known normals, albedo, and Phong shading.

Everything here is exact by construction (no shadows, no interreflection,
orthographic camera looking along -z), so renders double as ground truth for
the relighting and intrinsics code. Camera space: x right, y up, z toward
the viewer; sphere centers are given in pixel coordinates (x right, y down).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .radiance import (
    EnvironmentMap,
    LinearImage,
    Mask,
    direction_to_uv,
    env_texel_directions,
    texel_solid_angles,
    uv_to_direction,
)


@dataclass(frozen=True)
class Sphere:
    center_x: float
    center_y: float
    depth: float  # distance from camera; smaller wins overlaps
    radius: float  # pixels
    albedo: tuple = (0.5, 0.5, 0.5)  # linear RGB in [0,1]
    specular: float = 0.0
    phong_exponent: float = 32.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")
        if self.specular < 0 or self.phong_exponent < 1:
            raise ValueError("specular >= 0 and phong_exponent >= 1 required")


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    spheres: tuple

    def __post_init__(self):
        if len(self.spheres) < 1:
            raise ValueError("scene needs at least one sphere")
        object.__setattr__(self, "spheres", tuple(self.spheres))

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        spheres = tuple(
            Sphere(
                center_x=s["center"][0],
                center_y=s["center"][1],
                depth=s.get("depth", 0.0),
                radius=s["radius"],
                albedo=tuple(s.get("albedo", (0.5, 0.5, 0.5))),
                specular=s.get("specular", 0.0),
                phong_exponent=s.get("phong_exponent", 32.0),
            )
            for s in d["spheres"]
        )
        return cls(width=d["width"], height=d["height"], spheres=spheres)


@dataclass(frozen=True)
class NormalMap:
    """Unit camera-space normals, (H, W, 3); zero vectors where undefined."""

    vectors: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.vectors, dtype=np.float32)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"normals must be (H, W, 3), got {arr.shape}")
        object.__setattr__(self, "vectors", arr)

    @property
    def height(self) -> int:
        return self.vectors.shape[0]

    @property
    def width(self) -> int:
        return self.vectors.shape[1]

    def to_image(self) -> LinearImage:
        """Remap [-1,1] components to a displayable/storable [0,1] image."""
        return LinearImage((self.vectors + 1.0) * 0.5)

    @classmethod
    def from_image(cls, img: LinearImage) -> "NormalMap":
        return cls(img.data * 2.0 - 1.0)


def _pixel_grid(width: int, height: int, offset=(0.5, 0.5)):
    xs = np.arange(width, dtype=np.float64) + offset[0]
    ys = np.arange(height, dtype=np.float64) + offset[1]
    return np.meshgrid(xs, ys)


def _winner_fields(scene: SceneSpec, xx: np.ndarray, yy: np.ndarray):
    """Per-sample winning sphere index (-1 outside) and its surface height."""
    winner = np.full(xx.shape, -1, dtype=np.int32)
    best_z = np.full(xx.shape, -np.inf)
    for i, s in enumerate(scene.spheres):
        rho2 = (xx - s.center_x) ** 2 + (yy - s.center_y) ** 2
        inside = rho2 <= s.radius**2
        bulge = np.sqrt(np.maximum(s.radius**2 - rho2, 0.0))
        z = -s.depth + bulge
        take = inside & (z > best_z)
        winner[take] = i
        best_z[take] = z[take]
    return winner, best_z


def render_intrinsics(scene: SceneSpec) -> tuple[NormalMap, LinearImage, Mask]:
    """Exact normals, flat per-sphere albedo, and a 2x2-supersampled mask."""
    w, h = scene.width, scene.height
    xx, yy = _pixel_grid(w, h)
    winner, _ = _winner_fields(scene, xx, yy)

    normals = np.zeros((h, w, 3), dtype=np.float64)
    albedo = np.zeros((h, w, 3), dtype=np.float64)
    coverage = np.zeros((h, w), dtype=np.float64)

    # coverage from 4 subpixel taps; the mask anti-aliases the silhouette
    for ox, oy in ((0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)):
        sx, sy = _pixel_grid(w, h, offset=(ox, oy))
        sub_winner, _ = _winner_fields(scene, sx, sy)
        coverage += (sub_winner >= 0) * 0.25

    for i, s in enumerate(scene.spheres):
        on_center = winner == i
        # rim pixels: covered by the supersampled mask but center outside every
        # sphere; pull them onto this sphere's silhouette so normals stay unit
        rim = (winner < 0) & (coverage > 0.0)
        if np.any(rim):
            rho2 = (xx - s.center_x) ** 2 + (yy - s.center_y) ** 2
            near = rim & (rho2 <= (s.radius + 1.0) ** 2)
        else:
            near = rim
        sel = on_center | near
        if not np.any(sel):
            continue
        dx = (xx[sel] - s.center_x) / s.radius
        dy = (yy[sel] - s.center_y) / s.radius
        rho = np.sqrt(dx**2 + dy**2)
        scale = np.where(rho > 0.9999, 0.9999 / np.maximum(rho, 1e-12), 1.0)
        dx, dy = dx * scale, dy * scale
        nz = np.sqrt(np.maximum(1.0 - dx**2 - dy**2, 0.0))
        normals[sel, 0] = dx
        normals[sel, 1] = -dy  # image y runs down, camera y runs up
        normals[sel, 2] = nz
        albedo[sel] = np.asarray(s.albedo, dtype=np.float64)

    return (
        NormalMap(normals.astype(np.float32)),
        LinearImage(albedo.astype(np.float32)),
        Mask(np.clip(coverage, 0.0, 1.0).astype(np.float32)),
    )


def _shade(normals: np.ndarray, albedo: np.ndarray, spec_coeff: np.ndarray,
           spec_exp: np.ndarray, light_dir: np.ndarray) -> np.ndarray:
    """Lambert + Phong response of every pixel to one directional light."""
    ndl = np.maximum(normals @ light_dir, 0.0)
    out = albedo * ndl[:, :, None]
    if np.any(spec_coeff > 0):
        # mirror reflection of the +z orthographic view direction
        nz = normals[:, :, 2]
        refl = 2.0 * nz[:, :, None] * normals
        refl[:, :, 2] -= 1.0
        rdl = np.maximum(refl @ light_dir, 0.0)
        out = out + (spec_coeff * rdl**spec_exp)[:, :, None]
    return out


def _per_pixel_material(scene: SceneSpec):
    normals, albedo, mask = render_intrinsics(scene)
    w, h = scene.width, scene.height
    xx, yy = _pixel_grid(w, h)
    winner, _ = _winner_fields(scene, xx, yy)
    spec = np.zeros((h, w), dtype=np.float64)
    sexp = np.ones((h, w), dtype=np.float64)
    for i, s in enumerate(scene.spheres):
        spec[winner == i] = s.specular
        sexp[winner == i] = s.phong_exponent
    return normals, albedo, mask, spec, sexp


def render_olat(scene: SceneSpec, directions) -> "OlatStack":
    """One frame per light direction; no inter-sphere shadowing."""
    from .olat import OlatStack  # local import to avoid a cycle

    directions = np.asarray(directions, dtype=np.float64)
    normals, albedo, mask, spec, sexp = _per_pixel_material(scene)
    nvec = normals.vectors.astype(np.float64)
    adata = albedo.data.astype(np.float64)
    frames = []
    for d in directions:
        frame = _shade(nvec, adata, spec, sexp, d) * mask.data[:, :, None]
        frames.append(np.maximum(frame, 0.0).astype(np.float32))
    return OlatStack(directions=directions, frames=frames, mask=mask, subject="synthetic")


def render_env_reference(scene: SceneSpec, env: EnvironmentMap, chunk: int = 4096) -> LinearImage:
    """Brute-force shading: quadrature of the scene's BRDF over every env texel."""
    normals, albedo, mask, spec, sexp = _per_pixel_material(scene)
    h, w = scene.height, scene.width

    dirs = env_texel_directions(env.width, env.height).reshape(-1, 3)  # (T, 3)
    weights = np.repeat(texel_solid_angles(env.width, env.height), env.width)  # (T,)
    radiance = env.data.reshape(-1, env.data.shape[2]).astype(np.float64) * weights[:, None]

    sel = mask.data.reshape(-1) > 0.0
    nvec = normals.vectors.reshape(-1, 3).astype(np.float64)[sel]
    adata = albedo.data.reshape(-1, 3).astype(np.float64)[sel]
    sc = spec.reshape(-1)[sel]
    se = sexp.reshape(-1)[sel]

    refl = 2.0 * nvec[:, 2:3] * nvec
    refl[:, 2] -= 1.0

    out_sel = np.zeros((nvec.shape[0], 3), dtype=np.float64)
    for lo in range(0, nvec.shape[0], chunk):
        hi = min(lo + chunk, nvec.shape[0])
        ndl = np.maximum(nvec[lo:hi] @ dirs.T, 0.0)  # (chunk, T)
        out_sel[lo:hi] = adata[lo:hi] * (ndl @ radiance)
        if np.any(sc[lo:hi] > 0):
            rdl = np.maximum(refl[lo:hi] @ dirs.T, 0.0)
            out_sel[lo:hi] += sc[lo:hi, None] * (rdl ** se[lo:hi, None]) @ radiance

    out = np.zeros((h * w, 3), dtype=np.float64)
    out[sel] = out_sel
    out = out.reshape(h, w, 3) * mask.data[:, :, None]
    return LinearImage(np.maximum(out, 0.0).astype(np.float32))


def fibonacci_sphere(n: int) -> np.ndarray:
    """n near-uniform unit directions (golden-angle spiral), shape (n, 3)."""
    i = np.arange(n, dtype=np.float64)
    z = 1.0 - (2.0 * i + 1.0) / n
    phi = i * np.pi * (3.0 - np.sqrt(5.0))
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def make_env(kind: str, height: int = 32, **params) -> EnvironmentMap:
    """Analytic environments: 'constant', 'sun_sky', or 'hot_texel'."""
    width = 2 * height
    if kind == "constant":
        value = params.get("value", 1.0)
        return EnvironmentMap.constant(height, value)

    if kind == "hot_texel":
        value = np.broadcast_to(np.asarray(params.get("value", 1.0), dtype=np.float32), (3,))
        row = params.get("row", height // 2)
        col = params.get("col", 0)
        if "direction" in params:
            uv = direction_to_uv(params["direction"])
            col = min(int(uv[0] * width), width - 1)
            row = min(int(uv[1] * height), height - 1)
        data = np.zeros((height, width, 3), dtype=np.float32)
        data[row, col] = value
        return EnvironmentMap(LinearImage(data))

    if kind == "sun_sky":
        sun_dir = np.asarray(params.get("sun_direction", (0.0, 0.0, 1.0)), dtype=np.float64)
        sun_dir = sun_dir / np.linalg.norm(sun_dir)
        sun_value = np.broadcast_to(np.asarray(params.get("sun_value", 20.0), dtype=np.float64), (3,))
        sun_radius = float(params.get("sun_radius", 0.25))  # radians
        softness = float(params.get("softness", 0.5))  # edge falloff fraction of radius
        sky_zenith = np.broadcast_to(np.asarray(params.get("sky_zenith", 0.8), dtype=np.float64), (3,))
        sky_horizon = np.broadcast_to(np.asarray(params.get("sky_horizon", 0.2), dtype=np.float64), (3,))
        dirs = env_texel_directions(width, height)
        t = np.clip(dirs[:, :, 2], 0.0, 1.0)[:, :, None]  # gradient by elevation
        sky = sky_horizon + (sky_zenith - sky_horizon) * t
        ang = np.arccos(np.clip(dirs @ sun_dir, -1.0, 1.0))
        edge0, edge1 = sun_radius * (1.0 - softness), sun_radius * (1.0 + softness)
        s = np.clip((edge1 - ang) / max(edge1 - edge0, 1e-9), 0.0, 1.0)
        disk = (s * s * (3.0 - 2.0 * s))[:, :, None]
        data = sky + disk * sun_value
        return EnvironmentMap(LinearImage(data.astype(np.float32)))

    raise ValueError(f"unknown env kind {kind!r}")
