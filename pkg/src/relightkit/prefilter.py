"""Pre-convolved environment maps and light-map composition.

An environment is reduced once to a diffuse irradiance table D(n) and a bank
of normalized Phong lobes S_n(r), both stored on coarse equirect grids. Per
pixel, relighting then costs two bilinear lookups per lobe instead of a full
quadrature. Tables are plain EnvironmentMaps indexed by normal (diffuse) or
by mirror reflection direction (specular).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .io import read_image_pfm, write_image_pfm
from .radiance import (
    EnvironmentMap,
    LinearImage,
    Mask,
    env_texel_directions,
    rotate_env,
    sample_env,
    texel_solid_angles,
)

DEFAULT_EXPONENTS = (1.0, 16.0, 32.0, 64.0)
DEFAULT_PREFILTER_HEIGHT = 32
VIEW_FORWARD = np.array([0.0, 0.0, 1.0])  # orthographic camera looks along -z

# Above ~8 grid rows a chunk of this many output texels keeps the cosine
# matrix under ~100 MB for source maps up to 256x128.
_CHUNK = 2048


@dataclass(frozen=True)
class PrefilteredEnv:
    """Diffuse table plus specular lobes, all functions of direction."""

    diffuse: EnvironmentMap
    specular: tuple  # ordered ((exponent, EnvironmentMap), ...)
    rotation: float = 0.0  # accumulated yaw applied to the source, radians

    def __post_init__(self):
        exps = [e for e, _ in self.specular]
        if any(b <= a for a, b in zip(exps, exps[1:])):
            raise ValueError("specular exponents must be strictly increasing")
        if any(e < 1.0 for e in exps):
            raise ValueError("specular exponents must be >= 1")
        object.__setattr__(self, "specular", tuple(self.specular))

    @property
    def exponents(self) -> tuple:
        return tuple(e for e, _ in self.specular)

    def rotated(self, yaw: float) -> "PrefilteredEnv":
        """Rotate every table by yaw; valid because prefiltering commutes
        with rotation of the source environment."""
        return PrefilteredEnv(
            diffuse=rotate_env(self.diffuse, yaw),
            specular=tuple((e, rotate_env(t, yaw)) for e, t in self.specular),
            rotation=self.rotation + yaw,
        )

    def save(self, out_dir) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_image_pfm(out_dir / "diffuse.pfm", self.diffuse.image)
        for e, table in self.specular:
            write_image_pfm(out_dir / f"specular_{int(round(e)):04d}.pfm", table.image)
        meta = {
            "exponents": [float(e) for e in self.exponents],
            "rotation": float(self.rotation),
        }
        path = out_dir / "meta.json"
        path.write_text(json.dumps(meta, indent=2))
        return path

    @classmethod
    def load(cls, in_dir) -> "PrefilteredEnv":
        in_dir = Path(in_dir)
        meta = json.loads((in_dir / "meta.json").read_text())
        diffuse = EnvironmentMap(read_image_pfm(in_dir / "diffuse.pfm"))
        specular = tuple(
            (float(e), EnvironmentMap(read_image_pfm(in_dir / f"specular_{int(round(e)):04d}.pfm")))
            for e in meta["exponents"]
        )
        return cls(diffuse=diffuse, specular=specular, rotation=float(meta.get("rotation", 0.0)))


def _source_terms(env: EnvironmentMap):
    dirs = env_texel_directions(env.width, env.height).reshape(-1, 3)
    weights = np.repeat(texel_solid_angles(env.width, env.height), env.width)
    radiance = env.data.reshape(-1, env.data.shape[2]).astype(np.float64)
    return dirs, weights, radiance


def prefilter_diffuse(env: EnvironmentMap, out_height: int = DEFAULT_PREFILTER_HEIGHT) -> EnvironmentMap:
    """Cosine-weighted irradiance table: D(n) = sum_w L(w) max(0, n.w) dw."""
    if out_height < 8:
        raise ValueError("out_height must be >= 8")
    src_dirs, w, radiance = _source_terms(env)
    lw = radiance * w[:, None]  # (T, C)
    out_dirs = env_texel_directions(2 * out_height, out_height).reshape(-1, 3)
    out = np.empty((out_dirs.shape[0], lw.shape[1]), dtype=np.float64)
    for lo in range(0, out_dirs.shape[0], _CHUNK):
        hi = min(lo + _CHUNK, out_dirs.shape[0])
        cos = np.maximum(out_dirs[lo:hi] @ src_dirs.T, 0.0)
        out[lo:hi] = cos @ lw
    out = out.reshape(out_height, 2 * out_height, -1)
    return EnvironmentMap(LinearImage(out.astype(np.float32)))


def prefilter_specular(env: EnvironmentMap, exponent: float,
                       out_height: int = DEFAULT_PREFILTER_HEIGHT) -> EnvironmentMap:
    """Normalized Phong lobe table.

    S(r) = sum L(w) max(0, r.w)^n dw / sum max(0, r.w)^n dw. The denominator
    makes a constant environment come back as that constant for every
    exponent, which pins the scale of the lobe bank.
    """
    if exponent < 1.0:
        raise ValueError("exponent must be >= 1")
    if out_height < 8:
        raise ValueError("out_height must be >= 8")
    src_dirs, w, radiance = _source_terms(env)
    lw = radiance * w[:, None]
    out_dirs = env_texel_directions(2 * out_height, out_height).reshape(-1, 3)
    out = np.empty((out_dirs.shape[0], lw.shape[1]), dtype=np.float64)
    for lo in range(0, out_dirs.shape[0], _CHUNK):
        hi = min(lo + _CHUNK, out_dirs.shape[0])
        lobe = np.maximum(out_dirs[lo:hi] @ src_dirs.T, 0.0) ** exponent
        num = lobe @ lw
        den = lobe @ w
        out[lo:hi] = num / np.maximum(den, 1e-30)[:, None]
    out = out.reshape(out_height, 2 * out_height, -1)
    return EnvironmentMap(LinearImage(out.astype(np.float32)))


def prefilter_env(env: EnvironmentMap, exponents=DEFAULT_EXPONENTS,
                  out_height: int = DEFAULT_PREFILTER_HEIGHT) -> PrefilteredEnv:
    specular = tuple((float(e), prefilter_specular(env, float(e), out_height))
                     for e in exponents)
    return PrefilteredEnv(diffuse=prefilter_diffuse(env, out_height), specular=specular)


def _masked_lookup(table: EnvironmentMap, directions: np.ndarray, mask: Mask) -> LinearImage:
    """Bilinear table lookup per pixel; zero wherever the mask is zero."""
    h, w = mask.data.shape
    sel = mask.data.reshape(-1) > 0.0
    flat = directions.reshape(-1, 3)
    out = np.zeros((h * w, table.data.shape[2]), dtype=np.float64)
    if np.any(sel):
        out[sel] = sample_env(table, flat[sel])
    return LinearImage(np.maximum(out.reshape(h, w, -1), 0.0).astype(np.float32))


def light_map_diffuse(normals, pf: PrefilteredEnv, mask: Mask) -> LinearImage:
    """D(n(p)) per pixel: the irradiance a Lambertian surface point receives."""
    vec = normals.vectors
    if vec.shape[:2] != mask.data.shape:
        raise ValueError("normal map and mask dimensions differ")
    return _masked_lookup(pf.diffuse, vec.astype(np.float64), mask)


def reflect(directions: np.ndarray, view: np.ndarray) -> np.ndarray:
    """Mirror the view vector about per-pixel normals: r = 2(n.v)n - v."""
    ndv = directions @ view
    return 2.0 * ndv[..., None] * directions - view


def light_map_specular(normals, pf: PrefilteredEnv, index: int,
                       view=VIEW_FORWARD, mask: Mask = None) -> LinearImage:
    """S_n(r(p)) per pixel for the lobe at the given index."""
    if not 0 <= index < len(pf.specular):
        raise IndexError(f"specular index {index} outside bank of {len(pf.specular)}")
    view = np.asarray(view, dtype=np.float64)
    if abs(np.linalg.norm(view) - 1.0) > 1e-6:
        raise ValueError("view vector must be unit length")
    vec = normals.vectors.astype(np.float64)
    if mask is None:
        mask = Mask.full(vec.shape[1], vec.shape[0])
    if vec.shape[:2] != mask.data.shape:
        raise ValueError("normal map and mask dimensions differ")
    refl = reflect(vec, view)
    # zero normals (outside the subject) reflect to -v; the mask zeroes them anyway
    norms = np.linalg.norm(refl, axis=-1, keepdims=True)
    refl = refl / np.maximum(norms, 1e-12)
    return _masked_lookup(pf.specular[index][1], refl, mask)


@dataclass(frozen=True)
class WeightMaps:
    """Per-pixel fusion weights plus a signed additive residual."""

    diffuse: np.ndarray  # (H, W) in [0, 1]
    specular: tuple  # of (H, W) arrays in [0, 1], one per lobe
    residual: np.ndarray  # (H, W, 3) signed

    def __post_init__(self):
        d = np.asarray(self.diffuse, dtype=np.float32)
        r = np.asarray(self.residual, dtype=np.float32)
        spec = tuple(np.asarray(s, dtype=np.float32) for s in self.specular)
        if d.ndim != 2:
            raise ValueError("diffuse weight must be (H, W)")
        if d.min(initial=0.0) < 0.0 or d.max(initial=0.0) > 1.0:
            raise ValueError("diffuse weight must lie in [0, 1]")
        for s in spec:
            if s.shape != d.shape or s.min(initial=0.0) < 0.0 or s.max(initial=0.0) > 1.0:
                raise ValueError("specular weights must be (H, W) in [0, 1]")
        if r.shape != d.shape + (3,):
            raise ValueError("residual must be (H, W, 3)")
        object.__setattr__(self, "diffuse", d)
        object.__setattr__(self, "specular", spec)
        object.__setattr__(self, "residual", r)

    @classmethod
    def lambertian(cls, height: int, width: int, n_lobes: int) -> "WeightMaps":
        """Diffuse weight 1, no specular, no residual."""
        return cls(
            diffuse=np.ones((height, width), dtype=np.float32),
            specular=tuple(np.zeros((height, width), dtype=np.float32) for _ in range(n_lobes)),
            residual=np.zeros((height, width, 3), dtype=np.float32),
        )


def compose_render(albedo: LinearImage, light_diffuse: LinearImage, specular_maps,
                   weights: WeightMaps, mask: Mask) -> LinearImage:
    """I = w_d * albedo * L_d + sum_k w_k * S_k + R, clamped at 0, masked."""
    shape = mask.data.shape
    if albedo.data.shape[:2] != shape or light_diffuse.data.shape[:2] != shape:
        raise ValueError("albedo / light map dimensions differ from mask")
    if len(specular_maps) != len(weights.specular):
        raise ValueError("one weight map per specular light map required")
    if weights.diffuse.shape != shape:
        raise ValueError("weight map dimensions differ from mask")
    out = weights.diffuse[:, :, None].astype(np.float64) \
        * albedo.data.astype(np.float64) * light_diffuse.data.astype(np.float64)
    for wk, sk in zip(weights.specular, specular_maps):
        if sk.data.shape[:2] != shape:
            raise ValueError("specular map dimensions differ from mask")
        out = out + wk[:, :, None].astype(np.float64) * sk.data.astype(np.float64)
    out = out + weights.residual.astype(np.float64)
    out = np.maximum(out, 0.0) * mask.data[:, :, None]
    return LinearImage(out.astype(np.float32))
