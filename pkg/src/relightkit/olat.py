"""One-light-at-a-time capture stacks: storage, relighting, normal fitting.

A stack holds N frames of the same subject, each lit by a single distant
light of unit radiant intensity from a known direction. Relighting under an
environment is then a weighted sum of frames; surface normals and albedo
fall out of a per-pixel least squares fit against the light directions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .io import read_image_pfm, write_image_pfm
from .radiance import EnvironmentMap, LinearImage, Mask, rotate_env, sample_env

SHADOW_FRACTION = 0.01  # lights dimmer than this fraction of pixel max are unusable
MIN_USABLE_LIGHTS = 3


class LazyFrames:
    """Sequence of (H, W, 3) arrays loaded from PFM files on demand."""

    def __init__(self, paths):
        self._paths = [Path(p) for p in paths]

    def __len__(self):
        return len(self._paths)

    def __getitem__(self, i):
        return read_image_pfm(self._paths[i]).data


@dataclass
class OlatStack:
    directions: np.ndarray  # (N, 3) unit vectors toward each light
    frames: object  # sequence of (H, W, 3) float32 arrays
    mask: Mask
    subject: str = "unnamed"

    def __post_init__(self):
        self.directions = np.asarray(self.directions, dtype=np.float64)
        if self.directions.ndim != 2 or self.directions.shape[1] != 3:
            raise ValueError("directions must be (N, 3)")
        if len(self.frames) != self.directions.shape[0]:
            raise ValueError("one frame per light direction required")
        norms = np.linalg.norm(self.directions, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-4):
            raise ValueError("light directions must be unit length")
        self._stacked = None

    def __len__(self):
        return self.directions.shape[0]

    def stacked(self) -> np.ndarray:
        """Channel-major (C, N, H*W) float32 view of all frames, cached.

        This layout keeps each channel's light-by-pixel matrix contiguous so
        relighting reduces to three BLAS matrix-vector products.
        """
        if self._stacked is None:
            arr = np.stack([np.asarray(self.frames[i], dtype=np.float32)
                            for i in range(len(self))], axis=0)
            n = arr.shape[0]
            self._stacked = np.ascontiguousarray(arr.reshape(n, -1, arr.shape[3]).transpose(2, 0, 1))
        return self._stacked

    @property
    def height(self) -> int:
        return self.mask.data.shape[0]

    @property
    def width(self) -> int:
        return self.mask.data.shape[1]

    def materialize(self) -> "OlatStack":
        """Force all frames into memory (list of arrays)."""
        if isinstance(self.frames, list):
            return self
        return OlatStack(
            directions=self.directions,
            frames=[self.frames[i] for i in range(len(self.frames))],
            mask=self.mask,
            subject=self.subject,
        )

    def save(self, out_dir) -> Path:
        """Write frames and mask as PFM plus a manifest.json; returns manifest path."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        lights = []
        for i in range(len(self)):
            name = f"olat_{i:04d}.pfm"
            write_image_pfm(out_dir / name, LinearImage(self.frames[i]))
            lights.append({"dir": [float(c) for c in self.directions[i]], "file": name})
        write_image_pfm(out_dir / "mask.pfm", LinearImage(self.mask.data[:, :, None]))
        manifest = {
            "subject": self.subject,
            "width": self.width,
            "height": self.height,
            "lights": lights,
            "mask_file": "mask.pfm",
        }
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2))
        return path

    @classmethod
    def load(cls, manifest_path, lazy: bool = False) -> "OlatStack":
        manifest_path = Path(manifest_path)
        if manifest_path.is_dir():
            manifest_path = manifest_path / "manifest.json"
        meta = json.loads(manifest_path.read_text())
        base = manifest_path.parent
        dirs = np.asarray([l["dir"] for l in meta["lights"]], dtype=np.float64)
        paths = [base / l["file"] for l in meta["lights"]]
        frames = LazyFrames(paths) if lazy else [read_image_pfm(p).data for p in paths]
        mask_img = read_image_pfm(base / meta["mask_file"]).data
        mask = Mask(mask_img[:, :, 0])
        return cls(directions=dirs, frames=frames, mask=mask,
                   subject=meta.get("subject", "unnamed"))


def relight_weights(env: EnvironmentMap, directions: np.ndarray) -> np.ndarray:
    """Per-light RGB weights: sampled env radiance times the 4*pi/N share.

    Each light stands in for an equal share of the sphere, so the quadrature
    weight is the full solid angle divided by the light count.
    """
    directions = np.asarray(directions, dtype=np.float64)
    n = directions.shape[0]
    w = np.stack([sample_env(env, d) for d in directions], axis=0)
    return w * (4.0 * np.pi / n)


def relight(stack: OlatStack, env: EnvironmentMap, yaw: float = 0.0) -> LinearImage:
    """Weighted superposition of the stack under an (optionally yawed) env."""
    if yaw != 0.0:
        env = rotate_env(env, yaw)
    w = relight_weights(env, stack.directions).astype(np.float32)  # (N, C)
    flat = stack.stacked()  # (C, N, H*W)
    c = flat.shape[0]
    h, wd = stack.height, stack.width
    out = np.empty((c, h * wd), dtype=np.float32)
    for ch in range(c):  # one BLAS gemv per channel
        np.dot(w[:, ch], flat[ch], out=out[ch])
    out = out.T.reshape(h, wd, c)
    return LinearImage(np.maximum(out, 0.0))


def fit_photometric(stack: OlatStack, shadow_fraction: float = SHADOW_FRACTION):
    """Per-pixel weighted least squares for normals, projection for albedo.

    Grayscale intensities I_i at each pixel are modeled as b . d_i with
    b = albedo * normal; lights below shadow_fraction of the pixel's max
    are dropped, and pixels with fewer than MIN_USABLE_LIGHTS usable lights
    (or a degenerate light spread) are flagged invalid.

    Returns (NormalMap, albedo LinearImage, valid Mask).
    """
    from .synthgen import NormalMap  # local import to avoid a cycle

    stack = stack.materialize()
    h, w = stack.height, stack.width
    fg = stack.mask.data.reshape(-1) > 0.0
    p = int(fg.sum())

    arr = np.stack(stack.frames, axis=0).astype(np.float64)  # (N, H, W, 3)
    n = arr.shape[0]
    rgb = arr.reshape(n, h * w, 3)[:, fg, :]  # (N, P, 3)
    gray = rgb.mean(axis=2)  # (N, P)
    d = stack.directions  # (N, 3)

    peak = gray.max(axis=0)  # (P,)
    usable = gray > (shadow_fraction * peak)[None, :]
    count = usable.sum(axis=0)

    wgt = usable.astype(np.float64)
    # A[p] = sum_i w_ip d_i d_i^T, rhs[p] = sum_i w_ip I_ip d_i
    a = np.einsum("np,ni,nj->pij", wgt, d, d)
    rhs = np.einsum("np,np,ni->pi", wgt, gray, d)

    eig = np.linalg.eigvalsh(a)  # ascending
    well_posed = (count >= MIN_USABLE_LIGHTS) & (eig[:, 0] > 1e-6 * np.maximum(eig[:, 2], 1e-12))

    b = np.zeros((p, 3), dtype=np.float64)
    if np.any(well_posed):
        b[well_posed] = np.linalg.solve(a[well_posed], rhs[well_posed, :, None])[:, :, 0]
    blen = np.linalg.norm(b, axis=1)
    valid = well_posed & (blen > 1e-12) & np.isfinite(blen)

    normal = np.zeros((p, 3), dtype=np.float64)
    normal[valid] = b[valid] / blen[valid, None]

    # albedo: project each channel onto the fitted shading s_i = max(0, n . d_i)
    shading = np.maximum(d @ normal.T, 0.0) * wgt  # (N, P)
    denom = (shading**2).sum(axis=0)
    albedo = np.zeros((p, 3), dtype=np.float64)
    ok = valid & (denom > 1e-12)
    for ch in range(3):
        num = (rgb[:, :, ch] * shading).sum(axis=0)
        albedo[ok, ch] = num[ok] / denom[ok]

    normals_full = np.zeros((h * w, 3), dtype=np.float32)
    albedo_full = np.zeros((h * w, 3), dtype=np.float32)
    valid_full = np.zeros(h * w, dtype=np.float32)
    normals_full[fg] = normal.astype(np.float32)
    albedo_full[fg] = np.maximum(albedo, 0.0).astype(np.float32)
    valid_full[fg] = valid.astype(np.float32)

    return (
        NormalMap(normals_full.reshape(h, w, 3)),
        LinearImage(albedo_full.reshape(h, w, 3)),
        Mask(valid_full.reshape(h, w)),
    )
