"""Albedo-consistency objectives over pluggable relighters and estimators.

The losses quantify whether an albedo estimator actually decouples
reflectance from light transport: relighting the same subject under two
environments must yield the same albedo (l_env), and a global photometric
transform of the input must not move the albedo either (l_amb). Evaluator
functions are injected as handles so anything from the built-in capture
superposition to an external model behind a subprocess can be scored.
"""

from __future__ import annotations

import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .degrade import photometric_transform
from .io import read_image_pfm, write_env, write_image_pfm
from .radiance import EnvironmentMap, LinearImage, Mask

LAMBDA_ENV = 25.0
LAMBDA_AMB = 500.0


@dataclass(frozen=True)
class RelighterHandle:
    """Evaluator f: (foreground image, environment) -> relit image."""

    fn: object
    deterministic: bool = True
    name: str = "relighter"

    def __call__(self, img: LinearImage, env: EnvironmentMap) -> LinearImage:
        out = self.fn(img, env)
        if out.data.shape[:2] != img.data.shape[:2]:
            raise ValueError(f"{self.name}: output dims {out.data.shape[:2]} "
                             f"differ from input {img.data.shape[:2]}")
        return out


@dataclass(frozen=True)
class AlbedoEstimatorHandle:
    """Evaluator f_A: image -> albedo image."""

    fn: object
    deterministic: bool = True
    name: str = "albedo"

    def __call__(self, img: LinearImage) -> LinearImage:
        out = self.fn(img)
        if out.data.shape[:2] != img.data.shape[:2]:
            raise ValueError(f"{self.name}: output dims {out.data.shape[:2]} "
                             f"differ from input {img.data.shape[:2]}")
        return out


@dataclass(frozen=True)
class ConsistencyWeights:
    lambda_env: float = LAMBDA_ENV
    lambda_amb: float = LAMBDA_AMB

    def __post_init__(self):
        if self.lambda_env < 0 or self.lambda_amb < 0:
            raise ValueError("weights must be non-negative")


def masked_l1(a: LinearImage, b: LinearImage, mask: Mask) -> float:
    """Mean absolute difference over masked pixels and channels."""
    if a.data.shape != b.data.shape:
        raise ValueError("image dims differ")
    if a.data.shape[:2] != mask.data.shape:
        raise ValueError("mask dims differ from images")
    w = mask.data.astype(np.float64)
    total = w.sum()
    if total <= 0:
        raise ValueError("empty mask")
    diff = np.abs(a.data.astype(np.float64) - b.data.astype(np.float64)).mean(axis=2)
    return float((w * diff).sum() / total)


def l_env(relighter: RelighterHandle, albedo_est: AlbedoEstimatorHandle,
          img: LinearImage, env1: EnvironmentMap, env2: EnvironmentMap,
          mask: Mask) -> float:
    """Albedo drift between two relightings of the same subject."""
    a1 = albedo_est(relighter(img, env1))
    a2 = albedo_est(relighter(img, env2))
    return masked_l1(a1, a2, mask)


def l_amb(albedo_est: AlbedoEstimatorHandle, img: LinearImage,
          gain: float, contrast: float, mask: Mask) -> float:
    """Albedo drift under a global brightness/contrast transform."""
    transformed = photometric_transform(img, gain, contrast, mask)
    a_t = albedo_est(transformed)
    a_0 = albedo_est(img)
    return masked_l1(a_t, a_0, mask)


def l_consist(env_value: float, amb_value: float,
              weights: ConsistencyWeights = ConsistencyWeights()) -> float:
    if env_value < 0 or amb_value < 0:
        raise ValueError("loss inputs must be non-negative")
    return weights.lambda_env * env_value + weights.lambda_amb * amb_value


# ---------------------------------------------------------------------------
# built-in handle instantiations


def olat_relighter(stack) -> RelighterHandle:
    """Superposition relighter closed over a capture stack.

    The input image argument identifies the subject in the general handle
    contract; here the stack is the subject, so the argument only fixes the
    output dimensions.
    """
    from .olat import relight

    def fn(img: LinearImage, env: EnvironmentMap) -> LinearImage:
        return relight(stack, env)

    return RelighterHandle(fn=fn, deterministic=True, name="olat-superposition")


def constant_albedo_estimator(albedo: LinearImage) -> AlbedoEstimatorHandle:
    """Oracle that returns a fixed albedo map regardless of illumination."""

    def fn(img: LinearImage) -> LinearImage:
        if img.data.shape[:2] != albedo.data.shape[:2]:
            raise ValueError("input dims differ from the oracle albedo")
        return albedo

    return AlbedoEstimatorHandle(fn=fn, deterministic=True, name="albedo-oracle")


def identity_albedo_estimator() -> AlbedoEstimatorHandle:
    """Degenerate estimator (albedo := image); useful as a sanity direction."""
    return AlbedoEstimatorHandle(fn=lambda img: img, deterministic=True, name="albedo-identity")


def shading_ratio_estimator(normals, mask: Mask, grid_height: int = 8) -> AlbedoEstimatorHandle:
    """Estimate albedo by dividing out a lighting fit on known geometry.

    A diffuse light table on a coarse equirect grid is solved per channel by
    least squares from the image and the known normals, then the image is
    divided by the reconstructed shading. Invariant to global gain (the fit
    scales with the image) and approximately invariant to the environment.
    """
    from .radiance import env_texel_directions, texel_solid_angles

    sel = mask.data.reshape(-1) > 0.0
    vec = normals.vectors.reshape(-1, 3).astype(np.float64)[sel]
    gw, gh = 2 * grid_height, grid_height
    dirs = env_texel_directions(gw, gh).reshape(-1, 3)
    dw = np.repeat(texel_solid_angles(gw, gh), gw)
    basis = np.maximum(vec @ dirs.T, 0.0) * dw  # (P, T) cosine quadrature rows
    # ridge regularization keeps the fit stable when normals cover few bins
    ata = basis.T @ basis + 1e-6 * np.eye(basis.shape[1])

    def fn(img: LinearImage) -> LinearImage:
        if img.data.shape[:2] != mask.data.shape:
            raise ValueError("input dims differ from the estimator geometry")
        px = img.data.reshape(-1, img.data.shape[2]).astype(np.float64)[sel]
        out = np.zeros((mask.data.size, img.data.shape[2]), dtype=np.float64)
        for c in range(px.shape[1]):
            light = np.linalg.solve(ata, basis.T @ px[:, c])
            shading = basis @ light
            out[sel, c] = px[:, c] / np.maximum(shading, 1e-9)
        out = out.reshape(img.data.shape[0], img.data.shape[1], -1)
        return LinearImage(np.clip(out, 0.0, 16.0).astype(np.float32))

    return AlbedoEstimatorHandle(fn=fn, deterministic=True, name="albedo-shading-ratio")


# ---------------------------------------------------------------------------
# subprocess adapters


def subprocess_relighter(cmd: list, timeout: float = 300.0) -> RelighterHandle:
    """Wrap `cmd <input.pfm> <env.hdr> <output.pfm>` as a relighter handle."""

    def fn(img: LinearImage, env: EnvironmentMap) -> LinearImage:
        with tempfile.TemporaryDirectory(prefix="relighter-") as td:
            td = Path(td)
            write_image_pfm(td / "input.pfm", img)
            write_env(td / "env.hdr", env)
            out_path = td / "output.pfm"
            proc = subprocess.run(list(cmd) + [str(td / "input.pfm"), str(td / "env.hdr"),
                                               str(out_path)],
                                  capture_output=True, timeout=timeout)
            if proc.returncode != 0:
                raise RuntimeError(f"relighter exited {proc.returncode}: "
                                   f"{proc.stderr.decode(errors='replace')[:500]}")
            return read_image_pfm(out_path)

    return RelighterHandle(fn=fn, deterministic=False, name="subprocess-relighter")


def subprocess_albedo(cmd: list, timeout: float = 300.0) -> AlbedoEstimatorHandle:
    """Wrap `cmd <input.pfm> <output.pfm>` as an albedo estimator handle."""

    def fn(img: LinearImage) -> LinearImage:
        with tempfile.TemporaryDirectory(prefix="albedo-") as td:
            td = Path(td)
            write_image_pfm(td / "input.pfm", img)
            out_path = td / "output.pfm"
            proc = subprocess.run(list(cmd) + [str(td / "input.pfm"), str(out_path)],
                                  capture_output=True, timeout=timeout)
            if proc.returncode != 0:
                raise RuntimeError(f"albedo estimator exited {proc.returncode}: "
                                   f"{proc.stderr.decode(errors='replace')[:500]}")
            return read_image_pfm(out_path)

    return AlbedoEstimatorHandle(fn=fn, deterministic=False, name="subprocess-albedo")
