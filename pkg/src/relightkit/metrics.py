"""Foreground-masked quality metrics and a wall-clock latency harness."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, asdict

import numpy as np
from scipy import ndimage

from .radiance import LinearImage, Mask

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class MetricReport:
    mse: float
    psnr: float  # dB; +inf when images match exactly
    ssim: float
    pixel_count: int

    def to_json(self) -> str:
        d = asdict(self)
        if math.isinf(d["psnr"]):
            d["psnr"] = "inf"
        return json.dumps(d, indent=2)


def _check_pair(a: LinearImage, b: LinearImage, mask: Mask):
    if a.data.shape != b.data.shape:
        raise ValueError(f"image dims differ: {a.data.shape} vs {b.data.shape}")
    if a.data.shape[:2] != mask.data.shape:
        raise ValueError("mask dims differ from images")
    if not np.any(mask.data > 0):
        raise ValueError("empty mask")


def mse_masked(a: LinearImage, b: LinearImage, mask: Mask) -> float:
    """Channel-averaged squared error, weighted by mask coverage."""
    _check_pair(a, b, mask)
    w = mask.data.astype(np.float64)
    diff = (a.data.astype(np.float64) - b.data.astype(np.float64)) ** 2
    return float((w * diff.mean(axis=2)).sum() / w.sum())


def psnr(mse: float, peak: float = 1.0) -> float:
    if mse < 0:
        raise ValueError("mse must be non-negative")
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _gaussian_window() -> np.ndarray:
    half = SSIM_WINDOW // 2
    ax = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(ax * ax) / (2.0 * SSIM_SIGMA * SSIM_SIGMA))
    k = np.outer(g, g)
    return k / k.sum()


def ssim_masked(a: LinearImage, b: LinearImage, mask: Mask, peak: float = 1.0) -> float:
    """Windowed SSIM averaged over masked window centers.

    Both inputs are multiplied by the mask first, which makes the score
    independent of whatever lies outside the foreground; windows straddling
    the boundary therefore compare masked content on both sides.
    """
    _check_pair(a, b, mask)
    if a.data.max(initial=0.0) > peak + 1e-6 or b.data.max(initial=0.0) > peak + 1e-6:
        raise ValueError("ssim expects display-domain images within peak")
    win = _gaussian_window()
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    m = mask.data.astype(np.float64)[:, :, None]
    x = a.data.astype(np.float64) * m
    y = b.data.astype(np.float64) * m

    def filt(img):
        out = np.empty_like(img)
        for c in range(img.shape[2]):
            out[:, :, c] = ndimage.convolve(img[:, :, c], win, mode="reflect")
        return out

    mu_x = filt(x)
    mu_y = filt(y)
    var_x = filt(x * x) - mu_x * mu_x
    var_y = filt(y * y) - mu_y * mu_y
    cov = filt(x * y) - mu_x * mu_y
    ssim_map = ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)) \
        / ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2))
    sel = mask.data > 0
    return float(ssim_map[sel].mean())


def report(a: LinearImage, b: LinearImage, mask: Mask, peak: float = 1.0) -> MetricReport:
    m = mse_masked(a, b, mask)
    return MetricReport(
        mse=m,
        psnr=psnr(m, peak),
        ssim=ssim_masked(a, b, mask, peak),
        pixel_count=int(np.count_nonzero(mask.data > 0)),
    )


# ---------------------------------------------------------------------------
# latency harness


@dataclass(frozen=True)
class BenchReport:
    op: str
    resolution: int
    iterations: int
    warmup: int
    mean_ms: float
    median_ms: float
    p95_ms: float
    throughput_fps: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def to_table(self) -> str:
        head = f"{'op':<24}{'res':>6}{'iters':>7}{'mean ms':>10}{'median':>10}{'p95':>10}{'fps':>12}"
        row = (f"{self.op:<24}{self.resolution:>6}{self.iterations:>7}"
               f"{self.mean_ms:>10.3f}{self.median_ms:>10.3f}{self.p95_ms:>10.3f}"
               f"{self.throughput_fps:>12.2f}")
        return head + "\n" + row


def bench(thunk, op: str = "op", resolution: int = 0, iterations: int = 200,
          warmup: int = 20) -> BenchReport:
    """Time `thunk` with warmup discard; monotonic clock, milliseconds."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if warmup < 0:
        raise ValueError("warmup must be >= 0")
    times = []
    for i in range(warmup + iterations):
        t0 = time.perf_counter()
        thunk()
        dt = (time.perf_counter() - t0) * 1000.0
        if i >= warmup:
            times.append(dt)
    lat = np.asarray(times)
    mean = float(lat.mean())
    return BenchReport(
        op=op,
        resolution=resolution,
        iterations=iterations,
        warmup=warmup,
        mean_ms=mean,
        median_ms=float(np.median(lat)),
        p95_ms=float(np.percentile(lat, 95)),
        throughput_fps=1000.0 / mean if mean > 0 else math.inf,
    )
