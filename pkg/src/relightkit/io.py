"""File formats: Radiance RGBE (.hdr), PFM float rasters, and 8-bit PNG.

Conventions fixed by this package:
  - .hdr files hold equirectangular panoramas, row 0 = zenith (see radiance).
  - PFM is little-endian (scale -1.0) and, per the format, stores rows
    bottom-to-top; arrays in memory are top-to-bottom.
  - PNG export clamps to [0,1], applies the shared gamma encode, and rounds
    to 8 bits.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

from .radiance import DEFAULT_GAMMA, EnvironmentMap, LinearImage, gamma_encode


# ---------------------------------------------------------------------------
# Radiance RGBE
# ---------------------------------------------------------------------------

def _float_to_rgbe(rgb: np.ndarray) -> np.ndarray:
    """Encode (H, W, 3) float radiance into shared-exponent RGBE bytes."""
    maxc = rgb.max(axis=2)
    rgbe = np.zeros(rgb.shape[:2] + (4,), dtype=np.uint8)
    nonzero = maxc >= 1e-32
    mantissa, exponent = np.frexp(maxc[nonzero])
    scale = mantissa * 256.0 / maxc[nonzero]
    rgbe[nonzero, 0:3] = np.clip(rgb[nonzero] * scale[:, None], 0, 255).astype(np.uint8)
    rgbe[nonzero, 3] = (exponent + 128).astype(np.uint8)
    return rgbe


def _rgbe_to_float(rgbe: np.ndarray) -> np.ndarray:
    exponent = rgbe[..., 3].astype(np.int32)
    scale = np.where(exponent == 0, 0.0, np.ldexp(1.0, exponent - 136))  # (v+0.5)/256 * 2^(e-128)
    rgb = (rgbe[..., 0:3].astype(np.float64) + 0.5) * scale[..., None]
    rgb[exponent == 0] = 0.0
    return rgb.astype(np.float32)


def write_hdr(path, img: LinearImage) -> None:
    """Write a 3-channel LinearImage as a flat (non-RLE) Radiance .hdr file."""
    if img.channels != 3:
        raise ValueError("RGBE requires 3 channels")
    header = (
        "#?RADIANCE\n"
        "FORMAT=32-bit_rle_rgbe\n"
        "\n"
        f"-Y {img.height} +X {img.width}\n"
    )
    rgbe = _float_to_rgbe(img.data.astype(np.float64))
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(rgbe.tobytes())


def _decode_rle_scanline(buf: bytes, pos: int, width: int) -> tuple[np.ndarray, int]:
    line = np.empty((width, 4), dtype=np.uint8)
    for ch in range(4):
        x = 0
        while x < width:
            count = buf[pos]
            pos += 1
            if count > 128:  # run
                line[x : x + count - 128, ch] = buf[pos]
                pos += 1
                x += count - 128
            else:  # literal
                line[x : x + count, ch] = np.frombuffer(buf, np.uint8, count, pos)
                pos += count
                x += count
    return line, pos


def read_hdr(path) -> LinearImage:
    """Read a Radiance .hdr file (flat or new-style RLE scanlines)."""
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"#?"):
        raise ValueError(f"{path}: not a Radiance file")
    pos = data.index(b"\n\n") + 2
    eol = data.index(b"\n", pos)
    dims = data[pos:eol].decode("ascii").split()
    if len(dims) != 4 or dims[0] != "-Y" or dims[2] != "+X":
        raise ValueError(f"{path}: unsupported orientation {' '.join(dims)}")
    height, width = int(dims[1]), int(dims[3])
    pos = eol + 1

    rows = []
    for _ in range(height):
        head = data[pos : pos + 4]
        if len(head) < 4:
            raise ValueError(f"{path}: truncated scanline data")
        if head[0] == 2 and head[1] == 2 and (head[2] << 8 | head[3]) == width:
            line, pos = _decode_rle_scanline(data, pos + 4, width)
        else:
            line = np.frombuffer(data, np.uint8, width * 4, pos).reshape(width, 4)
            pos += width * 4
        rows.append(line)
    rgbe = np.stack(rows, axis=0)
    return LinearImage(_rgbe_to_float(rgbe))


def read_env(path) -> EnvironmentMap:
    return EnvironmentMap(read_hdr(path))


def write_env(path, env: EnvironmentMap) -> None:
    write_hdr(path, env.image)


# ---------------------------------------------------------------------------
# PFM
# ---------------------------------------------------------------------------

def write_pfm(path, data: np.ndarray) -> None:
    """Write a float array (H, W) or (H, W, 1|3) as little-endian PFM."""
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim == 2:
        magic = b"Pf"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = b"PF"
    else:
        raise ValueError(f"PFM supports 1 or 3 channels, got shape {arr.shape}")
    h, w = arr.shape[0], arr.shape[1]
    with open(path, "wb") as f:
        f.write(magic + b"\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(np.flipud(arr).astype("<f4").tobytes())


def read_pfm(path) -> np.ndarray:
    """Read a PFM file into a float32 array, (H, W) or (H, W, 3), top-down rows."""
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic == b"PF":
            channels = 3
        elif magic == b"Pf":
            channels = 1
        else:
            raise ValueError(f"{path}: not a PFM file")
        w, h = (int(t) for t in f.readline().split())
        scale = float(f.readline())
        count = w * h * channels
        raw = np.frombuffer(f.read(count * 4), dtype="<f4" if scale < 0 else ">f4", count=count)
    shape = (h, w, 3) if channels == 3 else (h, w)
    return np.flipud(raw.reshape(shape)).astype(np.float32)


def write_image_pfm(path, img: LinearImage) -> None:
    write_pfm(path, img.data)


def read_image_pfm(path) -> LinearImage:
    return LinearImage(read_pfm(path))


# ---------------------------------------------------------------------------
# PNG display export
# ---------------------------------------------------------------------------

def write_png(path, img: LinearImage, gamma: float = DEFAULT_GAMMA, already_display: bool = False) -> None:
    """Write an 8-bit PNG; linear input is gamma-encoded unless already display-domain."""
    display = img if already_display else gamma_encode(img, gamma)
    arr8 = np.clip(np.rint(display.data * 255.0), 0, 255).astype(np.uint8)
    if arr8.shape[2] == 1:
        arr8 = arr8[:, :, 0]
    Image.fromarray(arr8).save(os.fspath(path))


def png_bytes(img: LinearImage, gamma: float = DEFAULT_GAMMA, already_display: bool = False) -> bytes:
    """Encode to PNG in memory (used by the HTTP service)."""
    import io as _io

    display = img if already_display else gamma_encode(img, gamma)
    arr8 = np.clip(np.rint(display.data * 255.0), 0, 255).astype(np.uint8)
    if arr8.shape[2] == 1:
        arr8 = arr8[:, :, 0]
    buf = _io.BytesIO()
    Image.fromarray(arr8).save(buf, format="PNG")
    return buf.getvalue()


def read_png(path) -> LinearImage:
    """Load an 8-bit PNG as display-domain values in [0, 1] (no gamma decode)."""
    with Image.open(os.fspath(path)) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    return LinearImage(arr)
