"""PPM (P3/P6, maxval 255) reading and writing, plus pixel feature extraction.

PPM keeps image I/O dependency-free and bit-exact: the writer always emits
binary P6 with maxval 255, and reading back a written image reproduces the
pixel array exactly.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .data import Dataset

__all__ = ["ImageFeatureSpec", "PpmError", "read_ppm", "write_ppm", "image_features"]


class PpmError(ValueError):
    """Malformed PPM input."""


@dataclass(frozen=True)
class ImageFeatureSpec:
    """Pixel feature layout: (r, g, b, w*x, w*y).

    Colors are scaled to [0, 1]; x and y are column/row normalized to [0, 1]
    (0 when the axis has a single pixel) then multiplied by spatial_weight.
    """

    spatial_weight: float = 0.2

    def __post_init__(self):
        if self.spatial_weight < 0:
            raise ValueError("spatial_weight must be >= 0")


def _header_tokens(buf: bytes):
    """Yield whitespace-separated header tokens, skipping # comments."""
    i = 0
    while i < len(buf):
        ch = buf[i : i + 1]
        if ch.isspace():
            i += 1
        elif ch == b"#":
            while i < len(buf) and buf[i : i + 1] != b"\n":
                i += 1
        else:
            j = i
            while j < len(buf) and not buf[j : j + 1].isspace() and buf[j : j + 1] != b"#":
                j += 1
            yield i, buf[i:j]
            i = j


def read_ppm(path) -> np.ndarray:
    """Read a P3 or P6 PPM with maxval 255 into a (height, width, 3) uint8 array."""
    with open(path, "rb") as fh:
        buf = fh.read()
    tokens = _header_tokens(buf)

    def next_token(what):
        try:
            return next(tokens)
        except StopIteration:
            raise PpmError(f"truncated PPM header: missing {what}") from None

    _, magic = next_token("magic number")
    if magic not in (b"P3", b"P6"):
        raise PpmError(f"unsupported PPM magic {magic!r} (need P3 or P6)")
    fields = []
    for what in ("width", "height", "maxval"):
        pos, tok = next_token(what)
        try:
            fields.append(int(tok))
        except ValueError:
            raise PpmError(f"non-numeric PPM {what}: {tok!r}") from None
        last_pos, last_tok = pos, tok
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise PpmError(f"bad PPM dimensions {width}x{height}")
    if maxval != 255:
        raise PpmError(f"only maxval 255 is supported, got {maxval}")

    count = width * height * 3
    if magic == b"P6":
        start = last_pos + len(last_tok) + 1  # single whitespace after maxval
        raw = buf[start : start + count]
        if len(raw) < count:
            raise PpmError(f"truncated P6 payload: {len(raw)} of {count} bytes")
        pixels = np.frombuffer(raw, dtype=np.uint8, count=count)
    else:
        values = []
        for _, tok in tokens:
            try:
                v = int(tok)
            except ValueError:
                raise PpmError(f"non-numeric P3 sample: {tok!r}") from None
            if not 0 <= v <= 255:
                raise PpmError(f"P3 sample out of range: {v}")
            values.append(v)
            if len(values) == count:
                break
        if len(values) < count:
            raise PpmError(f"truncated P3 payload: {len(values)} of {count} samples")
        pixels = np.asarray(values, dtype=np.uint8)
    return pixels.reshape(height, width, 3)


def write_ppm(path, pixels: np.ndarray) -> None:
    """Write a (height, width, 3) uint8 array as binary P6, atomically."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise ValueError(f"pixels must be (height, width, 3), got {pixels.shape}")
    pixels = pixels.astype(np.uint8)
    height, width = pixels.shape[:2]
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ppm-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header + pixels.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def image_features(pixels: np.ndarray, spec: ImageFeatureSpec) -> Dataset:
    """One 5-d feature row per pixel, row-major."""
    height, width = pixels.shape[:2]
    rgb = pixels.reshape(-1, 3).astype(np.float64) / 255.0
    cols = np.tile(np.arange(width, dtype=np.float64), height)
    rows = np.repeat(np.arange(height, dtype=np.float64), width)
    x = cols / (width - 1) if width > 1 else np.zeros_like(cols)
    y = rows / (height - 1) if height > 1 else np.zeros_like(rows)
    lam = spec.spatial_weight
    return Dataset(np.column_stack([rgb, lam * x, lam * y]))
