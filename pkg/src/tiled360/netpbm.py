"""Binary netpbm frames: P5 (grayscale) and P6 (RGB) with maxval 255."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .errors import FormatError


def _tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    out = []
    pos = 0
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("truncated netpbm header")
        out.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    if pos >= n or not data[pos:pos + 1].isspace():
        raise FormatError("missing whitespace after netpbm header")
    return out, pos + 1


def decode_pnm(data: bytes) -> np.ndarray:
    tokens, offset = _tokens(data, 4)
    magic = tokens[0]
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"unsupported netpbm type {magic!r}; only P5 and P6 are accepted")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError("non-numeric netpbm header field") from None
    if maxval != 255:
        raise FormatError(f"maxval must be 255, got {maxval}")
    if width < 1 or height < 1:
        raise FormatError(f"invalid netpbm size {width}x{height}")
    channels = 3 if magic == b"P6" else 1
    size = width * height * channels
    raster = data[offset:offset + size]
    if len(raster) != size:
        raise FormatError(f"netpbm raster truncated: expected {size} bytes, got {len(raster)}")
    arr = np.frombuffer(raster, dtype=np.uint8)
    shape = (height, width, 3) if channels == 3 else (height, width)
    return arr.reshape(shape).copy()


def encode_pnm(frame: np.ndarray) -> bytes:
    frame = np.asarray(frame)
    if frame.dtype != np.uint8:
        raise FormatError(f"netpbm frames must be uint8, got {frame.dtype}")
    if frame.ndim == 2:
        magic = b"P5"
    elif frame.ndim == 3 and frame.shape[2] == 3:
        magic = b"P6"
    else:
        raise FormatError(f"cannot encode frame of shape {frame.shape}")
    height, width = frame.shape[:2]
    header = b"%s\n%d %d\n255\n" % (magic, width, height)
    return header + np.ascontiguousarray(frame).tobytes()


def read_pnm(path: str | os.PathLike) -> np.ndarray:
    path = Path(path)
    try:
        return decode_pnm(path.read_bytes())
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_pnm(path: str | os.PathLike, frame: np.ndarray) -> None:
    Path(path).write_bytes(encode_pnm(frame))


def pnm_suffix(frame_or_channels) -> str:
    channels = frame_or_channels if isinstance(frame_or_channels, int) else (
        3 if np.ndim(frame_or_channels) == 3 else 1)
    return ".ppm" if channels == 3 else ".pgm"
