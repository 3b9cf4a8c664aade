from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from tiled360.netpbm import write_pnm
from tiled360.stitcher import FRAME_PATTERN, TILE_DIR_PATTERN
from tiled360.tiling import TilingScheme, split


def erp_pixel_directions(width: int, height: int) -> np.ndarray:
    """Unit vectors of every ERP pixel center, (H*W, 3), from first principles."""
    vs, us = np.mgrid[0:height, 0:width]
    az = (us.ravel() + 0.5) / width * 2 * math.pi - math.pi
    el = math.pi / 2 - (vs.ravel() + 0.5) / height * math.pi
    return np.stack([np.cos(el) * np.sin(az), np.sin(el), np.cos(el) * np.cos(az)], axis=-1)


def in_view_oracle(dirs: np.ndarray, r: np.ndarray, fov_x: float, fov_y: float) -> np.ndarray:
    """Brute-force membership: undo the head rotation and compare half-angles."""
    local = dirs @ np.asarray(r)  # row-vector form of R^T . d
    x, y, z = local[:, 0], local[:, 1], local[:, 2]
    hx, hy = fov_x / 2, fov_y / 2
    return (np.abs(x) * math.cos(hx) <= z * math.sin(hx)) & (np.abs(y) * math.cos(hy) <= z * math.sin(hy))


def visible_tiles_oracle(scheme: TilingScheme, r: np.ndarray, fov_x: float, fov_y: float) -> set[int]:
    """Tiles holding at least one ERP pixel center inside the field of view."""
    dirs = erp_pixel_directions(scheme.frame_width, scheme.frame_height)
    inside = in_view_oracle(dirs, r, fov_x, fov_y)
    vs, us = np.mgrid[0:scheme.frame_height, 0:scheme.frame_width]
    # tile c spans floor(c*W/M) .. floor((c+1)*W/M) - 1, i.e. c = floor(u*M/W)
    ids = (vs.ravel() * scheme.rows // scheme.frame_height) * scheme.cols + us.ravel() * scheme.cols // scheme.frame_width
    return set(np.unique(ids[inside]).tolist())


def random_frame(rng: np.random.Generator, width: int, height: int, channels: int = 1) -> np.ndarray:
    shape = (height, width) if channels == 1 else (height, width, 3)
    return rng.integers(0, 256, size=shape, dtype=np.uint8)


def smooth_erp(width: int, height: int, channels: int = 1) -> np.ndarray:
    """Smooth periodic test content so that small pose changes give small changes."""
    vs, us = np.mgrid[0:height, 0:width]
    az = (us + 0.5) / width * 2 * math.pi
    el = (vs + 0.5) / height * math.pi
    planes = [127.5 + 100 * np.sin(k * az) * np.sin(el) + 20 * np.cos(3 * el) for k in (1, 2, 3)[:channels]]
    img = np.stack(planes, axis=-1) if channels == 3 else planes[0]
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def write_tile_sequence(root: Path, frames: list[np.ndarray], scheme: TilingScheme) -> None:
    """Split each projection frame and write ``root/tile_NNN/frame_NNNNNN.p?m``."""
    for t, frame in enumerate(frames):
        for tile_id, tile in split(frame, scheme).items():
            d = root / (TILE_DIR_PATTERN % tile_id)
            d.mkdir(parents=True, exist_ok=True)
            suffix = ".ppm" if tile.ndim == 3 else ".pgm"
            write_pnm(d / f"{FRAME_PATTERN % t}{suffix}", tile)


def write_trace(path: Path, rows: list[tuple[float, float, float]]) -> None:
    lines = ["frame,yaw_deg,pitch_deg,roll_deg"]
    lines += [f"{i},{y!r},{p!r},{r!r}" for i, (y, p, r) in enumerate(rows)]
    path.write_text("\n".join(lines) + "\n")


def write_schedule(path: Path, entries: list[tuple[int, int, int]]) -> None:
    lines = ["frame,tile_id,available"] + [f"{f},{t},{a}" for f, t, a in entries]
    path.write_text("\n".join(lines) + "\n")


def make_session(root: Path, *, width: int, height: int, cols: int, rows: int, n_frames: int,
                 fov=(120, 90), viewport=(480, 270), channels: int = 1, trace=None,
                 schedule=None, received=None) -> Path:
    """Write a complete replay session under ``root`` and return the config path.

    ``received`` maps the reference frames to received frames (default:
    identical); ``schedule`` is a list of ``(frame, tile, available)`` rows.
    """
    scheme = TilingScheme(cols, rows, width, height)
    base = smooth_erp(width, height, channels)
    frames = [np.roll(base, 7 * t, axis=1) for t in range(n_frames)]
    write_tile_sequence(root / "ref", frames, scheme)
    recv_frames = frames if received is None else [received(f, t) for t, f in enumerate(frames)]
    write_tile_sequence(root / "recv", recv_frames, scheme)
    if trace is None:
        trace = [(0.0, 0.0, 0.0)] * n_frames
    write_trace(root / "trace.csv", trace)
    config = {
        "projection": {"kind": "erp", "width": width, "height": height},
        "tiling": {"cols": cols, "rows": rows},
        "fov_deg": {"x": fov[0], "y": fov[1]},
        "viewport": {"width": viewport[0], "height": viewport[1]},
        "head_trace": "trace.csv",
        "reference_tiles": "ref",
        "received_tiles": "recv",
        "availability": None,
        "output_dir": "out",
        "filter": "nearest",
    }
    if schedule is not None:
        write_schedule(root / "schedule.csv", schedule)
        config["availability"] = "schedule.csv"
    path = root / "session.json"
    path.write_text(json.dumps(config, indent=2))
    return path


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
