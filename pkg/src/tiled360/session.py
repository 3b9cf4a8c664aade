"""Replay of a recorded head-motion session through the tiled client pipeline.

For every frame: head pose -> visible tiles -> stitch the received tiles
that are both visible and scheduled as available -> extract the viewport
-> compare against the viewport of the reference projection.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, GeometryError, SequenceError, Tiled360Error
from .geometry import Orientation, rotation_matrix
from .metrics import mean_tile_mse, mse, psnr
from .netpbm import pnm_suffix, write_pnm
from .projection import Filter, Projection, make_projection
from .stitcher import FRAME_PATTERN, TILE_DIR_PATTERN, TileSequence, stitch, tile_sources
from .tiling import TilingScheme
from .viewport import Fov, Viewport

log = logging.getLogger(__name__)

THREADS_ENV = "P360_THREADS"
METRICS_COLUMNS = ["frame", "n_visible", "visible_ids", "viewport_mse", "mean_tile_mse", "psnr_db"]
TILES_USED_COLUMNS = ["frame", "used_ids"]


class ConfigError(Tiled360Error, ValueError):
    pass


@dataclass(frozen=True)
class HeadTraceRow:
    frame_index: int
    yaw_deg: float
    pitch_deg: float
    roll_deg: float

    def orientation(self) -> Orientation:
        return Orientation.from_degrees(self.yaw_deg, self.pitch_deg, self.roll_deg)


def _csv_rows(path: Path, header: list[str]):
    """Yield ``(line_number, fields)`` for non-blank rows, skipping a leading header."""
    with open(path, newline="", encoding="utf-8") as fh:
        first = True
        for line_no, row in enumerate(csv.reader(fh), start=1):
            fields = [c.strip() for c in row]
            if not fields or all(not c for c in fields):
                continue
            if first and fields[0].lower() == header[0]:
                first = False
                continue
            first = False
            if len(fields) != len(header):
                raise FormatError(f"{path}:{line_no}: expected {len(header)} fields ({','.join(header)}), "
                                  f"got {len(fields)}")
            yield line_no, fields


def parse_head_trace(path: str | os.PathLike) -> list[HeadTraceRow]:
    """Read ``frame,yaw_deg,pitch_deg,roll_deg`` rows; frames must run 0, 1, 2, ..."""
    path = Path(path)
    rows: list[HeadTraceRow] = []
    for line_no, fields in _csv_rows(path, ["frame", "yaw_deg", "pitch_deg", "roll_deg"]):
        try:
            index = int(fields[0])
            angles = [float(x) for x in fields[1:]]
        except ValueError:
            raise FormatError(f"{path}:{line_no}: non-numeric field in {fields}") from None
        if not all(math.isfinite(a) for a in angles):
            raise FormatError(f"{path}:{line_no}: angles must be finite")
        expected = len(rows)
        if index < expected:
            raise FormatError(f"{path}:{line_no}: duplicate or decreasing frame index {index}")
        if index > expected:
            raise FormatError(f"{path}:{line_no}: gap in frame indices, expected {expected} got {index}")
        rows.append(HeadTraceRow(index, *angles))
    if not rows:
        raise FormatError(f"{path}: head trace is empty")
    return rows


@dataclass
class AvailabilitySchedule:
    """Per-frame tile availability; unlisted ``(frame, tile)`` pairs are available."""

    unavailable: dict[int, set[int]] = field(default_factory=dict)

    def available(self, frame: int, tile_ids) -> set[int]:
        missing = self.unavailable.get(frame, set())
        return {i for i in tile_ids if i not in missing}


def parse_availability(path: str | os.PathLike, scheme: TilingScheme) -> AvailabilitySchedule:
    """Read ``frame,tile_id,available`` rows with ``available`` in ``{0, 1}``."""
    path = Path(path)
    seen: dict[tuple[int, int], int] = {}
    for line_no, fields in _csv_rows(path, ["frame", "tile_id", "available"]):
        try:
            frame, tile_id, flag = (int(x) for x in fields)
        except ValueError:
            raise FormatError(f"{path}:{line_no}: non-integer field in {fields}") from None
        if frame < 0 or not 0 <= tile_id < scheme.n_tiles or flag not in (0, 1):
            raise FormatError(f"{path}:{line_no}: row out of range: {fields}")
        if (frame, tile_id) in seen:
            raise FormatError(f"{path}:{line_no}: frame {frame} tile {tile_id} listed twice")
        seen[(frame, tile_id)] = flag
    schedule = AvailabilitySchedule()
    for (frame, tile_id), flag in sorted(seen.items()):
        if flag == 0:
            schedule.unavailable.setdefault(frame, set()).add(tile_id)
    return schedule


def parse_size(text: str) -> tuple[int, int]:
    """``"1920x1080"`` -> ``(1920, 1080)``."""
    try:
        a, b = text.lower().split("x")
        w, h = int(a), int(b)
    except (AttributeError, ValueError):
        raise ValueError(f"expected WxH, got {text!r}") from None
    if w < 1 or h < 1:
        raise ValueError(f"sizes must be positive, got {text!r}")
    return w, h


def parse_pair(text: str) -> tuple[float, float]:
    """``"120x90"`` -> ``(120.0, 90.0)``."""
    try:
        a, b = text.lower().split("x")
        return float(a), float(b)
    except (AttributeError, ValueError):
        raise ValueError(f"expected AxB, got {text!r}") from None


def parse_projection(text: str) -> Projection:
    """``"erp:3840x2160"`` or ``"cmp:3072x2048"``."""
    try:
        kind, size = text.split(":")
    except ValueError:
        raise ValueError(f"expected KIND:WxH, got {text!r}") from None
    if kind.lower() not in ("erp", "cmp"):
        raise ValueError(f"projection kind must be erp or cmp, got {kind!r}")
    return make_projection(kind, *parse_size(size))


@dataclass(frozen=True)
class SessionConfig:
    projection: Projection
    tiling: TilingScheme
    fov: Fov
    viewport_size: tuple[int, int]
    head_trace: Path
    reference_tiles: Path
    received_tiles: Path
    availability: Path | None
    output_dir: Path
    filter: Filter = Filter.NEAREST

    def viewport(self) -> Viewport:
        return Viewport(*self.viewport_size, self.fov)


def _get(raw: dict, key: str):
    if key not in raw:
        raise ConfigError(f"config is missing {key!r}")
    return raw[key]


def load_config(path: str | os.PathLike) -> SessionConfig:
    """Load a JSON session config; relative paths are taken from the config's directory.

    Example::

        {"projection": {"kind": "erp", "width": 960, "height": 540},
         "tiling": {"cols": 12, "rows": 8},
         "fov_deg": {"x": 120, "y": 90},
         "viewport": {"width": 480, "height": 270},
         "head_trace": "trace.csv",
         "reference_tiles": "ref", "received_tiles": "recv",
         "availability": "schedule.csv",
         "output_dir": "out", "filter": "nearest"}
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    base = path.parent
    try:
        proj = _get(raw, "projection")
        if isinstance(proj, str):
            projection = parse_projection(proj)
        else:
            projection = make_projection(str(_get(proj, "kind")), int(_get(proj, "width")), int(_get(proj, "height")))
            if projection.kind not in ("erp", "cmp"):
                raise ConfigError(f"projection kind must be erp or cmp, got {projection.kind!r}")
        tiling = _get(raw, "tiling")
        scheme = TilingScheme.for_projection(int(_get(tiling, "cols")), int(_get(tiling, "rows")), projection)
        fov = _get(raw, "fov_deg")
        fov = Fov.from_degrees(float(_get(fov, "x")), float(_get(fov, "y")))
        vp = _get(raw, "viewport")
        viewport_size = (int(_get(vp, "width")), int(_get(vp, "height")))
        Viewport(*viewport_size, fov)  # a planar viewport needs each fov below 180 degrees
        filt = Filter(str(raw.get("filter", "nearest")).lower())
    except (GeometryError, ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None

    def resolve(key, required=True):
        value = raw.get(key)
        if value is None:
            if required:
                raise ConfigError(f"{path}: config is missing {key!r}")
            return None
        p = Path(value)
        return p if p.is_absolute() else base / p

    paths = {k: resolve(k) for k in ("head_trace", "reference_tiles", "received_tiles")}
    availability = resolve("availability", required=False)
    for key, p in list(paths.items()) + [("availability", availability)]:
        if p is not None and not p.exists():
            raise ConfigError(f"{path}: {key} path {p} does not exist")
    return SessionConfig(projection, scheme, fov, viewport_size, paths["head_trace"], paths["reference_tiles"],
                         paths["received_tiles"], availability, resolve("output_dir"), filt)


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError(f"{THREADS_ENV} must be >= 0, got {n}")
    return n or (os.cpu_count() or 1)


@dataclass(frozen=True)
class FrameResult:
    frame: int
    visible: tuple[int, ...]
    used: tuple[int, ...]
    viewport_mse: float
    mean_tile_mse: float
    psnr_db: float
    viewport: np.ndarray = field(repr=False, compare=False)


def _received_sequence(config: SessionConfig) -> TileSequence:
    present = [i for i in config.tiling if (config.received_tiles / (TILE_DIR_PATTERN % i)).is_dir()]
    return TileSequence(tile_sources(config.received_tiles, present), config.tiling)


def run_replay(config: SessionConfig, write: bool = True) -> list[FrameResult]:
    """Replay the session and (optionally) write viewports and CSVs to ``config.output_dir``."""
    trace = parse_head_trace(config.head_trace)
    scheme = config.tiling
    schedule = (parse_availability(config.availability, scheme) if config.availability
                else AvailabilitySchedule())
    reference = TileSequence(tile_sources(config.reference_tiles, scheme), scheme)
    received = _received_sequence(config)
    if len(reference) == 0:
        raise SequenceError(f"no reference frames under {config.reference_tiles}")
    if received.sources and len(received) != len(reference):
        raise SequenceError(f"received tiles have {len(received)} frames, reference has {len(reference)}")
    if len(trace) < len(reference):
        raise SequenceError(f"head trace has {len(trace)} rows but the sequence has {len(reference)} frames")
    if len(trace) > len(reference):
        raise SequenceError(f"head trace has {len(trace)} rows but the sequence has only {len(reference)} frames")
    received_ids = {src.tile_id for src in received.sources}
    viewport = config.viewport()
    g = config.projection

    def process(t: int) -> FrameResult:
        o = trace[t].orientation()
        visible = viewport.visible_tiles(scheme, g, o)
        used = schedule.available(t, visible)
        absent = sorted(used - received_ids)
        if absent:
            raise SequenceError(f"frame {t}: tiles {absent} are scheduled as available but were never received")
        ref_tiles = reference.read(t)
        channels = 3 if np.ndim(ref_tiles[0]) == 3 else 1
        recv_tiles = received.read(t, used)
        ref_vp = viewport.extract(stitch(ref_tiles, scheme, channels), g, o, config.filter)
        recv_vp = viewport.extract(stitch(recv_tiles, scheme, channels), g, o, config.filter)
        vmse = mse(ref_vp, recv_vp)
        tmse = mean_tile_mse(ref_tiles, recv_tiles, used) if used else math.nan
        return FrameResult(t, tuple(sorted(visible)), tuple(sorted(used)), vmse, tmse, psnr(vmse), recv_vp)

    n_threads = thread_count()
    log.info("replaying %d frames with %d thread(s)", len(reference), n_threads)
    if n_threads == 1:
        results = [process(t) for t in range(len(reference))]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(process, range(len(reference))))
    if write:
        write_outputs(config.output_dir, results)
    return results


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else repr(float(x))


def write_outputs(output_dir: Path, results: list[FrameResult]) -> None:
    output_dir = Path(output_dir)
    frames_dir = output_dir / "viewports"
    frames_dir.mkdir(parents=True, exist_ok=True)
    for r in results:
        write_pnm(frames_dir / f"{FRAME_PATTERN % r.frame}{pnm_suffix(r.viewport)}", r.viewport)
    with open(output_dir / "metrics.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_COLUMNS)
        for r in results:
            writer.writerow([r.frame, len(r.visible), ";".join(map(str, r.visible)),
                             _fmt(r.viewport_mse), _fmt(r.mean_tile_mse), _fmt(r.psnr_db)])
    with open(output_dir / "tiles_used.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TILES_USED_COLUMNS)
        for r in results:
            writer.writerow([r.frame, ";".join(map(str, r.used))])
