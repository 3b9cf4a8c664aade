"""Command-line interface.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
from pathlib import Path

import numpy as np

from .errors import Tiled360Error
from .geometry import Orientation
from .metrics import mean_tile_mse, mse, psnr
from .netpbm import pnm_suffix, read_pnm, write_pnm
from .projection import Filter, convert_projection, make_projection
from .session import load_config, parse_pair, parse_projection, parse_size, run_replay
from .stitcher import stitch
from .tiling import TilingScheme, retile, split
from .viewport import Fov, Viewport

TILE_FILE_RE = re.compile(r"^tile_(\d+)\.(pgm|ppm)$")


def _argtype(fn, name):
    def wrapped(text):
        try:
            return fn(text)
        except (ValueError, Tiled360Error) as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    wrapped.__name__ = name
    return wrapped


SIZE = _argtype(parse_size, "size")
GRID = _argtype(parse_size, "grid")
PAIR = _argtype(parse_pair, "pair")
PROJ = _argtype(parse_projection, "projection")


def _read_tile_dir(directory: Path) -> dict[int, np.ndarray]:
    if not directory.is_dir():
        raise FileNotFoundError(f"tile directory {directory} does not exist")
    tiles = {}
    for path in sorted(directory.iterdir()):
        m = TILE_FILE_RE.match(path.name)
        if m:
            tile_id = int(m.group(1))
            if tile_id in tiles:
                raise Tiled360Error(f"tile {tile_id} appears twice in {directory}")
            tiles[tile_id] = read_pnm(path)
    return tiles


def _write_tile_dir(directory: Path, tiles: dict[int, np.ndarray]) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for tile_id, frame in sorted(tiles.items()):
        write_pnm(directory / f"tile_{tile_id:03d}{pnm_suffix(frame)}", frame)


def _orientation(args) -> Orientation:
    return Orientation.from_degrees(args.yaw, args.pitch, args.roll)


def _default_size(src_kind: str, dst_kind: str, width: int, height: int) -> tuple[int, int]:
    if src_kind == dst_kind:
        return width, height
    face = height // 2
    if dst_kind == "cmp":
        return 3 * face, 2 * face
    return 4 * face, 2 * face


def cmd_convert(args) -> int:
    src = read_pnm(args.input)
    height, width = src.shape[:2]
    src_g = make_projection(args.src_kind, width, height)
    size = args.size or _default_size(args.src_kind, args.dst_kind, width, height)
    dst_g = make_projection(args.dst_kind, *size)
    write_pnm(args.output, convert_projection(src, src_g, dst_g, args.filter))
    return 0


def cmd_retile(args) -> int:
    tiles = _read_tile_dir(args.input_dir)
    if 0 not in tiles:
        raise Tiled360Error(f"no tile_000 in {args.input_dir}")
    th, tw = tiles[0].shape[:2]
    cols, rows = args.src_grid
    src = TilingScheme(cols, rows, cols * tw, rows * th)
    dst = TilingScheme(*args.dst_grid, src.frame_width, src.frame_height)
    _write_tile_dir(args.output_dir, retile(tiles, src, dst))
    return 0


def cmd_select_tiles(args) -> int:
    g = args.proj
    scheme = TilingScheme.for_projection(*args.tiles, g)
    viewport = Viewport(*args.viewport, Fov.from_degrees(*args.fov))
    for tile_id in sorted(viewport.visible_tiles(scheme, g, _orientation(args), args.stride)):
        print(tile_id)
    return 0


def cmd_extract_viewport(args) -> int:
    frame = read_pnm(args.input)
    height, width = frame.shape[:2]
    g = make_projection(args.proj, width, height)
    viewport = Viewport(*args.viewport, Fov.from_degrees(*args.fov))
    write_pnm(args.output, viewport.extract(frame, g, _orientation(args), args.filter))
    return 0


def cmd_stitch(args) -> int:
    tiles = _read_tile_dir(args.input_dir) if args.input_dir else {}
    scheme = TilingScheme(*args.tiles, *args.size)
    channels = args.channels
    if channels is None:
        channels = 3 if any(np.ndim(t) == 3 for t in tiles.values()) else 1
    write_pnm(args.output, stitch(tiles, scheme, channels))
    return 0


def cmd_metrics(args) -> int:
    ref = read_pnm(args.reference)
    test = read_pnm(args.test)
    value = mse(ref, test)
    print(f"mse={value!r}")
    print(f"psnr_db={psnr(value)!r}")
    if args.tiles:
        scheme = TilingScheme(*args.tiles, ref.shape[1], ref.shape[0])
        print(f"mean_tile_mse={mean_tile_mse(split(ref, scheme), split(test, scheme), scheme)!r}")
    return 0


def cmd_replay(args) -> int:
    config = load_config(args.config)
    results = run_replay(config)
    print(f"replayed {len(results)} frames into {config.output_dir}")
    return 0


def _add_orientation(p):
    p.add_argument("--yaw", type=float, default=0.0, help="degrees, positive turns right")
    p.add_argument("--pitch", type=float, default=0.0, help="degrees, positive looks up")
    p.add_argument("--roll", type=float, default=0.0, help="degrees, positive tilts right")


def _add_filter(p):
    p.add_argument("--filter", type=Filter, choices=list(Filter), default=Filter.NEAREST,
                   metavar="{nearest,bilinear}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tiled360", description="Tiled 360-degree video geometry tools.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert a frame between ERP and cubemap")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--from", dest="src_kind", choices=["erp", "cmp"], default="erp")
    p.add_argument("--to", dest="dst_kind", choices=["erp", "cmp"], required=True)
    p.add_argument("--size", type=SIZE, help="output WxH (default keeps the face size)")
    _add_filter(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("retile", help="re-cut a tile set into another grid")
    p.add_argument("--input-dir", type=Path, required=True)
    p.add_argument("--output-dir", type=Path, required=True)
    p.add_argument("--from", dest="src_grid", type=GRID, required=True, help="COLSxROWS")
    p.add_argument("--to", dest="dst_grid", type=GRID, required=True, help="COLSxROWS")
    p.set_defaults(func=cmd_retile)

    p = sub.add_parser("select-tiles", help="print the tiles visible for a head pose")
    p.add_argument("--proj", type=PROJ, required=True, help="KIND:WxH, e.g. erp:3840x2160")
    p.add_argument("--tiles", type=GRID, required=True, help="COLSxROWS")
    p.add_argument("--fov", type=PAIR, required=True, help="degrees, HxV")
    p.add_argument("--viewport", type=SIZE, default=(1920, 1080))
    p.add_argument("--stride", type=int, default=None)
    _add_orientation(p)
    p.set_defaults(func=cmd_select_tiles)

    p = sub.add_parser("extract-viewport", help="render the viewport from a projection frame")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--proj", choices=["erp", "cmp"], default="erp")
    p.add_argument("--fov", type=PAIR, required=True, help="degrees, HxV")
    p.add_argument("--viewport", type=SIZE, default=(1920, 1080))
    _add_orientation(p)
    _add_filter(p)
    p.set_defaults(func=cmd_extract_viewport)

    p = sub.add_parser("stitch", help="assemble tile_NNN files into a frame, zero-filling gaps")
    p.add_argument("--input-dir", type=Path)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--tiles", type=GRID, required=True, help="COLSxROWS")
    p.add_argument("--size", type=SIZE, required=True, help="frame WxH")
    p.add_argument("--channels", type=int, choices=[1, 3])
    p.set_defaults(func=cmd_stitch)

    p = sub.add_parser("metrics", help="MSE and PSNR between two frames")
    p.add_argument("--reference", type=Path, required=True)
    p.add_argument("--test", type=Path, required=True)
    p.add_argument("--tiles", type=GRID, help="also report the mean per-tile MSE")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("replay", help="replay a head-motion session from a JSON config")
    p.add_argument("--config", type=Path, required=True)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (Tiled360Error, OSError, ValueError, KeyError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"tiled360: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
