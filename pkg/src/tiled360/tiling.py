"""M x N tile grids over a projection frame.

Column ``c`` spans pixels ``floor(c*W/M)`` up to ``floor((c+1)*W/M)``, and rows
are cut the same way, so when M does not divide W the tiles differ by at most
one pixel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from .errors import DimensionError, GeometryError
from .projection import Projection, check_frame

Rect = tuple[int, int, int, int]


@dataclass(frozen=True)
class TilingScheme:
    """``cols x rows`` tiles over a ``frame_width x frame_height`` frame.

    Tile ids run row-major from the top-left tile.
    """

    cols: int
    rows: int
    frame_width: int
    frame_height: int

    def __post_init__(self):
        if self.cols < 1 or self.rows < 1:
            raise GeometryError(f"tiling needs at least one column and row, got {self.cols}x{self.rows}")
        if self.cols > self.frame_width or self.rows > self.frame_height:
            raise GeometryError(
                f"{self.cols}x{self.rows} tiles do not fit a {self.frame_width}x{self.frame_height} frame"
            )

    @classmethod
    def for_projection(cls, cols: int, rows: int, g: Projection) -> "TilingScheme":
        return cls(cols, rows, g.width, g.height)

    @property
    def col_edges(self) -> np.ndarray:
        return np.arange(self.cols + 1) * self.frame_width // self.cols

    @property
    def row_edges(self) -> np.ndarray:
        return np.arange(self.rows + 1) * self.frame_height // self.rows

    @property
    def is_uniform(self) -> bool:
        return self.frame_width % self.cols == 0 and self.frame_height % self.rows == 0

    @property
    def tile_width(self) -> int:
        """Smallest tile width (all tiles share it on a uniform grid)."""
        return self.frame_width // self.cols

    @property
    def tile_height(self) -> int:
        """Smallest tile height."""
        return self.frame_height // self.rows

    @property
    def n_tiles(self) -> int:
        return self.cols * self.rows

    def __iter__(self) -> Iterator[int]:
        return iter(range(self.n_tiles))

    def tile_rect(self, tile_id: int) -> Rect:
        return tile_rect(self, tile_id)

    def default_stride(self) -> int:
        return max(1, min(self.tile_width, self.tile_height) // 16)

    def tile_index_map(self) -> np.ndarray:
        """``(H, W)`` array giving the tile id of every pixel."""
        return self.tile_at(np.arange(self.frame_width)[None, :], np.arange(self.frame_height)[:, None])

    def tile_at(self, col, row):
        """Tile id containing integer pixel ``(col, row)``; works on arrays."""
        c = np.searchsorted(self.col_edges, col, side="right") - 1
        r = np.searchsorted(self.row_edges, row, side="right") - 1
        return r * self.cols + c

    def __str__(self):
        return f"{self.cols}x{self.rows}@{self.frame_width}x{self.frame_height}"


@dataclass(frozen=True)
class Tile:
    id: int
    rect: Rect


def _check_id(s: TilingScheme, tile_id: int) -> int:
    if not 0 <= int(tile_id) < s.n_tiles:
        raise GeometryError(f"tile id {tile_id} out of range for {s.cols}x{s.rows} tiling")
    return int(tile_id)


def tile_rect(s: TilingScheme, tile_id: int) -> Rect:
    """Pixel rectangle ``(x, y, width, height)`` of a tile."""
    tile_id = _check_id(s, tile_id)
    col, row = tile_id % s.cols, tile_id // s.cols
    x0, x1 = (col * s.frame_width // s.cols, (col + 1) * s.frame_width // s.cols)
    y0, y1 = (row * s.frame_height // s.rows, (row + 1) * s.frame_height // s.rows)
    return x0, y0, x1 - x0, y1 - y0


def tiles(s: TilingScheme) -> list[Tile]:
    return [Tile(i, tile_rect(s, i)) for i in s]


def perimeter_pixels(rect: Rect, stride: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Integer pixel centers on a rectangle's outline, every ``stride`` pixels.

    The four corners are always included and no pixel appears twice.
    """
    if stride < 1:
        raise GeometryError(f"stride must be >= 1, got {stride}")
    x, y, w, h = rect
    xs = np.unique(np.append(np.arange(0, w, stride), w - 1))
    ys = np.unique(np.append(np.arange(0, h, stride), h - 1))
    top = [(x + i, y) for i in xs]
    bottom = [(x + i, y + h - 1) for i in xs]
    left = [(x, y + j) for j in ys]
    right = [(x + w - 1, y + j) for j in ys]
    # dict keeps first-seen order and drops the shared corners
    pts = list(dict.fromkeys(top + right + bottom + left))
    arr = np.array(pts, dtype=np.int64)
    return arr[:, 0], arr[:, 1]


def _check_geometry(s: TilingScheme, g: Projection) -> None:
    if (g.width, g.height) != (s.frame_width, s.frame_height):
        raise GeometryError(f"projection {g!r} does not match tiling {s}")


def tile_border_points(s: TilingScheme, tile_id: int, g: Projection, stride: int | None = None) -> np.ndarray:
    """Sphere directions of a tile's outline pixels, shape ``(N, 3)``."""
    _check_geometry(s, g)
    stride = s.default_stride() if stride is None else stride
    us, vs = perimeter_pixels(tile_rect(s, tile_id), stride)
    return g.image_to_sphere(us.astype(np.float64), vs.astype(np.float64))


def split(frame: np.ndarray, s: TilingScheme) -> dict[int, np.ndarray]:
    """Cut a frame into per-tile copies keyed by tile id."""
    frame = check_frame(frame, s.frame_width, s.frame_height)
    out = {}
    for i in s:
        x, y, w, h = tile_rect(s, i)
        out[i] = frame[y:y + h, x:x + w].copy()
    return out


def _assemble(tile_frames: Mapping[int, np.ndarray], s: TilingScheme, channels: int) -> np.ndarray:
    shape = (s.frame_height, s.frame_width) + ((channels,) if channels == 3 else ())
    out = np.zeros(shape, dtype=np.uint8)
    for tile_id, tile in tile_frames.items():
        x, y, w, h = tile_rect(s, tile_id)
        try:
            check_frame(tile, w, h, f"tile {tile_id}")
        except DimensionError as exc:
            raise DimensionError(f"tile {tile_id}: {exc}") from None
        if np.ndim(tile) != len(shape):
            raise DimensionError(f"tile {tile_id} has a different channel count than the frame")
        out[y:y + h, x:x + w] = tile
    return out


def retile(tile_frames: Mapping[int, np.ndarray], src: TilingScheme, dst: TilingScheme) -> dict[int, np.ndarray]:
    """Re-cut a complete tile set from one scheme into another."""
    if (src.frame_width, src.frame_height) != (dst.frame_width, dst.frame_height):
        raise GeometryError(f"tilings {src} and {dst} cover different frame sizes")
    missing = sorted(set(src) - set(tile_frames))
    if missing:
        raise GeometryError(f"retile needs every source tile; missing {missing}")
    channels = 3 if np.ndim(tile_frames[0]) == 3 else 1
    return split(_assemble(tile_frames, src, channels), dst)
