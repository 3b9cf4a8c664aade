"""Pixel <-> sphere mappings for ERP, cubemap and gnomonic (viewport) images.

Pixel coordinates are continuous with integer values at pixel centers:
pixel ``(i, j)`` covers ``[i - 0.5, i + 0.5) x [j - 0.5, j + 0.5)``, so a
``W x H`` frame spans ``[-0.5, W - 0.5] x [-0.5, H - 0.5]``.

Frames are ``uint8`` numpy arrays shaped ``(H, W)`` or ``(H, W, 3)``.
"""

from __future__ import annotations

import enum
import math
from abc import ABC, abstractmethod

import numpy as np

from .errors import DimensionError, GeometryError, OutOfFieldError
from .geometry import TWO_PI, HALF_PI, cartesian_to_spherical, normalize, spherical_to_cartesian

# destination pixels processed per block in remapping loops
_BLOCK = 1 << 18


class Filter(str, enum.Enum):
    NEAREST = "nearest"
    BILINEAR = "bilinear"


def check_frame(frame: np.ndarray, width: int, height: int, what: str = "frame") -> np.ndarray:
    frame = np.asarray(frame)
    if frame.dtype != np.uint8:
        raise DimensionError(f"{what} must be uint8, got {frame.dtype}")
    if frame.ndim not in (2, 3) or (frame.ndim == 3 and frame.shape[2] != 3):
        raise DimensionError(f"{what} must be (H, W) or (H, W, 3), got {frame.shape}")
    if frame.shape[:2] != (height, width):
        raise DimensionError(f"{what} is {frame.shape[1]}x{frame.shape[0]}, expected {width}x{height}")
    return frame


class Projection(ABC):
    """A raster image whose pixels map to directions on the unit sphere."""

    kind: str

    def __init__(self, width: int, height: int):
        if int(width) < 1 or int(height) < 1:
            raise GeometryError(f"projection size must be positive, got {width}x{height}")
        self.width = int(width)
        self.height = int(height)

    def __repr__(self):
        return f"{type(self).__name__}({self.width}x{self.height})"

    def __eq__(self, other):
        return type(self) is type(other) and self._key() == other._key()

    def __hash__(self):
        return hash((type(self).__name__, self._key()))

    def _key(self):
        return (self.width, self.height)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def pixel_grid(self, rows: slice | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Flattened ``(u, v)`` pixel-center coordinates, optionally for a row range."""
        rows = rows or slice(0, self.height)
        vs, us = np.mgrid[rows, 0:self.width]
        return us.ravel().astype(np.float64), vs.ravel().astype(np.float64)

    def in_bounds(self, u, v) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        return (u >= -0.5) & (u <= self.width - 0.5) & (v >= -0.5) & (v <= self.height - 0.5)

    def image_to_sphere(self, u, v) -> np.ndarray:
        """Unit direction for each pixel position; raises on out-of-bounds pixels."""
        if not np.all(self.in_bounds(u, v)):
            raise OutOfFieldError("pixel outside projection")
        return self._to_sphere(np.asarray(u, dtype=np.float64), np.asarray(v, dtype=np.float64))

    @abstractmethod
    def _to_sphere(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        ...

    def sphere_to_image(self, vecs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(u, v, valid)`` for ``(..., 3)`` unit vectors.

        ``valid`` is false where the direction has no image in this
        projection; ``u`` and ``v`` are NaN there.
        """
        u, v, valid, _, _ = self._locate(np.asarray(vecs, dtype=np.float64))
        return u, v, valid

    @abstractmethod
    def _locate(self, vecs):
        """``(u, v, valid, (xlo, xhi, ylo, yhi), wrap_x)`` for each direction.

        The box is the pixel range a sample may be clamped into.
        """

    def _located(self, vecs):
        u, v, valid, (xlo, xhi, ylo, yhi), wrap = self._locate(vecs)
        u = np.where(valid, u, 0.0)
        v = np.where(valid, v, 0.0)
        return u, v, valid, xlo, xhi, ylo, yhi, wrap

    def nearest_pixel(self, vecs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Integer ``(col, row, valid)`` of the pixel each direction falls into."""
        u, v, valid, xlo, xhi, ylo, yhi, wrap = self._located(np.asarray(vecs, dtype=np.float64))
        cols = np.floor(u + 0.5).astype(np.int64)
        rows = np.clip(np.floor(v + 0.5).astype(np.int64), ylo, yhi)
        cols = np.mod(cols, self.width) if wrap else np.clip(cols, xlo, xhi)
        return cols, rows, valid

    def sample(self, frame: np.ndarray, vecs, filt: Filter | str = Filter.NEAREST) -> np.ndarray:
        """Resample ``frame`` at directions ``vecs`` (shape ``(N, 3)``).

        Returns ``(N,)`` or ``(N, 3)`` uint8 samples; directions outside the
        projection's field read as 0.
        """
        frame = check_frame(frame, self.width, self.height)
        filt = Filter(filt)
        vecs = np.asarray(vecs, dtype=np.float64).reshape(-1, 3)
        if filt is Filter.NEAREST:
            cols, rows, valid = self.nearest_pixel(vecs)
            out = frame[rows, cols]
        else:
            out, valid = self._bilinear(frame, vecs)
        if not np.all(valid):
            out = out.copy()
            out[~valid] = 0
        return out

    def _bilinear(self, frame, vecs):
        u, v, valid, xlo, xhi, ylo, yhi, wrap = self._located(vecs)
        x0 = np.floor(u)
        y0 = np.floor(v)
        fx = u - x0
        fy = v - y0
        x0 = x0.astype(np.int64)
        y0 = y0.astype(np.int64)
        if wrap:
            xa, xb = np.mod(x0, self.width), np.mod(x0 + 1, self.width)
        else:
            xa, xb = np.clip(x0, xlo, xhi), np.clip(x0 + 1, xlo, xhi)
        ya, yb = np.clip(y0, ylo, yhi), np.clip(y0 + 1, ylo, yhi)
        img = frame.astype(np.float64)
        if img.ndim == 3:
            fx = fx[:, None]
            fy = fy[:, None]
        top = img[ya, xa] * (1.0 - fx) + img[ya, xb] * fx
        bottom = img[yb, xa] * (1.0 - fx) + img[yb, xb] * fx
        val = top * (1.0 - fy) + bottom * fy
        return np.clip(np.floor(val + 0.5), 0, 255).astype(np.uint8), valid


class Equirectangular(Projection):
    """Azimuth linear in columns, elevation linear in rows; frame center is front."""

    kind = "erp"

    def _to_sphere(self, u, v):
        azimuth = TWO_PI * (u + 0.5) / self.width - math.pi
        elevation = HALF_PI - math.pi * (v + 0.5) / self.height
        return spherical_to_cartesian(azimuth, elevation)

    def _locate(self, vecs):
        azimuth, elevation = cartesian_to_spherical(vecs)
        u = (np.asarray(azimuth) + math.pi) * self.width / TWO_PI - 0.5
        v = (HALF_PI - np.asarray(elevation)) * self.height / math.pi - 0.5
        return u, v, np.ones(np.shape(u), dtype=bool), (0, self.width - 1, 0, self.height - 1), True


# (forward, right, up) world axes per face; u follows right, v follows -up.
# The layout is 3x2: [front, right, back] over [left, top, bottom].
CUBE_FACES = {
    "front": ((0, 0, 1), (1, 0, 0), (0, 1, 0)),
    "right": ((1, 0, 0), (0, 0, -1), (0, 1, 0)),
    "back": ((0, 0, -1), (-1, 0, 0), (0, 1, 0)),
    "left": ((-1, 0, 0), (0, 0, 1), (0, 1, 0)),
    "top": ((0, 1, 0), (1, 0, 0), (0, 0, -1)),
    "bottom": ((0, -1, 0), (1, 0, 0), (0, 0, 1)),
}
CUBE_LAYOUT = ("front", "right", "back", "left", "top", "bottom")

_FACE_AXES = np.array([CUBE_FACES[name] for name in CUBE_LAYOUT], dtype=np.float64)
# face index for the dominant axis (x, y, z) and its sign
_DOMINANT_FACE = {(0, 1): 1, (0, -1): 3, (1, 1): 4, (1, -1): 5, (2, 1): 0, (2, -1): 2}


class Cubemap(Projection):
    """Six gnomonic cube faces packed 3 columns by 2 rows."""

    kind = "cmp"

    def __init__(self, width: int, height: int):
        super().__init__(width, height)
        if self.width % 3 or self.height % 2:
            raise GeometryError(f"cubemap width must divide by 3 and height by 2, got {width}x{height}")
        self.face_width = self.width // 3
        self.face_height = self.height // 2

    def face_origin(self, face: int) -> tuple[int, int]:
        return (face % 3) * self.face_width, (face // 3) * self.face_height

    def _to_sphere(self, u, v):
        col = np.clip(np.floor((u + 0.5) / self.face_width), 0, 2).astype(np.int64)
        row = np.clip(np.floor((v + 0.5) / self.face_height), 0, 1).astype(np.int64)
        face = row * 3 + col
        fu = u - col * self.face_width
        fv = v - row * self.face_height
        m = 2.0 * (fu + 0.5) / self.face_width - 1.0
        n = 1.0 - 2.0 * (fv + 0.5) / self.face_height
        axes = _FACE_AXES[face]
        ray = axes[..., 0, :] + m[..., None] * axes[..., 1, :] + n[..., None] * axes[..., 2, :]
        return normalize(ray)

    def face_of(self, vecs) -> np.ndarray:
        vecs = np.asarray(vecs, dtype=np.float64)
        axis = np.argmax(np.abs(vecs), axis=-1)
        sign = np.take_along_axis(vecs, axis[..., None], axis=-1)[..., 0] >= 0
        lookup = np.array([[_DOMINANT_FACE[(a, -1)], _DOMINANT_FACE[(a, 1)]] for a in range(3)])
        return lookup[axis, sign.astype(np.int64)]

    def _locate(self, vecs):
        face = self.face_of(vecs)
        axes = _FACE_AXES[face]
        depth = np.einsum("...i,...i->...", vecs, axes[..., 0, :])
        m = np.einsum("...i,...i->...", vecs, axes[..., 1, :]) / depth
        n = np.einsum("...i,...i->...", vecs, axes[..., 2, :]) / depth
        fu = (m + 1.0) * 0.5 * self.face_width - 0.5
        fv = (1.0 - n) * 0.5 * self.face_height - 0.5
        xlo = (face % 3) * self.face_width
        ylo = (face // 3) * self.face_height
        box = (xlo, xlo + self.face_width - 1, ylo, ylo + self.face_height - 1)
        return xlo + fu, ylo + fv, np.ones(np.shape(fu), dtype=bool), box, False


class Gnomonic(Projection):
    """Tangent-plane image centered on ``+z``; the model of a flat viewport."""

    kind = "gnomonic"

    def __init__(self, width: int, height: int, fov_x: float, fov_y: float):
        super().__init__(width, height)
        if not (0.0 < fov_x < math.pi and 0.0 < fov_y < math.pi):
            raise GeometryError(f"gnomonic fov must lie in (0, pi) per axis, got {fov_x}, {fov_y}")
        self.fov_x = float(fov_x)
        self.fov_y = float(fov_y)
        self._tan_x = math.tan(self.fov_x / 2.0)
        self._tan_y = math.tan(self.fov_y / 2.0)

    def __repr__(self):
        return (f"Gnomonic({self.width}x{self.height}, "
                f"fov={math.degrees(self.fov_x):g}x{math.degrees(self.fov_y):g} deg)")

    def _key(self):
        return (self.width, self.height, self.fov_x, self.fov_y)

    def _to_sphere(self, u, v):
        m = (2.0 * (u + 0.5) / self.width - 1.0) * self._tan_x
        n = (1.0 - 2.0 * (v + 0.5) / self.height) * self._tan_y
        return normalize(np.stack([m, n, np.ones_like(m)], axis=-1))

    def _locate(self, vecs):
        z = vecs[..., 2]
        front = z > 0
        safe_z = np.where(front, z, 1.0)
        m = vecs[..., 0] / safe_z / self._tan_x
        n = vecs[..., 1] / safe_z / self._tan_y
        valid = front & (np.abs(m) <= 1.0) & (np.abs(n) <= 1.0)
        u = np.where(valid, (m + 1.0) * 0.5 * self.width - 0.5, np.nan)
        v = np.where(valid, (1.0 - n) * 0.5 * self.height - 0.5, np.nan)
        return u, v, valid, (0, self.width - 1, 0, self.height - 1), False

    def perimeter_pixels(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel centers of the outer ring of the image."""
        w, h = self.width, self.height
        us, vs = np.meshgrid(np.arange(w), np.arange(h))
        ring = (us == 0) | (us == w - 1) | (vs == 0) | (vs == h - 1)
        return us[ring].astype(np.float64), vs[ring].astype(np.float64)


def make_projection(kind: str, width: int, height: int, fov_x=None, fov_y=None) -> Projection:
    kind = kind.lower()
    if kind == "erp":
        return Equirectangular(width, height)
    if kind == "cmp":
        return Cubemap(width, height)
    if kind == "gnomonic":
        if fov_x is None or fov_y is None:
            raise GeometryError("gnomonic projection needs fov_x and fov_y")
        return Gnomonic(width, height, fov_x, fov_y)
    raise GeometryError(f"unknown projection kind {kind!r}")


def image_to_sphere(g: Projection, p) -> np.ndarray:
    """Direction of a single pixel position ``p = (u, v)``."""
    u, v = p
    return g.image_to_sphere(np.float64(u), np.float64(v))


def sphere_to_image(g: Projection, vec) -> tuple[float, float]:
    """Pixel position of a single unit vector; raises if it has no image."""
    u, v, valid = g.sphere_to_image(np.asarray(vec, dtype=np.float64))
    if not bool(valid):
        raise OutOfFieldError(f"direction {tuple(round(float(c), 6) for c in vec)} is behind the plane or outside the field")
    return float(u), float(v)


def remap(src: np.ndarray, src_g: Projection, dst_g: Projection, filt: Filter | str = Filter.NEAREST,
          rotation: np.ndarray | None = None) -> np.ndarray:
    """Fill ``dst_g`` by sampling ``src`` along each destination pixel's ray.

    ``rotation`` (if given) maps destination-local rays into the source's
    world frame before sampling.
    """
    src = check_frame(src, src_g.width, src_g.height, "source frame")
    filt = Filter(filt)
    out = np.empty((dst_g.height, dst_g.width) + src.shape[2:], dtype=np.uint8)
    rows_per_block = max(1, _BLOCK // dst_g.width)
    for start in range(0, dst_g.height, rows_per_block):
        rows = slice(start, min(start + rows_per_block, dst_g.height))
        u, v = dst_g.pixel_grid(rows)
        rays = dst_g._to_sphere(u, v)
        if rotation is not None:
            rays = rays @ np.asarray(rotation).T
        block = src_g.sample(src, rays, filt)
        out[rows] = block.reshape((rows.stop - rows.start, dst_g.width) + src.shape[2:])
    return out


def convert_projection(src: np.ndarray, src_g: Projection, dst_g: Projection,
                       filt: Filter | str = Filter.NEAREST) -> np.ndarray:
    """Convert a frame between projections by resampling through the sphere."""
    return remap(src, src_g, dst_g, filt)
