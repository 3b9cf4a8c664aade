"""Field-of-view frustum, visible-tile selection and viewport extraction.

The frustum is four planes through the sphere center.  Each plane is
stored by its outward normal, so a direction ``p`` is inside the field of
view when ``n . p <= 0`` for all four normals (points on a plane count).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .geometry import Orientation, rotation_matrix
from .projection import Filter, Gnomonic, Projection, check_frame, remap
from .tiling import TilingScheme, _check_geometry, perimeter_pixels, tile_rect


@dataclass(frozen=True)
class Fov:
    """Horizontal and vertical field of view in radians."""

    fov_x: float
    fov_y: float

    def __post_init__(self):
        if not (0.0 < self.fov_x < 2 * math.pi and 0.0 < self.fov_y < math.pi):
            raise GeometryError(f"fov out of range: {self}")

    @classmethod
    def from_degrees(cls, fov_x: float, fov_y: float) -> "Fov":
        return cls(math.radians(fov_x), math.radians(fov_y))


@dataclass(frozen=True, eq=False)
class Frustum:
    """Outward normals of the left, right, top and bottom planes, shape ``(4, 3)``."""

    normals: np.ndarray

    @property
    def left(self):
        return self.normals[0]

    @property
    def right(self):
        return self.normals[1]

    @property
    def top(self):
        return self.normals[2]

    @property
    def bottom(self):
        return self.normals[3]


def make_frustum(fov: Fov) -> Frustum:
    if not (fov.fov_x < math.pi and fov.fov_y < math.pi):
        raise GeometryError(f"a four-plane frustum needs fov below 180 degrees per axis, got {fov}")
    cx, sx = math.cos(fov.fov_x / 2), math.sin(fov.fov_x / 2)
    cy, sy = math.cos(fov.fov_y / 2), math.sin(fov.fov_y / 2)
    normals = np.array([
        [-cx, 0.0, -sx],
        [cx, 0.0, -sx],
        [0.0, cy, -sy],
        [0.0, -cy, -sy],
    ])
    return Frustum(normals)


def rotate_frustum(f: Frustum, r: np.ndarray) -> Frustum:
    return Frustum(f.normals @ np.asarray(r).T)


def contains(f: Frustum, p) -> np.ndarray | bool:
    """Whether each direction lies inside the frustum (boundary inclusive)."""
    p = np.asarray(p, dtype=np.float64)
    inside = np.all(p @ f.normals.T <= 0.0, axis=-1)
    return bool(inside) if inside.ndim == 0 else inside


def _check_viewport_geometry(f: Frustum, vp_geom: Projection) -> None:
    if not isinstance(vp_geom, Gnomonic):
        raise GeometryError(f"viewport geometry must be gnomonic, got {vp_geom!r}")
    if not np.allclose(make_frustum(Fov(vp_geom.fov_x, vp_geom.fov_y)).normals, f.normals, atol=1e-12):
        raise GeometryError("frustum and viewport geometry have different fields of view")


def border_hits(f_world: Frustum, s: TilingScheme, g: Projection, stride: int) -> set[int]:
    """Tiles with at least one sampled outline pixel inside ``f_world``."""
    ids, us, vs = [], [], []
    for tile_id in s:
        tu, tv = perimeter_pixels(tile_rect(s, tile_id), stride)
        ids.append(np.full(tu.shape, tile_id))
        us.append(tu)
        vs.append(tv)
    ids = np.concatenate(ids)
    pts = g.image_to_sphere(np.concatenate(us).astype(np.float64), np.concatenate(vs).astype(np.float64))
    return {int(i) for i in np.unique(ids[contains(f_world, pts)])}


def viewport_samples(vp_geom: Gnomonic, r: np.ndarray) -> np.ndarray:
    """World directions of the viewport's outline pixels plus its center ray."""
    us, vs = vp_geom.perimeter_pixels()
    local = vp_geom.image_to_sphere(us, vs)
    local = np.vstack([local, [0.0, 0.0, 1.0]])
    return local @ np.asarray(r).T


def landing_hits(f_world: Frustum, samples: np.ndarray, s: TilingScheme, g: Projection) -> set[int]:
    """Tiles receiving one of ``samples`` at a pixel whose center is inside ``f_world``.

    A ray near the frustum edge can land in a pixel whose center is just
    outside; such landings are dropped so selection agrees with testing
    every pixel center.
    """
    cols, rows, valid = g.nearest_pixel(samples)
    cols, rows = cols[valid], rows[valid]
    centers = g.image_to_sphere(cols.astype(np.float64), rows.astype(np.float64))
    keep = contains(f_world, centers)
    return {int(i) for i in np.unique(s.tile_at(cols[keep], rows[keep]))}


def visible_tiles(f: Frustum, s: TilingScheme, g: Projection, vp_geom: Gnomonic, r: np.ndarray,
                  stride: int | None = None) -> set[int]:
    """Ids of tiles needed to render the viewport.

    ``f`` is the frustum at zero orientation; ``r`` rotates it (and the
    viewport samples) into the head pose.  A tile is selected when one of
    its outline pixels falls inside the rotated frustum, or when a ray of
    the viewport's outline or center lands inside the tile on a pixel
    whose center is in view.  The second test catches tiles that fully
    contain the viewport.
    """
    _check_geometry(s, g)
    _check_viewport_geometry(f, vp_geom)
    stride = s.default_stride() if stride is None else stride
    f_world = rotate_frustum(f, r)
    return border_hits(f_world, s, g, stride) | landing_hits(f_world, viewport_samples(vp_geom, r), s, g)


def extract_viewport(proj: np.ndarray, g: Projection, o: Orientation | np.ndarray, vp_geom: Gnomonic,
                     filt: Filter | str = Filter.NEAREST) -> np.ndarray:
    """Render the viewport seen with head orientation ``o`` from a projection frame."""
    check_frame(proj, g.width, g.height, "projection frame")
    if not isinstance(vp_geom, Gnomonic):
        raise GeometryError(f"viewport geometry must be gnomonic, got {vp_geom!r}")
    r = rotation_matrix(o) if isinstance(o, Orientation) else np.asarray(o)
    return remap(proj, g, vp_geom, filt, rotation=r)


class Viewport:
    """A head-mounted display's view: gnomonic image geometry plus its frustum."""

    def __init__(self, width: int, height: int, fov: Fov):
        self.fov = fov
        self.geometry = Gnomonic(width, height, fov.fov_x, fov.fov_y)
        self.frustum = make_frustum(fov)

    def __repr__(self):
        return f"Viewport({self.geometry!r})"

    def visible_tiles(self, s: TilingScheme, g: Projection, o: Orientation, stride: int | None = None) -> set[int]:
        return visible_tiles(self.frustum, s, g, self.geometry, rotation_matrix(o), stride)

    def extract(self, proj: np.ndarray, g: Projection, o: Orientation,
                filt: Filter | str = Filter.NEAREST) -> np.ndarray:
        return extract_viewport(proj, g, o, self.geometry, filt)
