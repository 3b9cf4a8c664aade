"""Geometry toolkit for tiled 360-degree video: projections, tiles, viewports."""

from .errors import (DimensionError, FormatError, GeometryError, OutOfFieldError, SequenceError,
                     Tiled360Error)
from .geometry import (Orientation, SphericalCoord, cartesian_to_spherical, rotate, rotation_matrix,
                       spherical_to_cartesian)
from .metrics import PSNR_SATURATED, mean_tile_mse, mse, psnr
from .netpbm import read_pnm, write_pnm
from .projection import (Cubemap, Equirectangular, Filter, Gnomonic, Projection, convert_projection,
                         image_to_sphere, make_projection, sphere_to_image)
from .stitcher import TileSource, open_sequence, stitch
from .tiling import Tile, TilingScheme, retile, split, tile_border_points, tile_rect
from .viewport import Fov, Frustum, Viewport, contains, extract_viewport, make_frustum, rotate_frustum, visible_tiles

__version__ = "0.1.0"
