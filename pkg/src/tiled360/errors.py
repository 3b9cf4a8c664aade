"""Exception hierarchy shared by every module."""


class Tiled360Error(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(Tiled360Error, ValueError):
    """Invalid projection, tiling or field-of-view parameters."""


class OutOfFieldError(Tiled360Error, ValueError):
    """A pixel or direction falls outside what a projection can represent."""


class DimensionError(Tiled360Error, ValueError):
    """Frame shapes disagree with the geometry they are used with."""


class SequenceError(Tiled360Error):
    """Tile frame sequences on disk are missing or inconsistent."""


class FormatError(Tiled360Error, ValueError):
    """Malformed netpbm, CSV or JSON input."""
