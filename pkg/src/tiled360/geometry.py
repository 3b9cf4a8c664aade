"""Sphere-space math: spherical/Cartesian conversion and head rotations.

Axes are right-handed with ``+x`` right, ``+y`` up and ``+z`` pointing to
the front (the view axis at zero orientation).  Azimuth grows towards
``+x`` and elevation towards ``+y``.  Angles are radians everywhere;
degrees only appear at the I/O boundary (CLI, CSV, JSON).

All functions accept scalars or numpy arrays; vectors live on the last
axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


def wrap_azimuth(azimuth):
    """Map azimuth angles into ``[-pi, pi)``."""
    wrapped = np.mod(np.asarray(azimuth, dtype=np.float64) + math.pi, TWO_PI) - math.pi
    # mod can return 2*pi - tiny, which lands on +pi after the shift
    wrapped = np.where(wrapped >= math.pi, wrapped - TWO_PI, wrapped)
    return wrapped if wrapped.ndim else float(wrapped)


class SphericalCoord(NamedTuple):
    azimuth: float
    elevation: float

    @classmethod
    def make(cls, azimuth: float, elevation: float) -> "SphericalCoord":
        """Build a coordinate with azimuth wrapped and elevation clamped."""
        return cls(float(wrap_azimuth(azimuth)), float(np.clip(elevation, -HALF_PI, HALF_PI)))


@dataclass(frozen=True)
class Orientation:
    """Head orientation as Tait-Bryan angles in radians (applied Y-X-Z)."""

    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(a) for a in (self.yaw, self.pitch, self.roll)):
            raise ValueError(f"orientation angles must be finite: {self}")

    @classmethod
    def from_degrees(cls, yaw: float = 0.0, pitch: float = 0.0, roll: float = 0.0) -> "Orientation":
        return cls(math.radians(yaw), math.radians(pitch), math.radians(roll))

    def matrix(self) -> np.ndarray:
        return rotation_matrix(self)


def spherical_to_cartesian(azimuth, elevation) -> np.ndarray:
    """Return unit vectors ``(cos(el) sin(az), sin(el), cos(el) cos(az))``."""
    az, el = np.broadcast_arrays(np.asarray(azimuth, dtype=np.float64), np.asarray(elevation, dtype=np.float64))
    cos_el = np.cos(el)
    return np.stack([cos_el * np.sin(az), np.sin(el), cos_el * np.cos(az)], axis=-1)


def cartesian_to_spherical(v):
    """Inverse of :func:`spherical_to_cartesian`.

    Returns ``(azimuth, elevation)`` with azimuth in ``[-pi, pi)``.  At the
    poles ``x == z == 0`` and the azimuth comes out as 0.
    """
    v = np.asarray(v, dtype=np.float64)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    azimuth = wrap_azimuth(np.arctan2(x, z))
    elevation = np.arcsin(np.clip(y, -1.0, 1.0))
    if elevation.ndim == 0:
        return float(azimuth), float(elevation)
    return azimuth, elevation


def _rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])


def _rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_matrix(o: Orientation) -> np.ndarray:
    """Return ``R = R_y(yaw) @ R_x(pitch) @ R_z(roll)``.

    Positive yaw turns right (front -> ``(sin yaw, 0, cos yaw)``), positive
    pitch looks up (front -> ``(0, sin pitch, cos pitch)``) and positive
    roll tilts the head right (up -> ``(sin roll, cos roll, 0)``).
    """
    return _rot_y(o.yaw) @ _rot_x(o.pitch) @ _rot_z(o.roll)


def rotate(r: np.ndarray, v) -> np.ndarray:
    """Apply rotation ``r`` to one vector or an ``(..., 3)`` array of vectors."""
    return np.asarray(v, dtype=np.float64) @ np.asarray(r).T


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)
