"""Rebuild projection frames from the tiles that are available.

Tiles live on disk as netpbm image sequences, one directory per tile,
named ``frame_000000.pgm``, ``frame_000001.pgm`` and so on.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import DimensionError, SequenceError
from .netpbm import read_pnm
from .tiling import TilingScheme, _assemble, tile_rect

FRAME_PATTERN = "frame_%06d"
TILE_DIR_PATTERN = "tile_%03d"


def stitch(tile_frames: Mapping[int, np.ndarray], s: TilingScheme, channels: int = 1) -> np.ndarray:
    """Paste available tiles into a frame; every missing tile's area stays 0."""
    if channels not in (1, 3):
        raise DimensionError(f"channels must be 1 or 3, got {channels}")
    for tile_id in tile_frames:
        tile_rect(s, tile_id)
    return _assemble(tile_frames, s, channels)


def frame_path(directory: Path, index: int, suffix: str) -> Path:
    return Path(directory) / f"{FRAME_PATTERN % index}{suffix}"


_FRAME_RE = re.compile(r"^frame_(\d{6})\.(pgm|ppm)$")


@dataclass(frozen=True)
class TileSource:
    """One tile's frame sequence.

    ``frames`` is an explicit ``range`` of frame indices; when omitted the
    files present in ``directory`` are used, and they must be contiguous.
    """

    tile_id: int
    directory: Path
    frames: range | None = None

    def resolve(self) -> tuple[range, str]:
        directory = Path(self.directory)
        if not directory.is_dir():
            raise SequenceError(f"tile {self.tile_id}: directory {directory} does not exist")
        found = {}
        for name in os.listdir(directory):
            m = _FRAME_RE.match(name)
            if m:
                found[int(m.group(1))] = "." + m.group(2)
        suffixes = set(found.values())
        if len(suffixes) > 1:
            raise SequenceError(f"tile {self.tile_id}: mixed .pgm and .ppm frames in {directory}")
        suffix = suffixes.pop() if suffixes else ".pgm"
        if self.frames is not None:
            frames = self.frames
        elif found:
            frames = range(min(found), max(found) + 1)
        else:
            frames = range(0)
        for index in frames:
            if index not in found:
                raise SequenceError(f"tile {self.tile_id}: frame {index} missing in {directory}")
        return frames, suffix


class TileSequence:
    """Synchronous iterator over several tile sequences.

    Each step yields ``{tile_id: frame}`` for every source, in source order.
    """

    def __init__(self, sources: Iterable[TileSource], scheme: TilingScheme | None = None):
        self.sources = list(sources)
        self.scheme = scheme
        ids = [src.tile_id for src in self.sources]
        if len(set(ids)) != len(ids):
            raise SequenceError(f"duplicate tile ids in sources: {ids}")
        resolved = [src.resolve() for src in self.sources]
        counts = {src.tile_id: len(frames) for src, (frames, _) in zip(self.sources, resolved)}
        if len(set(counts.values())) > 1:
            raise SequenceError(f"tile sequences have different frame counts: {counts}")
        self._resolved = resolved
        self.length = next(iter(counts.values()), 0)

    def __len__(self) -> int:
        return self.length

    def read(self, step: int, tile_ids: Iterable[int] | None = None) -> dict[int, np.ndarray]:
        """Frames at position ``step`` for the given tiles (all when ``None``)."""
        wanted = None if tile_ids is None else set(tile_ids)
        out = {}
        for src, (frames, suffix) in zip(self.sources, self._resolved):
            if wanted is not None and src.tile_id not in wanted:
                continue
            index = frames[step]
            path = frame_path(src.directory, index, suffix)
            if not path.exists():
                raise SequenceError(f"tile {src.tile_id}: frame {index} missing ({path})")
            frame = read_pnm(path)
            if self.scheme is not None:
                _, _, w, h = tile_rect(self.scheme, src.tile_id)
                if frame.shape[:2] != (h, w):
                    raise SequenceError(
                        f"tile {src.tile_id} frame {index} is {frame.shape[1]}x{frame.shape[0]}, expected {w}x{h}")
            out[src.tile_id] = frame
        return out

    def __iter__(self) -> Iterator[dict[int, np.ndarray]]:
        shapes: dict[int, tuple] = {}
        for step in range(self.length):
            frames = self.read(step)
            for tile_id, frame in frames.items():
                if shapes.setdefault(tile_id, frame.shape) != frame.shape:
                    raise SequenceError(
                        f"tile {tile_id} changes shape at step {step}: {shapes[tile_id]} -> {frame.shape}")
            yield frames


def open_sequence(sources: Iterable[TileSource], scheme: TilingScheme | None = None) -> TileSequence:
    return TileSequence(sources, scheme)


def tile_sources(root: str | os.PathLike, tile_ids: Iterable[int]) -> list[TileSource]:
    """Sources for the standard ``<root>/tile_NNN/frame_NNNNNN.pgm`` layout."""
    root = Path(root)
    return [TileSource(i, root / (TILE_DIR_PATTERN % i)) for i in tile_ids]
