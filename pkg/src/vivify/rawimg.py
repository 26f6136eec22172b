"""Raw RGB tile files: u16 BE width, u16 BE height, then row-major RGB8."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

_HEADER = struct.Struct(">HH")


def tile_to_bytes(tile: np.ndarray) -> bytes:
    h, w, c = tile.shape
    if c != 3 or tile.dtype != np.uint8:
        raise ValueError("tile must be uint8 RGB")
    return _HEADER.pack(w, h) + tile.tobytes()


def tile_from_bytes(data: bytes) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise ValueError("truncated tile file")
    w, h = _HEADER.unpack(data[: _HEADER.size])
    pixels = data[_HEADER.size :]
    if len(pixels) != w * h * 3:
        raise ValueError(f"tile payload is {len(pixels)} bytes, expected {w * h * 3}")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(h, w, 3).copy()


def save_tile(path: Path | str, tile: np.ndarray) -> None:
    Path(path).write_bytes(tile_to_bytes(tile))


def load_tile(path: Path | str) -> np.ndarray:
    return tile_from_bytes(Path(path).read_bytes())
