"""Raw video files and PNG sequences.

A ``.lfqv`` file is a 16-byte header (magic ``b"LFQV"`` then ``T``, ``H``,
``W`` as little-endian u32) followed by float32 little-endian samples in
planar order ``[T][C][H][W]`` with ``C = 3``. Values are pixels in
``[-1, 1]``.

A directory is read as a PNG sequence (``*.png`` sorted by name, one frame
each); this needs Pillow.
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import List, Union

import numpy as np

from ..errors import ConfigurationError, DimensionError, FormatError

try:
    from PIL import Image
except ImportError:
    Image = None

MAGIC = b"LFQV"
HEADER = struct.Struct("<4sIII")
CHANNELS = 3
SUFFIX = ".lfqv"

PathLike = Union[str, Path]


def encode_video(video: np.ndarray) -> bytes:
    video = np.asarray(video, dtype=np.float64)
    if video.ndim != 4 or video.shape[-1] != CHANNELS:
        raise DimensionError(f"video must be [T,H,W,{CHANNELS}], got {video.shape}")
    t, h, w, _ = video.shape
    planar = np.ascontiguousarray(np.transpose(video, (0, 3, 1, 2)), dtype="<f4")
    return HEADER.pack(MAGIC, t, h, w) + planar.tobytes()


def decode_video(data: bytes) -> np.ndarray:
    if len(data) < HEADER.size:
        raise FormatError("header", f"{len(data)} bytes, need at least {HEADER.size}")
    magic, t, h, w = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError("magic", f"expected {MAGIC!r}, got {magic!r}")
    for name, v in (("frames", t), ("height", h), ("width", w)):
        if v < 1:
            raise FormatError(name, "extent must be >= 1")
    expected = t * CHANNELS * h * w * 4
    if len(data) - HEADER.size != expected:
        raise FormatError("samples", f"{len(data) - HEADER.size} bytes, header implies {expected}")
    planar = np.frombuffer(data, dtype="<f4", offset=HEADER.size).reshape(t, CHANNELS, h, w)
    return np.transpose(planar, (0, 2, 3, 1)).astype(np.float64)


def _require_pillow() -> None:
    if Image is None:
        raise ConfigurationError("Pillow is required for PNG sequences; install lfqtok[png]")


def _png_frames(directory: Path) -> List[Path]:
    frames = sorted(directory.glob("*.png"))
    if not frames:
        raise FormatError("frames", f"no *.png files in {directory}")
    return frames


def read_png_sequence(directory: PathLike) -> np.ndarray:
    _require_pillow()
    frames = []
    for path in _png_frames(Path(directory)):
        with Image.open(path) as img:
            frames.append(np.asarray(img.convert("RGB"), dtype=np.float64) / 127.5 - 1.0)
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise FormatError("frames", f"PNG frames differ in size: {sorted(shapes)}")
    return np.stack(frames)


def write_png_sequence(directory: PathLike, video: np.ndarray) -> Path:
    _require_pillow()
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    pixels = np.round((np.clip(np.asarray(video), -1.0, 1.0) + 1.0) * 127.5).astype(np.uint8)
    for t, frame in enumerate(pixels):
        Image.fromarray(frame, mode="RGB").save(directory / f"frame_{t:05d}.png")
    return directory


def read_video(path: PathLike) -> np.ndarray:
    path = Path(path)
    if path.is_dir():
        return read_png_sequence(path)
    return decode_video(path.read_bytes())


def write_video(path: PathLike, video: np.ndarray) -> Path:
    """Writes ``.lfqv``; a path without a suffix is written as a PNG directory."""
    path = Path(path)
    if path.suffix == "" or path.is_dir():
        return write_png_sequence(path, video)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_video(video))
    return path
