"""Moving rectangles over smooth colour gradients.

The background of a clip is static; one rectangle of constant colour moves
by a constant integer velocity and never leaves the frame, so frame
``t + 1`` is frame ``t`` with the rectangle shifted by that velocity.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import ClipSource

MAX_SPEED = 2


@dataclass(frozen=True)
class Motion:
    start: Tuple[int, int]
    size: Tuple[int, int]
    velocity: Tuple[int, int]

    def position(self, t: int) -> Tuple[int, int]:
        return self.start[0] + self.velocity[0] * t, self.start[1] + self.velocity[1] * t


def _axis_motion(rng: np.random.Generator, extent: int, frames: int) -> Tuple[int, int, int]:
    span = max(frames - 1, 1)
    min_size = 1 if extent < 4 else 2
    vmax = min(MAX_SPEED, (extent - min_size) // span) if frames > 1 else 0
    v = int(rng.integers(-vmax, vmax + 1))
    room = extent - abs(v) * (frames - 1)
    size = int(rng.integers(min_size, max(min_size, min(room, max(extent // 2, min_size))) + 1))
    travel = abs(v) * (frames - 1)
    lo = travel if v < 0 else 0
    hi = extent - size - (0 if v < 0 else travel)
    start = int(rng.integers(lo, max(lo, hi) + 1))
    return start, size, v


def random_motion(rng: np.random.Generator, frames: int, height: int, width: int) -> Motion:
    y0, hy, vy = _axis_motion(rng, height, frames)
    x0, wx, vx = _axis_motion(rng, width, frames)
    return Motion(start=(y0, x0), size=(hy, wx), velocity=(vy, vx))


def synth_clip(rng: np.random.Generator, frames: int, height: int, width: int,
               motion: Optional[Motion] = None) -> np.ndarray:
    """One ``[T, H, W, 3]`` clip in ``[-1, 1]``."""
    ys = np.linspace(-1.0, 1.0, height)[:, None]
    xs = np.linspace(-1.0, 1.0, width)[None, :]
    slopes = rng.uniform(-1.0, 1.0, size=(2, 3))
    offsets = rng.uniform(-0.3, 0.3, size=3)
    background = 0.3 * (slopes[0] * ys[..., None] + slopes[1] * xs[..., None]) + offsets
    colour = rng.uniform(-1.0, 1.0, size=3)
    motion = motion or random_motion(rng, frames, height, width)

    clip = np.empty((frames, height, width, 3))
    for t in range(frames):
        clip[t] = background
        y, x = motion.position(t)
        clip[t, y:y + motion.size[0], x:x + motion.size[1]] = colour
    return np.clip(clip, -1.0, 1.0)


class SyntheticSource(ClipSource):
    """``count`` deterministic clips; clip ``i`` is drawn from ``default_rng([seed, i])``."""

    def __init__(self, seed: int = 0, count: int = 1024, frames: int = 17, height: int = 32, width: int = 32):
        super().__init__()
        if min(count, frames, height, width) < 1:
            raise ValueError(f"count and clip dims must be >= 1, got {count}, {frames}x{height}x{width}")
        self.seed = seed
        self.count = count
        self.shape = (frames, height, width)

    def list_clips(self) -> List[str]:
        return [f"synthetic/{i:06d}" for i in range(self.count)]

    def load_clip(self, clip_id: str) -> Optional[np.ndarray]:
        prefix, _, number = str(clip_id).partition("/")
        if prefix != "synthetic" or not number.isdigit() or int(number) >= self.count:
            return None
        return self.clip(int(number))

    def clip(self, index: int) -> np.ndarray:
        rng = np.random.default_rng([self.seed, index])
        return synth_clip(rng, *self.shape)

    def __len__(self) -> int:
        return self.count
