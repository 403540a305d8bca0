"""Spatial shuffles and anti-aliased pooling.

``depth_to_space`` is the decoder's spatial upsampler. The encoder
downsamples with strided causal convolutions and never calls
``blur_pool3d``; that pooling is a standalone block for adversarial-critic
style consumers that need shift-robust downsampling (the critic itself is
not part of this package). The ``blur_dc`` self-test check and the layer
tests exercise it, with ``strided_subsample`` as the unfiltered baseline.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import DimensionError, ShapeError
from ..numerics import Tensor, ops
from .causal import causal_pair, regular_pair, time_axis

# channel blocks are read row-major: (r1, r2, c) -> output pixel (h*r + r1, w*r + r2)
_D2S = "... t h w (r1 r2 c) -> ... t (h r1) (w r2) c"
_S2D = "... t (h r1) (w r2) c -> ... t h w (r1 r2 c)"


def depth_to_space(x: Tensor, r: int) -> Tensor:
    time_axis(x)
    if r == 1:
        return x
    if x.shape[-1] % (r * r):
        raise ShapeError(f"channel count {x.shape[-1]} is not divisible by r^2 = {r * r}", axis="C")
    return ops.rearrange(x, _D2S, r1=r, r2=r)


def space_to_depth(x: Tensor, r: int) -> Tensor:
    axis = time_axis(x)
    if r == 1:
        return x
    for name, extent in zip("HW", x.shape[axis + 1:axis + 3]):
        if extent % r:
            raise ShapeError(f"axis {name} extent {extent} is not divisible by {r}", axis=name)
    return ops.rearrange(x, _S2D, r1=r, r2=r)


def binomial_filter(size: int = 3) -> np.ndarray:
    """Normalised binomial taps, ``[1, 2, 1] / 4`` for size 3."""
    if size < 1:
        raise DimensionError(f"filter size must be >= 1, got {size}")
    return np.poly1d((0.5, 0.5)) ** (size - 1) if size > 1 else np.poly1d((1.0,))


def _taps(size: int) -> np.ndarray:
    return np.asarray(binomial_filter(size).coeffs, dtype=np.float64)


def blur_pool3d(
    x: Tensor,
    stride: Sequence[int] = (1, 2, 2),
    causal_temporal: bool = True,
    filter_size: int = 3,
) -> Tensor:
    """Depthwise separable binomial blur on T, H and W, then striding.

    Borders replicate the edge value so a constant input stays constant; the
    time axis is padded only on the past side when ``causal_temporal``.
    """
    axis = time_axis(x)
    channels = x.shape[-1]
    taps = _taps(filter_size)
    k3 = taps[:, None, None] * taps[None, :, None] * taps[None, None, :]
    kernel = np.zeros(k3.shape + (channels, channels))
    for c in range(channels):
        kernel[..., c, c] = k3

    t_pad = causal_pair(filter_size) if causal_temporal else regular_pair(filter_size)
    pads = [(0, 0)] * x.ndim
    pads[axis] = t_pad
    pads[axis + 1] = regular_pair(filter_size)
    pads[axis + 2] = regular_pair(filter_size)
    padded = ops.pad_explicit(x, pads, mode="edge")
    return ops.conv3d(padded, Tensor(kernel), tuple(stride), ((0, 0),) * 3)


def strided_subsample(x: Tensor, stride: Sequence[int]) -> Tensor:
    """Plain strided picking, no low-pass filter."""
    axis = time_axis(x)
    window = [slice(None)] * x.ndim
    for i, s in enumerate(stride):
        window[axis + i] = slice(None, None, int(s))
    return ops.slice_tensor(x, window)
