"""Temporally causal convolution and the frame arithmetic around it.

Tensors are ``[T, H, W, C]`` or ``[N, T, H, W, C]``. A causal layer pads
``kt - 1`` frames before the clip and none after, so output frame ``t``
only sees input frames ``<= t`` and frame 0 sees nothing but itself.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..errors import DimensionError, ShapeError
from ..numerics import Tensor, ops

Pair = Tuple[int, int]


def time_axis(x: Tensor) -> int:
    if x.ndim not in (4, 5):
        raise DimensionError(f"expected [T,H,W,C] or [N,T,H,W,C], got {x.shape}")
    return x.ndim - 4


def regular_pair(k: int) -> Pair:
    return ((k - 1) // 2, k // 2)


def causal_pair(k: int) -> Pair:
    return (k - 1, 0)


@dataclass(frozen=True)
class CausalConv3dLayer:
    kernel: Tensor  # [kt, kh, kw, Cin, Cout]
    bias: Optional[Tensor] = None
    stride: Tuple[int, int, int] = (1, 1, 1)
    causal: bool = True

    def __post_init__(self):
        if self.kernel.ndim != 5:
            raise DimensionError(f"kernel must be [kt,kh,kw,Cin,Cout], got {self.kernel.shape}")
        if self.bias is not None and self.bias.shape != (self.kernel.shape[-1],):
            raise DimensionError(f"bias {self.bias.shape} does not match {self.kernel.shape[-1]} output channels")

    @property
    def kernel_size(self) -> Tuple[int, int, int]:
        return tuple(self.kernel.shape[:3])

    @property
    def in_channels(self) -> int:
        return self.kernel.shape[3]

    @property
    def out_channels(self) -> int:
        return self.kernel.shape[4]

    @property
    def temporal_padding(self) -> Pair:
        kt = self.kernel_size[0]
        return causal_pair(kt) if self.causal else regular_pair(kt)

    @property
    def spatial_padding(self) -> Tuple[Pair, Pair]:
        _, kh, kw = self.kernel_size
        return regular_pair(kh), regular_pair(kw)

    @property
    def padding(self) -> Tuple[Pair, Pair, Pair]:
        return (self.temporal_padding,) + self.spatial_padding


def causal_conv3d(x: Tensor, layer: CausalConv3dLayer) -> Tensor:
    time_axis(x)
    out = ops.conv3d(x, layer.kernel, layer.stride, layer.padding)
    if layer.bias is not None:
        out = ops.channel_affine(out, shift=layer.bias)
    return out


@dataclass(frozen=True)
class FrameMap:
    """``1 + s*t`` input frames <-> ``1 + t`` output frames."""

    stride: int
    frames_in: int
    frames_out: int

    @classmethod
    def downsample(cls, frames: int, stride: int) -> "FrameMap":
        if stride < 1:
            raise ShapeError(f"temporal stride must be >= 1, got {stride}", axis="T")
        if frames < 1 or (frames - 1) % stride:
            raise ShapeError(
                f"frame count T={frames} violates (T - 1) mod s == 0 for s={stride}", axis="T"
            )
        return cls(stride, frames, 1 + (frames - 1) // stride)

    @classmethod
    def upsample(cls, frames: int, stride: int) -> "FrameMap":
        if stride < 1 or frames < 1:
            raise ShapeError(f"cannot upsample {frames} frames by {stride}", axis="T")
        return cls(stride, 1 + stride * (frames - 1), frames)


def temporal_downsample(x: Tensor, stride: int, layer: Optional[CausalConv3dLayer] = None) -> Tensor:
    """Causal conv with temporal stride ``s``: output frame ``t`` ends at input frame ``s*t``.

    Without a layer an identity 1x1x1 kernel is used, which simply keeps
    frames ``0, s, 2s, ...``.
    """
    fmap = FrameMap.downsample(x.shape[time_axis(x)], stride)
    if layer is None:
        channels = x.shape[-1]
        kernel = Tensor(np.eye(channels).reshape(1, 1, 1, channels, channels))
        layer = CausalConv3dLayer(kernel=kernel, stride=(stride, 1, 1))
    elif layer.stride[0] != stride or not layer.causal:
        raise DimensionError(f"layer stride {layer.stride} is not a causal temporal stride of {stride}")
    out = causal_conv3d(x, layer)
    assert out.shape[time_axis(out)] == fmap.frames_out
    return out


def temporal_upsample(x: Tensor, stride: int) -> Tensor:
    """Repeat every frame ``s`` times, then drop the first ``s - 1`` frames."""
    axis = time_axis(x)
    fmap = FrameMap.upsample(x.shape[axis], stride)
    if stride == 1:
        return x
    repeated = ops.repeat(x, stride, axis=axis)
    window = [slice(None)] * x.ndim
    window[axis] = slice(stride - 1, None)
    out = ops.slice_tensor(repeated, window)
    assert out.shape[axis] == fmap.frames_in
    return out
