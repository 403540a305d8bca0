"""Building blocks of the causal encoder and decoder.

Each block reads its weights from a ``name -> Tensor`` mapping under a
dotted prefix, so the same code runs on live, shadow or perturbed weights.
"""
from __future__ import annotations

from typing import Mapping

from ..layers import (
    CausalConv3dLayer,
    adaptive_group_norm,
    causal_conv3d,
    depth_to_space,
    group_norm,
    temporal_downsample,
    temporal_upsample,
)
from ..numerics import Tensor, ops
from .config import StageSpec, TokenizerConfig

Params = Mapping[str, Tensor]


def conv_layer(params: Params, name: str, stride=(1, 1, 1)) -> CausalConv3dLayer:
    return CausalConv3dLayer(kernel=params[f"{name}.kernel"], bias=params[f"{name}.bias"], stride=tuple(stride))


def conv(params: Params, name: str, x: Tensor) -> Tensor:
    return causal_conv3d(x, conv_layer(params, name))


def norm_act(x: Tensor, config: TokenizerConfig) -> Tensor:
    return ops.leaky_relu(group_norm(x, config.groups_for(x.shape[-1])), config.leaky_slope)


def res_block(params: Params, name: str, x: Tensor, config: TokenizerConfig) -> Tensor:
    """norm -> act -> conv, twice, plus the identity skip."""
    h = conv(params, f"{name}.conv1", norm_act(x, config))
    h = conv(params, f"{name}.conv2", norm_act(h, config))
    return ops.add(x, h)


def adaptive_norm(params: Params, name: str, x: Tensor, control: Tensor, config: TokenizerConfig) -> Tensor:
    return adaptive_group_norm(
        x,
        control,
        config.groups_for(x.shape[-1]),
        params[f"{name}.w_gamma"],
        params[f"{name}.w_beta"],
        params[f"{name}.b_gamma"],
        params[f"{name}.b_beta"],
    )


def downsample(params: Params, name: str, x: Tensor, stage: StageSpec) -> Tensor:
    """Strided causal conv; output frame ``t`` ends at input frame ``s * t``."""
    layer = conv_layer(params, name, stage.stride)
    if stage.temporal_stride > 1:
        return temporal_downsample(x, stage.temporal_stride, layer)
    return causal_conv3d(x, layer)


def upsample(params: Params, name: str, x: Tensor, stage: StageSpec) -> Tensor:
    """Causal frame repeat, conv to ``C * r**2`` channels, then depth-to-space."""
    x = temporal_upsample(x, stage.temporal_stride)
    x = conv(params, name, x)
    return depth_to_space(x, stage.spatial_stride)
