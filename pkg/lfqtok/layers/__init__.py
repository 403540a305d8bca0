from .causal import (
    CausalConv3dLayer,
    FrameMap,
    causal_conv3d,
    causal_pair,
    regular_pair,
    temporal_downsample,
    temporal_upsample,
    time_axis,
)
from .resample import binomial_filter, blur_pool3d, depth_to_space, space_to_depth, strided_subsample
from .norm import adaptive_group_norm, group_norm, resize_control

__all__ = [
    "CausalConv3dLayer", "FrameMap", "causal_conv3d", "causal_pair", "regular_pair",
    "temporal_downsample", "temporal_upsample", "time_axis",
    "binomial_filter", "blur_pool3d", "depth_to_space", "space_to_depth", "strided_subsample",
    "adaptive_group_norm", "group_norm", "resize_control",
]
