"""Inflate an image model into a causal video model.

The 2D kernel goes into the temporally last slice of the 3D kernel. With
causal padding that slice lines up with the current frame, so on a single
frame the inflated model computes exactly what the image model did.
"""
from __future__ import annotations

from typing import Dict, Mapping

import numpy as np

from ..errors import DimensionError
from .model import TokenizerModel
from .params import ParameterRegistry


def inflate_2d_to_3d(weights: np.ndarray, kt: int) -> np.ndarray:
    """``[kh, kw, Cin, Cout]`` (or ``[1, kh, kw, Cin, Cout]``) -> ``[kt, kh, kw, Cin, Cout]``."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim == 5:
        if w.shape[0] != 1:
            raise DimensionError(f"only kt=1 kernels can be inflated, got {w.shape}")
        w = w[0]
    if w.ndim != 4:
        raise DimensionError(f"2D kernel must be [kh,kw,Cin,Cout], got {w.shape}")
    if kt < 1:
        raise DimensionError(f"temporal kernel size must be >= 1, got {kt}")
    out = np.zeros((kt,) + w.shape)
    out[-1] = w
    return out


def inflate_parameters(arrays: Mapping[str, np.ndarray], kt: int) -> Dict[str, np.ndarray]:
    return {
        name: inflate_2d_to_3d(value, kt) if name.endswith(".kernel") else np.array(value)
        for name, value in arrays.items()
    }


def inflate_model(image_model: TokenizerModel, kt: int) -> TokenizerModel:
    """Video model with ``temporal_kernel_size=kt`` built from a ``kt=1`` image model."""
    config = image_model.config
    if config.temporal_kernel_size != 1:
        raise DimensionError(
            f"image model must have temporal_kernel_size=1, got {config.temporal_kernel_size}"
        )
    video_config = config.model_copy(update={"temporal_kernel_size": kt})
    registry = ParameterRegistry()
    for name, value in inflate_parameters(image_model.params.arrays(), kt).items():
        registry.add(name, value)
    return TokenizerModel(video_config, registry)
