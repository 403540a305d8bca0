"""Joint image-video tokenizer: causal 3D CNN encoder, LFQ bottleneck, decoder.

Videos are ``[T, H, W, 3]`` (or ``[N, T, H, W, 3]``) in ``[-1, 1]``. A
single image is the ``T = 1`` case and tokenizes exactly like the first
frame of any video that starts with it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Tuple, Union

import numpy as np

from ..errors import DimensionError, DomainError, ShapeError
from ..lfq import LookupFreeQuantizer, TokenGrid
from ..numerics import Tensor, as_tensor
from . import blocks
from .config import TokenizerConfig
from .params import ParameterRegistry, init_parameters

VideoLike = Union[Tensor, np.ndarray]
Params = Mapping[str, Tensor]


@dataclass
class ForwardPass:
    latents: Tensor
    codes: Tensor
    reconstruction: Tensor


class TokenizerModel:
    def __init__(self, config: Optional[TokenizerConfig] = None, params: Optional[ParameterRegistry] = None):
        self.config = config or TokenizerConfig.toy()
        self.params = params if params is not None else init_parameters(self.config)
        self.quantizer = LookupFreeQuantizer(self.config.lfq)

    def with_parameters(self, arrays: Mapping[str, np.ndarray]) -> "TokenizerModel":
        return TokenizerModel(self.config, self.params.replaced(arrays))

    def __repr__(self) -> str:
        return f"TokenizerModel(params={len(self.params)}, elements={self.params.num_elements})"

    # ──────────────────────────────────────────────────────────────────────
    # shape checks
    # ──────────────────────────────────────────────────────────────────────

    def check_video(self, video: Tensor) -> Tuple[int, int, int]:
        if video.ndim not in (4, 5):
            raise DimensionError(f"video must be [T,H,W,C] or [N,T,H,W,C], got {video.shape}")
        if video.shape[-1] != self.config.in_channels:
            raise DimensionError(f"video has {video.shape[-1]} channels, expected {self.config.in_channels}")
        lo, hi = float(video.data.min()), float(video.data.max())
        if lo < -1.0 or hi > 1.0:
            raise DomainError(f"pixel values must lie in [-1, 1], got [{lo:.4g}, {hi:.4g}]")
        t, h, w = video.shape[-4:-1]
        return self.config.latent_shape(t, h, w)

    # ──────────────────────────────────────────────────────────────────────
    # forward
    # ──────────────────────────────────────────────────────────────────────

    def encode_latents(self, video: VideoLike, params: Optional[Params] = None) -> Tensor:
        p = self.params if params is None else params
        cfg = self.config
        x = as_tensor(video)
        self.check_video(x)

        x = blocks.conv(p, "encoder.conv_in", x)
        for stage in cfg.stages():
            for j in range(cfg.num_res_blocks):
                x = blocks.res_block(p, f"encoder.stage{stage.index}.res{j}", x, cfg)
            if stage.downsamples:
                x = blocks.downsample(p, f"encoder.stage{stage.index}.down", x, stage)
        for j in range(cfg.num_res_blocks):
            x = blocks.res_block(p, f"encoder.mid.res{j}", x, cfg)
        return blocks.conv(p, "encoder.conv_out", blocks.norm_act(x, cfg))

    def decode_codes(self, codes: Tensor, params: Optional[Params] = None) -> Tensor:
        """Decoder on ``[.., T', H', W', D]`` codes; the codes also drive every adaptive norm."""
        p = self.params if params is None else params
        cfg = self.config
        if codes.ndim not in (4, 5) or codes.shape[-1] != cfg.latent_dim:
            raise DimensionError(f"codes must be [..,T',H',W',{cfg.latent_dim}], got {codes.shape}")

        x = blocks.conv(p, "decoder.conv_in", codes)
        x = blocks.adaptive_norm(p, "decoder.mid.adanorm", x, codes, cfg)
        for j in range(cfg.num_res_blocks):
            x = blocks.res_block(p, f"decoder.mid.res{j}", x, cfg)
        for stage in reversed(cfg.stages()):
            if stage.downsamples:
                x = blocks.upsample(p, f"decoder.stage{stage.index}.up", x, stage)
            x = blocks.adaptive_norm(p, f"decoder.stage{stage.index}.adanorm", x, codes, cfg)
            for j in range(cfg.num_res_blocks):
                x = blocks.res_block(p, f"decoder.stage{stage.index}.res{j}", x, cfg)
        return blocks.conv(p, "decoder.conv_out", blocks.norm_act(x, cfg))

    def forward(self, video: VideoLike, params: Optional[Params] = None, quantize: bool = True) -> ForwardPass:
        """Encode, quantize (straight-through) and decode.

        ``quantize=False`` feeds the raw latents to the decoder, which keeps
        the whole path smooth for finite-difference checks.
        """
        latents = self.encode_latents(video, params)
        codes = self.quantizer.quantize(latents) if quantize else latents
        return ForwardPass(latents, codes, self.decode_codes(codes, params))

    def reconstruct(self, video: VideoLike, params: Optional[Params] = None, quantize: bool = True) -> Tensor:
        return self.forward(video, params, quantize).reconstruction

    # ──────────────────────────────────────────────────────────────────────
    # tokens
    # ──────────────────────────────────────────────────────────────────────

    def encode(self, video: VideoLike) -> Tuple[TokenGrid, Tensor]:
        latents = self.encode_latents(video)
        return self.quantizer.tokens(latents), latents

    def decode(self, tokens: TokenGrid) -> Tensor:
        if tokens.codebook_size != self.config.lfq.codebook_size:
            raise ShapeError(
                f"token grid uses K={tokens.codebook_size}, model expects K={self.config.lfq.codebook_size}",
                axis="D",
            )
        if len(tokens.shape) not in (3, 4):
            raise ShapeError(f"token grid must be [T',H',W'] or [N,T',H',W'], got {tokens.shape}")
        return self.decode_codes(self.quantizer.codes(tokens))


def encode(video: VideoLike, model: TokenizerModel) -> Tuple[TokenGrid, Tensor]:
    return model.encode(video)


def decode(tokens: TokenGrid, model: TokenizerModel) -> Tensor:
    return model.decode(tokens)
