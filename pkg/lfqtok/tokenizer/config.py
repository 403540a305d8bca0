from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import ShapeError
from ..lfq import LfqConfig
from ..utils.helpers import largest_divisor_at_most, prod


@dataclass(frozen=True)
class StageSpec:
    """One encoder resolution stage and the downsampler that closes it."""

    index: int
    channels: int
    out_channels: int
    temporal_stride: int
    spatial_stride: int

    @property
    def downsamples(self) -> bool:
        return self.temporal_stride > 1 or self.spatial_stride > 1

    @property
    def stride(self) -> Tuple[int, int, int]:
        return (self.temporal_stride, self.spatial_stride, self.spatial_stride)


class TokenizerConfig(BaseModel):
    """Causal 3D CNN encoder/decoder around a lookup-free bottleneck.

    Stage ``i`` runs ``num_res_blocks`` residual blocks at
    ``base_channels * channel_multipliers[i]`` and is closed by a strided
    causal conv when ``spatial_strides[i]`` or ``temporal_strides[i]`` is
    above 1. Temporal strides may only sit on the last downsampling stages.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    in_channels: int = Field(default=3, ge=1)
    base_channels: int = Field(default=16, ge=1)
    channel_multipliers: Tuple[int, ...] = (1, 2, 4)
    num_res_blocks: int = Field(default=1, ge=0)
    spatial_strides: Tuple[int, ...] = (2, 2, 2)
    temporal_strides: Tuple[int, ...] = (1, 2, 2)
    temporal_kernel_size: int = Field(default=3, ge=1)
    spatial_kernel_size: int = Field(default=3, ge=1)
    norm_groups: int = Field(default=8, ge=1)
    leaky_slope: float = Field(default=0.2, ge=0.0)
    # scale on the last encoder conv so initial latents straddle zero
    output_init_scale: float = Field(default=0.1, gt=0.0)
    seed: int = 0
    lfq: LfqConfig = Field(default_factory=lambda: LfqConfig(codebook_size=1024, num_subspaces=2))

    @model_validator(mode="after")
    def _check_stages(self) -> "TokenizerConfig":
        n = len(self.channel_multipliers)
        if n == 0:
            raise ValueError("channel_multipliers needs at least one stage")
        if len(self.spatial_strides) != n or len(self.temporal_strides) != n:
            raise ValueError(
                f"{n} stages need {n} spatial and temporal strides, got "
                f"{len(self.spatial_strides)} and {len(self.temporal_strides)}"
            )
        if min(self.channel_multipliers) < 1:
            raise ValueError(f"channel multipliers must be >= 1, got {self.channel_multipliers}")
        if min(self.spatial_strides + self.temporal_strides) < 1:
            raise ValueError("strides must be >= 1")

        # deferred temporal downsampling: once a stage strides in time, every
        # later downsampling stage does too
        seen_temporal = False
        for i, (st, ss) in enumerate(zip(self.temporal_strides, self.spatial_strides)):
            if st > 1:
                seen_temporal = True
            elif seen_temporal and ss > 1:
                raise ValueError(
                    f"stage {i} downsamples spatially after temporal downsampling started; "
                    "temporal strides must sit on the last downsampling stages"
                )
        return self

    # ──────────────────────────────────────────────────────────────────────
    # presets
    # ──────────────────────────────────────────────────────────────────────

    @classmethod
    def toy(cls, **overrides) -> "TokenizerConfig":
        """17x32x32 -> 5x4x4 latents with K = 2**10; trains on a CPU."""
        return cls(**overrides)

    @classmethod
    def full_size(cls, **overrides) -> "TokenizerConfig":
        """Full-size hyper-parameters: 17x128x128 -> 5x16x16, K = 2**18."""
        values = dict(
            base_channels=128,
            channel_multipliers=(1, 2, 2, 4),
            num_res_blocks=4,
            spatial_strides=(2, 2, 2, 1),
            temporal_strides=(1, 2, 2, 1),
            norm_groups=32,
            lfq=LfqConfig(codebook_size=2 ** 18, subgroup_size=9, num_subspaces=2),
        )
        values.update(overrides)
        return cls(**values)

    # ──────────────────────────────────────────────────────────────────────
    # derived shapes
    # ──────────────────────────────────────────────────────────────────────

    @property
    def latent_dim(self) -> int:
        return self.lfq.dim

    @property
    def spatial_factor(self) -> int:
        return prod(self.spatial_strides)

    @property
    def temporal_factor(self) -> int:
        return prod(self.temporal_strides)

    @property
    def stage_channels(self) -> Tuple[int, ...]:
        return tuple(self.base_channels * m for m in self.channel_multipliers)

    def stages(self) -> List[StageSpec]:
        chans = self.stage_channels
        specs = []
        for i, c in enumerate(chans):
            out = chans[i + 1] if i + 1 < len(chans) else c
            specs.append(StageSpec(i, c, out, self.temporal_strides[i], self.spatial_strides[i]))
        return specs

    def groups_for(self, channels: int) -> int:
        return largest_divisor_at_most(channels, self.norm_groups)

    def latent_shape(self, frames: int, height: int, width: int) -> Tuple[int, int, int]:
        """``(T', H', W')`` for an input clip, or a ShapeError naming the axis."""
        s = self.temporal_factor
        if frames < 1 or (frames - 1) % s:
            raise ShapeError(
                f"frame count T={frames} violates (T - 1) mod {s} == 0", axis="T"
            )
        f = self.spatial_factor
        for name, extent in (("H", height), ("W", width)):
            if extent < 1 or extent % f:
                raise ShapeError(f"{name}={extent} is not divisible by the spatial factor {f}", axis=name)
        return 1 + (frames - 1) // s, height // f, width // f

    def video_shape(self, frames: int, height: int, width: int) -> Tuple[int, int, int]:
        """Inverse of :meth:`latent_shape`."""
        if min(frames, height, width) < 1:
            raise ShapeError(f"latent grid {frames}x{height}x{width} has an empty axis")
        f = self.spatial_factor
        return 1 + self.temporal_factor * (frames - 1), height * f, width * f
