"""Training hyper-parameters and their flat YAML file format.

A config file is a flat mapping; nested settings use dotted keys::

    steps: 500
    batch_size: 8
    tokenizer.base_channels: 16
    tokenizer.lfq.codebook_size: 1024
"""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import ConfigurationError
from ..tokenizer import TokenizerConfig
from ..utils.helpers import flatten_keys, unflatten_keys

PathLike = Union[str, Path]


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    steps: int = Field(default=500, ge=1)
    batch_size: int = Field(default=8, ge=1)
    peak_lr: float = Field(default=1e-3, gt=0.0)
    warmup_steps: int = Field(default=50, ge=1)

    reconstruction_weight: float = Field(default=5.0, ge=0.0)
    commitment_weight: float = Field(default=0.25, ge=0.0)
    entropy_weight: float = Field(default=0.1, ge=0.0)
    entropy_anneal_factor: float = Field(default=3.0, ge=0.0)
    entropy_anneal_steps: int = Field(default=200, ge=1)

    adam_beta1: float = Field(default=0.0, ge=0.0, lt=1.0)
    adam_beta2: float = Field(default=0.99, ge=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-8, gt=0.0)
    ema_decay: float = Field(default=0.999, ge=0.0, lt=1.0)
    # None disables clipping
    grad_clip: Optional[float] = Field(default=1.0, gt=0.0)

    seed: int = 0
    clip_frames: int = Field(default=17, ge=1)
    clip_height: int = Field(default=32, ge=1)
    clip_width: int = Field(default=32, ge=1)
    # clips in the synthetic pool; ignored when data_dir is set
    synthetic_clips: int = Field(default=4096, ge=1)
    data_dir: Optional[str] = None
    prefetch: int = Field(default=2, ge=0)
    log_every: int = Field(default=10, ge=1)

    tokenizer: TokenizerConfig = Field(default_factory=TokenizerConfig.toy)

    @model_validator(mode="after")
    def _check(self) -> "TrainConfig":
        if not self.warmup_steps < self.steps:
            raise ValueError(f"warmup_steps ({self.warmup_steps}) must be < steps ({self.steps})")
        self.tokenizer.latent_shape(*self.clip_shape)
        return self

    @property
    def clip_shape(self) -> Tuple[int, int, int]:
        return self.clip_frames, self.clip_height, self.clip_width


def parse_train_config(text: str) -> TrainConfig:
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"training config must be a mapping, got {type(data).__name__}")
    try:
        nested = unflatten_keys(data)
    except ValueError as e:
        raise ConfigurationError(str(e)) from e
    return TrainConfig.model_validate(nested)


def load_train_config(path: PathLike) -> TrainConfig:
    return parse_train_config(Path(path).read_text(encoding="utf-8"))


def dump_train_config(config: TrainConfig, path: Optional[PathLike] = None) -> str:
    flat = flatten_keys(config.model_dump(mode="json"))
    text = yaml.safe_dump(flat, sort_keys=False)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
