from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional

from ..errors import TrainingFault
from ..lfq import entropy_weight
from ..numerics import Tensor, as_tensor, ops
from ..tokenizer import ForwardPass, TokenizerModel
from .config import TrainConfig


@dataclass
class LossBreakdown:
    total: Tensor
    reconstruction: Tensor
    commitment: Tensor
    entropy: Tensor
    entropy_weight: float
    forward: Optional[ForwardPass] = None

    def values(self) -> Dict[str, float]:
        return {
            "total": self.total.item(),
            "reconstruction": self.reconstruction.item(),
            "commitment": self.commitment.item(),
            "entropy": self.entropy.item(),
            "entropy_weight": self.entropy_weight,
        }


def combine_losses(
    reconstruction: Tensor,
    commitment: Tensor,
    entropy: Tensor,
    config: TrainConfig,
    step: int,
) -> LossBreakdown:
    """Weighted sum; the entropy weight follows its annealing schedule."""
    w_entropy = entropy_weight(step, config.entropy_weight, config.entropy_anneal_steps, config.entropy_anneal_factor)
    total = ops.add(
        ops.add(ops.mul(reconstruction, config.reconstruction_weight), ops.mul(commitment, config.commitment_weight)),
        ops.mul(entropy, w_entropy),
    )
    breakdown = LossBreakdown(total, reconstruction, commitment, entropy, w_entropy)
    values = breakdown.values()
    for name in ("reconstruction", "commitment", "entropy", "total"):
        value = values[name]
        if not math.isfinite(value):
            raise TrainingFault(name, step, value)
    return breakdown


def total_loss(
    batch,
    model: TokenizerModel,
    step: int,
    config: TrainConfig,
    params: Optional[Mapping[str, Tensor]] = None,
) -> LossBreakdown:
    """Reconstruction MSE, commitment and annealed entropy penalty on one batch."""
    video = as_tensor(batch)
    fwd = model.forward(video, params)
    reconstruction = ops.mse(fwd.reconstruction, video)
    commitment = model.quantizer.commitment_loss(fwd.latents)
    entropy = model.quantizer.entropy_loss(fwd.latents)
    breakdown = combine_losses(reconstruction, commitment, entropy, config, step)
    breakdown.forward = fwd
    return breakdown
