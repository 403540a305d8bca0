"""Entropy and commitment penalties for the lookup-free quantizer.

Code probabilities are soft: a softmax over the two codes with score
``-(z - c)**2 / (2 * tau)`` collapses to ``sigmoid(2 * z / tau)`` per dimension.
Entropies are in nats.
"""
from __future__ import annotations

from typing import Tuple

from ..errors import ConfigurationError, DimensionError
from ..numerics import Tensor, ops
from .quantizer import hard_codes


def soft_code_probabilities(z: Tensor, temperature: float = 1.0) -> Tensor:
    """P(code_i = +1) for every latent entry."""
    if temperature <= 0:
        raise ConfigurationError(f"entropy temperature must be > 0, got {temperature}")
    return ops.sigmoid(ops.mul(z, 2.0 / temperature))


def binary_entropy(p: Tensor) -> Tensor:
    return ops.mul(ops.add(ops.xlogx(p), ops.xlogx(ops.sub(1.0, p))), -1.0)


def _joint_code_probabilities(p: Tensor) -> Tensor:
    """[N, g] per-dimension probabilities -> [N, 2**g] joint code probabilities.

    Joint probabilities are products of per-dimension ones; code ``c`` has bit
    ``j`` set when dimension ``j`` is +1 (first dimension least significant).
    """
    n, g = p.shape
    joint = None
    for j in range(g):
        pj = ops.slice_tensor(p, (slice(None), slice(j, j + 1)))
        pair = ops.concat([ops.sub(1.0, pj), pj], axis=1)  # [N, 2]: (-1, +1)
        if joint is None:
            joint = pair
            continue
        width = joint.shape[1]
        hi = ops.broadcast_to(ops.reshape(pair, (n, 2, 1)), (n, 2, width))
        lo = ops.broadcast_to(ops.reshape(joint, (n, 1, width)), (n, 2, width))
        joint = ops.reshape(ops.mul(hi, lo), (n, 2 * width))
    return joint


def entropy_terms(p: Tensor, subgroup_size: int) -> Tuple[Tensor, Tensor]:
    """(mean per-sample entropy, entropy of the batch-averaged code distribution).

    ``p`` is ``[N, D]``. The second term sums the entropies of ``D / g``
    disjoint groups of ``g`` dimensions; with ``g == D`` it is exact under the
    per-dimension product model.
    """
    if p.ndim != 2:
        raise DimensionError(f"entropy needs [N, D] probabilities, got {p.shape}")
    n, d = p.shape
    if subgroup_size < 1 or d % subgroup_size:
        raise ConfigurationError(f"subgroup_size {subgroup_size} does not divide code dimension {d}")

    sample_entropy = ops.reduce_mean(ops.reduce_sum(binary_entropy(p), axis=1))

    batch_entropy = None
    for start in range(0, d, subgroup_size):
        group = ops.slice_tensor(p, (slice(None), slice(start, start + subgroup_size)))
        avg = ops.reduce_mean(_joint_code_probabilities(group), axis=0)
        h = ops.mul(ops.reduce_sum(ops.xlogx(avg)), -1.0)
        batch_entropy = h if batch_entropy is None else ops.add(batch_entropy, h)
    return sample_entropy, batch_entropy


def entropy_loss_from_probabilities(p: Tensor, subgroup_size: int) -> Tensor:
    sample_entropy, batch_entropy = entropy_terms(p, subgroup_size)
    return ops.sub(sample_entropy, batch_entropy)


def entropy_loss(z_batch: Tensor, temperature: float = 1.0, subgroup_size: int = None) -> Tensor:
    """``E[H(q(z))] - H[E(q(z))]`` over a batch ``[N, D]`` of latents."""
    if z_batch.ndim != 2:
        raise DimensionError(f"entropy_loss needs [N, D] latents, got {z_batch.shape}")
    subgroup_size = subgroup_size or z_batch.shape[1]
    return entropy_loss_from_probabilities(soft_code_probabilities(z_batch, temperature), subgroup_size)


def commitment_loss(z: Tensor) -> Tensor:
    """Mean squared distance from ``z`` to its (stopped) hard code."""
    target = Tensor(hard_codes(z))
    return ops.mse(z, target)


def entropy_weight(step: int, base_weight: float, anneal_steps: int, anneal_factor: float) -> float:
    """Linear decay from ``anneal_factor * base_weight`` at step 0 to ``base_weight``."""
    if anneal_steps <= 0:
        raise ConfigurationError(f"anneal_steps must be > 0, got {anneal_steps}")
    if step < 0:
        raise ConfigurationError(f"step must be >= 0, got {step}")
    if step >= anneal_steps:
        return float(base_weight)
    frac = step / anneal_steps
    return float(base_weight * (anneal_factor + (1.0 - anneal_factor) * frac))
