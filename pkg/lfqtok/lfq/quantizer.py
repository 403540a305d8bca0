"""Lookup-free quantization: each latent dimension snaps to -1 or +1.

The token index of a code is its bit pattern, dimension ``i`` (0-based)
contributing ``2**i`` when positive, so no codebook table is ever stored.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Union

import numpy as np

from ..errors import DimensionError, DomainError
from ..numerics import Tensor, ops
from .config import LfqConfig

ArrayLike = Union[Tensor, np.ndarray]


@dataclass(frozen=True)
class TokenGrid:
    """Integer token indices (``T' x H' x W'``, optionally batched) and their codebook size."""

    indices: np.ndarray
    codebook_size: int

    def __post_init__(self):
        idx = np.asarray(self.indices)
        if not np.issubdtype(idx.dtype, np.integer):
            raise DomainError(f"token indices must be integers, got {idx.dtype}")
        idx = idx.astype(np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.codebook_size):
            raise DomainError(
                f"token index out of range [0, {self.codebook_size}): "
                f"min={int(idx.min())}, max={int(idx.max())}"
            )
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def shape(self):
        return self.indices.shape

    @property
    def dim(self) -> int:
        return int(self.codebook_size).bit_length() - 1

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TokenGrid)
            and self.codebook_size == other.codebook_size
            and self.indices.shape == other.indices.shape
            and bool(np.array_equal(self.indices, other.indices))
        )

    def __hash__(self):
        return hash((self.codebook_size, self.indices.shape, self.indices.tobytes()))


def _values(z: ArrayLike) -> np.ndarray:
    return z.data if isinstance(z, Tensor) else np.asarray(z, dtype=np.float64)


def _check_dim(z: ArrayLike, dim: Optional[int]) -> int:
    shape = _values(z).shape
    if not shape:
        raise DimensionError("latent needs a trailing code axis")
    if dim is not None and shape[-1] != dim:
        raise DimensionError(f"last axis has extent {shape[-1]}, expected code dimension {dim}")
    return shape[-1]


def hard_codes(z: ArrayLike) -> np.ndarray:
    """``-1`` where ``z <= 0`` else ``+1``; zero goes to the negative code."""
    return np.where(_values(z) > 0, 1.0, -1.0)


def quantize(z: Tensor, dim: Optional[int] = None) -> Tensor:
    """Sign quantization with a straight-through gradient (dL/dz = dL/dq)."""
    _check_dim(z, dim)
    return ops.straight_through(z, hard_codes(z))


def token_index(z: ArrayLike, dim: Optional[int] = None) -> TokenGrid:
    d = _check_dim(z, dim)
    bits = (_values(z) > 0).astype(np.int64)
    weights = np.left_shift(np.int64(1), np.arange(d, dtype=np.int64))
    return TokenGrid(indices=bits @ weights, codebook_size=2 ** d)


def literal_token_index(z: ArrayLike) -> np.ndarray:
    """Token index via per-dimension nearest code and a mixed-radix basis.

    ``sum_i argmin_k |z_i - C_ik| * prod_{b<i} |C_b|`` with ``C_i = (-1, +1)``;
    kept as an independent oracle for :func:`token_index`.
    """
    values = _values(z)
    codes = np.array([-1.0, 1.0])
    flat = values.reshape(-1, values.shape[-1])
    out = np.zeros(flat.shape[0], dtype=np.int64)
    for row, vec in enumerate(flat):
        basis = 1  # |C_0| = 1
        total = 0
        for zi in vec:
            k = int(np.argmin(np.abs(zi - codes)))
            total += k * basis
            basis *= len(codes)
        out[row] = total
    return out.reshape(values.shape[:-1])


def index_to_codes(index: int, dim: int) -> np.ndarray:
    index = int(index)
    if not 0 <= index < 2 ** dim:
        raise DomainError(f"token index {index} outside [0, {2 ** dim})")
    bits = (index >> np.arange(dim)) & 1
    return np.where(bits == 1, 1.0, -1.0)


def indices_to_codes(indices, dim: int) -> np.ndarray:
    idx = np.asarray(indices.indices if isinstance(indices, TokenGrid) else indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= 2 ** dim):
        raise DomainError(f"token index outside [0, {2 ** dim})")
    bits = (idx[..., None] >> np.arange(dim, dtype=np.int64)) & 1
    return np.where(bits == 1, 1.0, -1.0)


def codebook_usage(grid: TokenGrid) -> Dict[str, float]:
    """Distinct-token count and usage perplexity (in [1, K]) of a grid."""
    _, counts = np.unique(grid.indices.reshape(-1), return_counts=True)
    probs = counts / counts.sum()
    entropy = float(-(probs * np.log(probs)).sum())
    return {
        "distinct": int(counts.size),
        "perplexity": float(np.exp(entropy)),
        "usage": float(counts.size / grid.codebook_size),
    }


class LookupFreeQuantizer:
    """Quantizer bound to one :class:`LfqConfig`."""

    def __init__(self, config: LfqConfig):
        self.config = config

    @property
    def dim(self) -> int:
        return self.config.dim

    def quantize(self, z: Tensor) -> Tensor:
        return quantize(z, self.dim)

    def tokens(self, z: ArrayLike) -> TokenGrid:
        return token_index(z, self.dim)

    def codes(self, tokens: TokenGrid) -> Tensor:
        if tokens.codebook_size != self.config.codebook_size:
            raise DimensionError(
                f"token grid codebook {tokens.codebook_size} does not match quantizer {self.config.codebook_size}"
            )
        return Tensor(indices_to_codes(tokens, self.dim))

    def entropy_loss(self, z: Tensor) -> Tensor:
        from .losses import entropy_loss

        flat = ops.reshape(z, (-1, self.dim))
        return entropy_loss(flat, self.config.entropy_temperature, self.config.group_size)

    def commitment_loss(self, z: Tensor) -> Tensor:
        from .losses import commitment_loss

        return commitment_loss(z)
