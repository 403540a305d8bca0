"""Split a D-bit token into equal sub-tokens over smaller codebooks.

Sub-index ``j`` holds bits ``[j*D/m, (j+1)*D/m)``; subspace 0 is the least
significant group. A prediction head embeds each sub-token with its own
table, sums the embeddings, and reuses the same tables for the logits.
"""
from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np

from ..errors import ConfigurationError, DimensionError, DomainError
from ..numerics import Tensor, ops


def _subspace_bits(codebook_size: int, num_subspaces: int) -> int:
    if codebook_size < 2 or codebook_size & (codebook_size - 1):
        raise ConfigurationError(f"codebook size must be a power of two, got {codebook_size}")
    dim = codebook_size.bit_length() - 1
    if num_subspaces < 1 or dim % num_subspaces:
        raise ConfigurationError(f"{num_subspaces} subspaces do not divide code dimension {dim}")
    return dim // num_subspaces


def factorize_index(index: int, codebook_size: int, num_subspaces: int) -> Tuple[int, ...]:
    bits = _subspace_bits(codebook_size, num_subspaces)
    index = int(index)
    if not 0 <= index < codebook_size:
        raise DomainError(f"token index {index} outside [0, {codebook_size})")
    mask = (1 << bits) - 1
    return tuple((index >> (j * bits)) & mask for j in range(num_subspaces))


def defactorize_index(sub_indices: Sequence[int], codebook_size: int) -> int:
    num_subspaces = len(sub_indices)
    bits = _subspace_bits(codebook_size, num_subspaces)
    index = 0
    for j, sub in enumerate(sub_indices):
        sub = int(sub)
        if not 0 <= sub < (1 << bits):
            raise DomainError(f"sub-index {sub} of subspace {j} outside [0, {1 << bits})")
        index |= sub << (j * bits)
    return index


def factorize_indices(indices: np.ndarray, codebook_size: int, num_subspaces: int) -> List[np.ndarray]:
    """Vectorised :func:`factorize_index` over an index array."""
    bits = _subspace_bits(codebook_size, num_subspaces)
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= codebook_size):
        raise DomainError(f"token index outside [0, {codebook_size})")
    mask = (1 << bits) - 1
    return [(idx >> (j * bits)) & mask for j in range(num_subspaces)]


def factorized_head(
    sub_indices: Sequence,
    tables: Sequence[Tensor],
    features: Tensor,
) -> Tuple[Tensor, List[Tensor]]:
    """Summed sub-token embeddings and weight-tied logits per subspace.

    ``tables[j]`` is ``[K_sub, width]``; ``features`` is ``[..., width]``.
    Returns the input embedding (``[..., width]`` matching the sub-index
    shape) and one logits tensor ``[..., K_sub]`` per subspace.
    """
    if len(sub_indices) != len(tables) or not tables:
        raise DimensionError(f"{len(sub_indices)} sub-indices for {len(tables)} tables")
    width = tables[0].shape[-1]
    for j, table in enumerate(tables):
        if table.ndim != 2 or table.shape[1] != width:
            raise DimensionError(f"table {j} has shape {table.shape}, expected [K_sub, {width}]")
    if features.shape[-1] != width:
        raise DimensionError(f"features width {features.shape[-1]} does not match tables width {width}")

    embedding = None
    for sub, table in zip(sub_indices, tables):
        rows = ops.gather_rows(table, sub)
        embedding = rows if embedding is None else ops.add(embedding, rows)
    logits = [ops.matmul(features, ops.transpose(table, (1, 0))) for table in tables]
    return embedding, logits
