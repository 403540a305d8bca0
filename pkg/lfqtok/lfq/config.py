from __future__ import annotations

import math
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

CODE_VALUES: Tuple[float, float] = (-1.0, 1.0)


class LfqConfig(BaseModel):
    """Codebook of ``K = 2**D`` binary codes, one sign per latent dimension."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    codebook_size: int = Field(default=1024, ge=2)
    entropy_temperature: float = Field(default=1.0, gt=0.0)
    # dimensions per group for the batch-entropy term; None means all of D
    subgroup_size: Optional[int] = Field(default=None, ge=1)
    num_subspaces: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_invariants(self) -> "LfqConfig":
        k = self.codebook_size
        if k & (k - 1):
            raise ValueError(f"codebook_size must be a power of two, got {k}")
        d = self.dim
        if d % self.group_size:
            raise ValueError(f"subgroup_size {self.group_size} does not divide dim {d}")
        if d % self.num_subspaces:
            raise ValueError(f"num_subspaces {self.num_subspaces} does not divide dim {d}")
        return self

    @classmethod
    def from_dim(cls, dim: int, **kwargs) -> "LfqConfig":
        return cls(codebook_size=2 ** dim, **kwargs)

    @property
    def dim(self) -> int:
        return int(math.log2(self.codebook_size))

    @property
    def group_size(self) -> int:
        return self.subgroup_size or self.dim

    @property
    def subspace_dim(self) -> int:
        return self.dim // self.num_subspaces

    @property
    def code_values(self) -> Tuple[float, float]:
        return CODE_VALUES
