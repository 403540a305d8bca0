"""Adam with bias correction, warmup + cosine schedule, EMA and clipping.

Parameters, moments and gradients are ``name -> ndarray`` dicts; every
update returns new arrays and leaves its inputs alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Mapping, Tuple

import numpy as np

from ..errors import ConfigurationError, ContractError, DimensionError

Arrays = Dict[str, np.ndarray]


@dataclass
class AdamState:
    params: Arrays
    m: Arrays
    v: Arrays
    step: int = 0

    @classmethod
    def create(cls, params: Mapping[str, np.ndarray]) -> "AdamState":
        params = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
        return cls(
            params=params,
            m={k: np.zeros_like(v) for k, v in params.items()},
            v={k: np.zeros_like(v) for k, v in params.items()},
        )


def adam_step(
    state: AdamState,
    gradients: Mapping[str, np.ndarray],
    lr: float,
    beta1: float = 0.0,
    beta2: float = 0.99,
    eps: float = 1e-8,
) -> AdamState:
    missing = [name for name in state.params if name not in gradients]
    if missing:
        raise ContractError(f"No gradient for {len(missing)} parameter(s), e.g. '{missing[0]}'")
    t = state.step + 1
    params, m, v = {}, {}, {}
    for name, theta in state.params.items():
        g = np.asarray(gradients[name], dtype=np.float64)
        if g.shape != theta.shape:
            raise DimensionError(f"gradient for '{name}' has shape {g.shape}, parameter {theta.shape}")
        m[name] = beta1 * state.m[name] + (1.0 - beta1) * g
        v[name] = beta2 * state.v[name] + (1.0 - beta2) * g * g
        m_hat = m[name] / (1.0 - beta1 ** t)
        v_hat = v[name] / (1.0 - beta2 ** t)
        params[name] = theta - lr * m_hat / (np.sqrt(v_hat) + eps)
    return AdamState(params=params, m=m, v=v, step=t)


def lr_schedule(step: int, peak: float, warmup: int, total: int) -> float:
    """Linear warmup to ``peak`` then cosine decay to zero at ``total``."""
    if not 0 < warmup < total:
        raise ConfigurationError(f"need 0 < warmup < total, got warmup={warmup}, total={total}")
    step = min(max(step, 0), total)
    if step < warmup:
        return peak * step / warmup
    progress = (step - warmup) / (total - warmup)
    return peak * 0.5 * (1.0 + math.cos(math.pi * progress))


def ema_update(shadow: Mapping[str, np.ndarray], params: Mapping[str, np.ndarray], decay: float) -> Arrays:
    out = {}
    for name, s in shadow.items():
        p = params[name]
        if np.shape(p) != np.shape(s):
            raise DimensionError(f"EMA shadow '{name}' has shape {np.shape(s)}, parameter {np.shape(p)}")
        out[name] = decay * s + (1.0 - decay) * p
    return out


def global_norm(gradients: Mapping[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in gradients.values()))


def clip_by_global_norm(gradients: Mapping[str, np.ndarray], max_norm: float) -> Tuple[Arrays, float]:
    """Scale all gradients together so their joint L2 norm is at most ``max_norm``."""
    norm = global_norm(gradients)
    if norm <= max_norm or norm == 0.0:
        return dict(gradients), norm
    scale = max_norm / norm
    return {name: g * scale for name, g in gradients.items()}, norm
