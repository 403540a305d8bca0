"""Reconstruction quality on the ``[0, 1]`` pixel scale."""
from __future__ import annotations

import math
from typing import Dict, Union

import numpy as np

from ..errors import DimensionError
from ..numerics import Tensor

ArrayLike = Union[np.ndarray, Tensor]

INF_SENTINEL = "inf"


def _unit(x: ArrayLike) -> np.ndarray:
    values = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
    return (values + 1.0) / 2.0


def mse(reference: ArrayLike, test: ArrayLike) -> float:
    ref, tst = _unit(reference), _unit(test)
    if ref.shape != tst.shape:
        raise DimensionError(f"cannot compare videos of shape {ref.shape} and {tst.shape}")
    return float(np.mean((ref - tst) ** 2))


def psnr(reference: ArrayLike, test: ArrayLike) -> float:
    """``10 log10(1 / MSE)`` in dB; identical inputs give ``inf``."""
    err = mse(reference, test)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / err)


def quality_report(reference: ArrayLike, test: ArrayLike) -> Dict[str, float]:
    return {"mse": mse(reference, test), "psnr": psnr(reference, test)}


def format_value(value: float) -> str:
    return INF_SENTINEL if math.isinf(value) else f"{value:.6f}"
