"""Group normalization with statistics per frame, and its adaptive variant.

Statistics are taken over (H, W, channels-in-group) separately for every
frame, so normalization never mixes time steps and stacks stay causal.
"""
from __future__ import annotations

from typing import Optional

from ..errors import ShapeError
from ..numerics import Tensor, ops
from .causal import temporal_upsample, time_axis

EPS = 1e-5


def _as_batched(x: Tensor) -> Tensor:
    return x if x.ndim == 5 else ops.reshape(x, (1,) + x.shape)


def group_norm(x: Tensor, groups: int, eps: float = EPS) -> Tensor:
    time_axis(x)
    channels = x.shape[-1]
    if groups < 1 or channels % groups:
        raise ShapeError(f"{channels} channels are not divisible into {groups} groups", axis="C")
    xb = _as_batched(x)
    n, t, h, w, c = xb.shape
    grouped = ops.reshape(xb, (n * t, h * w, groups, c // groups))
    return ops.reshape(ops.standardize(grouped, axis=(1, 3), eps=eps), x.shape)


def resize_control(control: Tensor, target: Tensor) -> Tensor:
    """Nearest-resize ``control`` to the (T, H, W) of ``target``.

    Time uses the causal upsampling map (repeat then drop the leading
    frames), so frame ``t`` of the result comes from a control frame ``<= t``.
    """
    c_axis, t_axis = time_axis(control), time_axis(target)
    if control.ndim != target.ndim:
        raise ShapeError(f"control {control.shape} and target {target.shape} differ in rank")
    if control.ndim == 5 and control.shape[0] != target.shape[0]:
        raise ShapeError(f"control batch {control.shape[0]} != target batch {target.shape[0]}", axis="N")
    ct, ch, cw = control.shape[c_axis:c_axis + 3]
    tt, th, tw = target.shape[t_axis:t_axis + 3]

    out = control
    if tt != ct:
        if ct < 1 or (tt - 1) % max(ct - 1, 1) or (ct == 1 and tt != 1):
            raise ShapeError(f"control frames {ct} cannot be causally resized to {tt}", axis="T")
        out = temporal_upsample(out, (tt - 1) // (ct - 1))
    for offset, (src, dst, name) in enumerate(((ch, th, "H"), (cw, tw, "W")), start=1):
        if dst == src:
            continue
        if dst % src:
            raise ShapeError(f"control {name}={src} does not divide target {name}={dst}", axis=name)
        out = ops.repeat(out, dst // src, axis=c_axis + offset)
    return out


def adaptive_group_norm(
    x: Tensor,
    control: Tensor,
    groups: int,
    w_gamma: Tensor,
    w_beta: Tensor,
    b_gamma: Optional[Tensor] = None,
    b_beta: Optional[Tensor] = None,
    eps: float = EPS,
) -> Tensor:
    """``GN(x) * (1 + gamma(control)) + beta(control)`` with linear gamma and beta."""
    normed = group_norm(x, groups, eps)
    resized = resize_control(control, x)
    gamma = ops.affine(resized, w_gamma, b_gamma)
    beta = ops.affine(resized, w_beta, b_beta)
    return ops.add(ops.mul(normed, ops.add(gamma, 1.0)), beta)
