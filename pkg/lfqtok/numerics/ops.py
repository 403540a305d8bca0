"""Differentiable ops over :class:`Tensor`.

Binary ops accept two tensors of identical shape, or a tensor and a scalar
(python number or shape-``()`` tensor). Anything else is a DimensionError;
callers broadcast explicitly with :func:`broadcast_to` or :func:`repeat`.

Spatial ops take channels-last layouts ``[T, H, W, C]`` with an optional
leading batch axis ``N``.
"""
from __future__ import annotations

import itertools
from typing import Optional, Sequence, Tuple, Union

import einops
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DimensionError, DomainError
from .tensor import Tensor, as_tensor, record

Scalar = Union[int, float]
Operand = Union[Tensor, Scalar]
Pads = Sequence[Tuple[int, int]]

# elements; larger conv3d unfoldings are split along output frames
IM2COL_BUDGET = 1 << 23


def _operand(x: Operand) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(float(x))


def _is_scalar(t: Tensor) -> bool:
    return t.ndim == 0


def _check_binary(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape and not (_is_scalar(a) or _is_scalar(b)):
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} differ and neither is a scalar")


def _reduce_to(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    return np.asarray(g.sum()).reshape(shape)


# ──────────────────────────────────────────────────────────────────────────────
# ELEMENTWISE
# ──────────────────────────────────────────────────────────────────────────────

def add(a: Operand, b: Operand) -> Tensor:
    a, b = _operand(a), _operand(b)
    _check_binary("add", a, b)
    out = Tensor._wrap(a.data + b.data)

    def vjp(g):
        return _reduce_to(g, a.shape), _reduce_to(g, b.shape)

    return record("add", (a, b), out, vjp)


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = _operand(a), _operand(b)
    _check_binary("sub", a, b)
    out = Tensor._wrap(a.data - b.data)

    def vjp(g):
        return _reduce_to(g, a.shape), _reduce_to(-g, b.shape)

    return record("sub", (a, b), out, vjp)


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = _operand(a), _operand(b)
    _check_binary("mul", a, b)
    out = Tensor._wrap(a.data * b.data)

    def vjp(g):
        return _reduce_to(g * b.data, a.shape), _reduce_to(g * a.data, b.shape)

    return record("mul", (a, b), out, vjp)


def affine(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """Dense map along the last axis: ``x @ weight + bias``."""
    if weight.ndim != 2 or x.shape[-1] != weight.shape[0]:
        raise DimensionError(f"affine: input {x.shape} does not contract with weight {weight.shape}")
    if bias is not None and bias.shape != (weight.shape[1],):
        raise DimensionError(f"affine: bias {bias.shape} does not match weight {weight.shape}")
    value = x.data @ weight.data
    if bias is not None:
        value = value + bias.data
    out = Tensor._wrap(value)
    inputs = (x, weight) if bias is None else (x, weight, bias)

    def vjp(g):
        k, m = weight.shape
        gx = g @ weight.data.T
        gw = x.data.reshape(-1, k).T @ g.reshape(-1, m)
        if bias is None:
            return gx, gw
        return gx, gw, g.reshape(-1, m).sum(axis=0)

    return record("affine", inputs, out, vjp)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return affine(a, b)


def channel_affine(x: Tensor, scale: Optional[Tensor] = None, shift: Optional[Tensor] = None) -> Tensor:
    """Per-channel ``x * scale + shift`` with vectors over the last axis."""
    c = x.shape[-1]
    for label, v in (("scale", scale), ("shift", shift)):
        if v is not None and v.shape != (c,):
            raise DimensionError(f"channel_affine: {label} {v.shape} does not match channels {c}")
    value = x.data
    if scale is not None:
        value = value * scale.data
    if shift is not None:
        value = value + shift.data
    out = Tensor._wrap(value)
    inputs = tuple(t for t in (x, scale, shift) if t is not None)

    def vjp(g):
        grads = [g * scale.data if scale is not None else g]
        if scale is not None:
            grads.append((g * x.data).reshape(-1, c).sum(axis=0))
        if shift is not None:
            grads.append(g.reshape(-1, c).sum(axis=0))
        return grads

    return record("channel_affine", inputs, out, vjp)


def _unary(op: str, x: Tensor, value: np.ndarray, local_grad) -> Tensor:
    out = Tensor._wrap(value)

    def vjp(g):
        return (g * local_grad(),)

    return record(op, (x,), out, vjp)


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    return _unary("leaky_relu", x, np.where(x.data > 0, x.data, slope * x.data),
                  lambda: np.where(x.data > 0, 1.0, slope))


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return _unary("tanh", x, y, lambda: 1.0 - y * y)


def sigmoid(x: Tensor) -> Tensor:
    y = 0.5 * (1.0 + np.tanh(0.5 * x.data))
    return _unary("sigmoid", x, y, lambda: y * (1.0 - y))


def exp(x: Tensor) -> Tensor:
    y = np.exp(x.data)
    return _unary("exp", x, y, lambda: y)


def log(x: Tensor) -> Tensor:
    if np.any(x.data <= 0):
        raise DomainError("log: input must be strictly positive")
    return _unary("log", x, np.log(x.data), lambda: 1.0 / x.data)


def xlogx(x: Tensor) -> Tensor:
    """``x * ln(x)`` with the convention ``0 * ln(0) = 0``."""
    safe = np.maximum(x.data, np.finfo(np.float64).tiny)
    value = np.where(x.data > 0, x.data * np.log(safe), 0.0)
    return _unary("xlogx", x, value, lambda: np.log(safe) + 1.0)


def square(x: Tensor) -> Tensor:
    return _unary("square", x, x.data * x.data, lambda: 2.0 * x.data)


def power(x: Tensor, exponent: float) -> Tensor:
    return _unary("power", x, np.power(x.data, exponent),
                  lambda: exponent * np.power(x.data, exponent - 1.0))


def stop_gradient(x: Tensor) -> Tensor:
    """Same values, never tracked."""
    return Tensor._wrap(x.data)


def straight_through(x: Tensor, forward_value: np.ndarray) -> Tensor:
    """Emit ``forward_value`` but pass gradients to ``x`` unchanged."""
    forward_value = np.asarray(forward_value, dtype=np.float64)
    if forward_value.shape != x.shape:
        raise DimensionError(f"straight_through: value {forward_value.shape} vs input {x.shape}")
    out = Tensor._wrap(forward_value.copy())
    return record("straight_through", (x,), out, lambda g: (g,))


# ──────────────────────────────────────────────────────────────────────────────
# REDUCTIONS AND SHAPE
# ──────────────────────────────────────────────────────────────────────────────

def _axes(axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def reduce_sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _axes(axis, x.ndim)
    out = Tensor._wrap(np.sum(x.data, axis=axes, keepdims=keepdims))
    kept = tuple(1 if i in axes else s for i, s in enumerate(x.shape))

    def vjp(g):
        return (np.broadcast_to(g.reshape(kept), x.shape).copy(),)

    return record("reduce_sum", (x,), out, vjp)


def reduce_mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _axes(axis, x.ndim)
    count = int(np.prod([x.shape[a] for a in axes])) if axes else 1
    return mul(reduce_sum(x, axes, keepdims), 1.0 / count)


def mse(a: Tensor, b: Tensor) -> Tensor:
    return reduce_mean(square(sub(a, b)))


def standardize(x: Tensor, axis=None, eps: float = 1e-5) -> Tensor:
    """``(x - mean) / sqrt(var + eps)`` over ``axis`` as a single node."""
    axes = _axes(axis, x.ndim)
    centered = x.data - np.mean(x.data, axis=axes, keepdims=True)
    inv_std = 1.0 / np.sqrt(np.mean(centered * centered, axis=axes, keepdims=True) + eps)
    y = centered * inv_std
    out = Tensor._wrap(y)

    def vjp(g):
        mean_g = np.mean(g, axis=axes, keepdims=True)
        mean_gy = np.mean(g * y, axis=axes, keepdims=True)
        return ((g - mean_g - y * mean_gy) * inv_std,)

    return record("standardize", (x,), out, vjp)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    out = Tensor._wrap(x.data.reshape(tuple(shape)))
    return record("reshape", (x,), out, lambda g: (g.reshape(x.shape),))


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    out = Tensor._wrap(np.transpose(x.data, axes))
    return record("transpose", (x,), out, lambda g: (np.transpose(g, inverse),))


def rearrange(x: Tensor, pattern: str, **axes_lengths: int) -> Tensor:
    """einops rearrangement; the gradient runs the pattern backwards."""
    left, right = pattern.split("->")
    inverse = f"{right.strip()} -> {left.strip()}"
    out = Tensor._wrap(np.ascontiguousarray(einops.rearrange(x.data, pattern, **axes_lengths)))

    def vjp(g):
        return (np.ascontiguousarray(einops.rearrange(g, inverse, **axes_lengths)),)

    return record("rearrange", (x,), out, vjp)


def broadcast_to(x: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    if x.ndim not in (0, len(shape)) or (x.ndim and any(s not in (1, t) for s, t in zip(x.shape, shape))):
        raise DimensionError(f"broadcast_to: cannot expand {x.shape} to {shape}")
    out = Tensor._wrap(np.broadcast_to(x.data, shape).copy())

    def vjp(g):
        if x.ndim == 0:
            return (np.asarray(g.sum()),)
        axes = tuple(i for i, s in enumerate(x.shape) if s == 1 and shape[i] != 1)
        return (g.sum(axis=axes, keepdims=True).reshape(x.shape),)

    return record("broadcast_to", (x,), out, vjp)


def repeat(x: Tensor, repeats: int, axis: int) -> Tensor:
    """Nearest repetition: every slice along ``axis`` appears ``repeats`` times."""
    axis = axis % x.ndim
    out = Tensor._wrap(np.repeat(x.data, repeats, axis=axis))

    def vjp(g):
        split = x.shape[:axis] + (x.shape[axis], repeats) + x.shape[axis + 1:]
        return (g.reshape(split).sum(axis=axis + 1),)

    return record("repeat", (x,), out, vjp)


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    axis = axis % tensors[0].ndim
    out = Tensor._wrap(np.concatenate([t.data for t in tensors], axis=axis))
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def vjp(g):
        return tuple(np.split(g, bounds, axis=axis))

    return record("concat", tensors, out, vjp)


def slice_tensor(x: Tensor, window: Sequence[slice]) -> Tensor:
    """Basic (positive-step) slicing; gradients are routed back by position."""
    window = tuple(window) + (slice(None),) * (x.ndim - len(window))
    for s in window:
        if s.step is not None and s.step < 1:
            raise DimensionError("slice_tensor: only positive steps are supported")
    out = Tensor._wrap(x.data[window].copy())

    def vjp(g):
        full = np.zeros(x.shape, dtype=np.float64)
        full[window] = g
        return (full,)

    return record("slice", (x,), out, vjp)


def pad_explicit(x: Tensor, pads: Pads, mode: str = "constant") -> Tensor:
    """Pad every axis by explicit ``(before, after)`` pairs with zeros or edge copies."""
    pads = tuple((int(b), int(a)) for b, a in pads)
    if len(pads) != x.ndim:
        raise DimensionError(f"pad_explicit: {len(pads)} pad pairs for a rank-{x.ndim} tensor")
    if any(b < 0 or a < 0 for b, a in pads):
        raise DimensionError(f"pad_explicit: negative padding {pads}")
    if mode not in ("constant", "edge"):
        raise DimensionError(f"pad_explicit: unknown mode '{mode}'")
    out = Tensor._wrap(np.pad(x.data, pads, mode=mode))
    core = tuple(slice(b, b + n) for (b, _), n in zip(pads, x.shape))

    def vjp(g):
        if mode == "constant":
            return (g[core].copy(),)
        g = g.copy()
        # undo the per-axis edge copies from the last axis to the first
        for axis in reversed(range(x.ndim)):
            b, a = pads[axis]
            n = x.shape[axis]
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(b, b + n)
            inner = g[tuple(idx)].copy()
            if b:
                idx[axis] = slice(0, b)
                lead = [slice(None)] * g.ndim
                lead[axis] = slice(0, 1)
                inner[tuple(lead)] += g[tuple(idx)].sum(axis=axis, keepdims=True)
            if a:
                idx[axis] = slice(b + n, b + n + a)
                tail = [slice(None)] * g.ndim
                tail[axis] = slice(n - 1, n)
                inner[tuple(tail)] += g[tuple(idx)].sum(axis=axis, keepdims=True)
            g = inner
        return (g,)

    return record("pad_explicit", (x,), out, vjp)


def gather_rows(table: Tensor, indices) -> Tensor:
    """Embedding lookup ``table[indices]`` for a 2-D table."""
    indices = np.asarray(indices, dtype=np.int64)
    if table.ndim != 2:
        raise DimensionError(f"gather_rows: table must be 2-D, got {table.shape}")
    if np.any(indices < 0) or np.any(indices >= table.shape[0]):
        raise DimensionError(f"gather_rows: index out of range for {table.shape[0]} rows")
    out = Tensor._wrap(table.data[indices])

    def vjp(g):
        full = np.zeros(table.shape, dtype=np.float64)
        np.add.at(full, indices, g)
        return (full,)

    return record("gather_rows", (table,), out, vjp)


# ──────────────────────────────────────────────────────────────────────────────
# CONVOLUTION
# ──────────────────────────────────────────────────────────────────────────────

def conv3d(
    x: Tensor,
    kernel: Tensor,
    stride: Sequence[int] = (1, 1, 1),
    padding: Pads = ((0, 0), (0, 0), (0, 0)),
) -> Tensor:
    """3-D correlation with zero padding given as explicit pairs per axis.

    ``x`` is ``[T, H, W, Cin]`` or ``[N, T, H, W, Cin]``; ``kernel`` is
    ``[kt, kh, kw, Cin, Cout]``. Windows come from ``sliding_window_view``
    and each chunk of output frames is one ``tensordot`` over
    ``(Cin, kt, kh, kw)``. Chunks keep the im2col buffer under
    ``IM2COL_BUDGET`` elements.
    """
    if x.ndim not in (4, 5):
        raise DimensionError(f"conv3d: input must be [T,H,W,C] or [N,T,H,W,C], got {x.shape}")
    if kernel.ndim != 5:
        raise DimensionError(f"conv3d: kernel must be [kt,kh,kw,Cin,Cout], got {kernel.shape}")
    ksize, (cin, cout) = kernel.shape[:3], kernel.shape[3:]
    if x.shape[-1] != cin:
        raise DimensionError(f"conv3d: input has {x.shape[-1]} channels, kernel expects {cin}")
    stride = tuple(int(s) for s in stride)
    padding = tuple((int(b), int(a)) for b, a in padding)
    if len(stride) != 3 or len(padding) != 3 or min(stride) < 1:
        raise DimensionError(f"conv3d: bad stride {stride} or padding {padding}")

    batched = x.ndim == 5
    xd = x.data if batched else x.data[None]
    xp = np.pad(xd, ((0, 0),) + padding + ((0, 0),))
    padded = xp.shape[1:4]
    if any(p < k for p, k in zip(padded, ksize)):
        raise DimensionError(f"conv3d: padded extents {padded} smaller than kernel {ksize}")
    out_sz = tuple((p - k) // s + 1 for p, k, s in zip(padded, ksize, stride))
    kt, kh, kw = ksize
    st, sh, sw = stride

    # [N, T', H', W', Cin, kt, kh, kw], a view into xp
    cols = sliding_window_view(xp, ksize, axis=(1, 2, 3))[:, ::st, ::sh, ::sw]
    kflat = kernel.data.transpose(3, 0, 1, 2, 4)  # [Cin, kt, kh, kw, Cout]
    per_frame = xd.shape[0] * out_sz[1] * out_sz[2] * cin * kt * kh * kw
    span = max(1, IM2COL_BUDGET // per_frame)
    chunks = [slice(t, min(t + span, out_sz[0])) for t in range(0, out_sz[0], span)]

    value = np.concatenate([np.tensordot(cols[:, c], kflat, axes=4) for c in chunks], axis=1)
    out = Tensor._wrap(value if batched else value[0])

    def window(arr, t0, frames, a, b, c):
        start = a + st * t0
        return arr[:,
                   start:start + st * (frames - 1) + 1:st,
                   b:b + sh * (out_sz[1] - 1) + 1:sh,
                   c:c + sw * (out_sz[2] - 1) + 1:sw, :]

    def vjp(g):
        g = g if batched else g[None]
        gxp = np.zeros_like(xp)
        gk = np.zeros_like(kflat)
        for c in chunks:
            g_chunk = g[:, c]
            gk += np.tensordot(cols[:, c], g_chunk, axes=([0, 1, 2, 3], [0, 1, 2, 3]))
            # [N, frames, H', W', Cin, kt, kh, kw], scattered back tap by tap
            g_cols = np.tensordot(g_chunk, kflat, axes=([4], [4]))
            frames = c.stop - c.start
            for a, b, w in itertools.product(range(kt), range(kh), range(kw)):
                window(gxp, c.start, frames, a, b, w)[...] += g_cols[..., a, b, w]
        core = (slice(None),) + tuple(slice(b, b + n) for (b, _), n in zip(padding, xd.shape[1:4]))
        gx = gxp[core]
        return (gx if batched else gx[0]), gk.transpose(1, 2, 3, 0, 4)

    return record("conv3d", (x, kernel), out, vjp)
