"""Immutable float64 tensors and a tape for reverse-mode gradients.

A ``Tensor`` wraps a read-only numpy array. Ops in :mod:`lfqtok.numerics.ops`
record themselves on the innermost active ``GradTape`` whenever one of their
inputs is tracked by it; ``backward`` replays the records in reverse.

    with GradTape() as tape:
        tape.watch(w)
        loss = ops.reduce_sum(ops.square(w))
    grads = backward(tape, loss)
    grads[w]   # == 2 * w
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ContractError, DimensionError

MAX_ORDER = 5

_uids = itertools.count()


class Tensor:
    __slots__ = ("_data", "uid", "name")

    def __init__(self, data, name: Optional[str] = None):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim > MAX_ORDER:
            raise DimensionError(f"Tensor order {arr.ndim} exceeds {MAX_ORDER}: shape {arr.shape}")
        if any(extent < 1 for extent in arr.shape):
            raise DimensionError(f"Tensor extents must be >= 1, got shape {arr.shape}")
        arr.setflags(write=False)
        self._data = arr
        self.uid = next(_uids)
        self.name = name

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "Tensor":
        # arrays from ops are fresh and owned; no copy
        t = cls.__new__(cls)
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim > MAX_ORDER:
            raise DimensionError(f"Tensor order {arr.ndim} exceeds {MAX_ORDER}: shape {arr.shape}")
        if any(extent < 1 for extent in arr.shape):
            raise DimensionError(f"Tensor extents must be >= 1, got shape {arr.shape}")
        if arr.flags.writeable:
            arr.setflags(write=False)
        t._data = arr
        t.uid = next(_uids)
        t.name = None
        return t

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> Tuple[int, ...]:
        return self._data.shape

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return self._data.size

    def numpy(self) -> np.ndarray:
        return np.array(self._data)

    def item(self) -> float:
        if self._data.size != 1:
            raise DimensionError(f"item() needs a single element, shape is {self.shape}")
        return float(self._data.reshape(()))

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label})"

    # arithmetic sugar, routed through the differentiable ops
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops
        return ops.mul(other, self)

    def __neg__(self):
        from . import ops
        return ops.mul(self, -1.0)

    def __truediv__(self, other):
        from . import ops
        if isinstance(other, Tensor):
            return ops.mul(self, ops.power(other, -1.0))
        return ops.mul(self, 1.0 / float(other))


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


VJP = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


@dataclass
class _Record:
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    vjp: VJP


_local = threading.local()


def _stack() -> List["GradTape"]:
    if not hasattr(_local, "tapes"):
        _local.tapes = []
    return _local.tapes


def active_tape() -> Optional["GradTape"]:
    tapes = _stack()
    return tapes[-1] if tapes else None


class GradTape:
    """Records differentiable ops executed inside its ``with`` block.

    A tape belongs to the thread that entered it and can be replayed once.
    """

    def __init__(self):
        self._records: List[_Record] = []
        self._tracked: Dict[int, Tensor] = {}
        self._replayed = False

    def __enter__(self) -> "GradTape":
        _stack().append(self)
        return self

    def __exit__(self, *exc) -> None:
        tapes = _stack()
        if tapes and tapes[-1] is self:
            tapes.pop()

    def watch(self, *tensors: Tensor) -> None:
        for t in tensors:
            if isinstance(t, (list, tuple)):
                self.watch(*t)
            else:
                self._tracked[t.uid] = t

    def is_tracked(self, tensor: Tensor) -> bool:
        return tensor.uid in self._tracked

    def record(self, op: str, inputs: Iterable[Tensor], output: Tensor, vjp: VJP) -> None:
        inputs = tuple(inputs)
        if not any(self.is_tracked(t) for t in inputs):
            return
        self._tracked[output.uid] = output
        self._records.append(_Record(op, inputs, output, vjp))

    def __len__(self) -> int:
        return len(self._records)

    @property
    def ops(self) -> List[str]:
        return [r.op for r in self._records]


def record(op: str, inputs: Sequence[Tensor], output: Tensor, vjp: VJP) -> Tensor:
    tape = active_tape()
    if tape is not None:
        tape.record(op, inputs, output, vjp)
    return output


class Gradients:
    """Gradient map returned by :func:`backward`; untouched tensors read as zero."""

    def __init__(self, grads: Dict[int, np.ndarray]):
        self._grads = grads

    def __getitem__(self, tensor: Tensor) -> Tensor:
        return Tensor._wrap(self.array(tensor))

    def array(self, tensor: Tensor) -> np.ndarray:
        g = self._grads.get(tensor.uid)
        if g is None:
            return np.zeros(tensor.shape, dtype=np.float64)
        return g

    def __contains__(self, tensor: Tensor) -> bool:
        return tensor.uid in self._grads

    def by_name(self, params) -> Dict[str, np.ndarray]:
        """Gradient arrays for a ``name -> Tensor`` mapping."""
        return {name: self.array(t) for name, t in params.items()}


def backward(tape: GradTape, loss: Tensor) -> Gradients:
    if loss.size != 1 or loss.ndim != 0:
        raise ContractError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if tape._replayed:
        raise ContractError("This tape was already replayed; record a new one")
    if not tape.is_tracked(loss):
        raise ContractError("The loss was not produced under this tape from a watched tensor")
    tape._replayed = True

    grads: Dict[int, np.ndarray] = {loss.uid: np.ones((), dtype=np.float64)}
    for rec in reversed(tape._records):
        g_out = grads.get(rec.output.uid)
        if g_out is None:
            continue
        g_inputs = rec.vjp(g_out)
        for t, g in zip(rec.inputs, g_inputs):
            if g is None or not tape.is_tracked(t):
                continue
            if g.shape != t.shape:
                raise ContractError(f"{rec.op}: gradient shape {g.shape} does not match input {t.shape}")
            if t.uid in grads:
                grads[t.uid] = grads[t.uid] + g
            else:
                grads[t.uid] = np.array(g, dtype=np.float64)
    return Gradients(grads)
