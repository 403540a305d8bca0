from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .tensor import GradTape, Tensor, backward

REL_FLOOR = 1e-6


@dataclass
class GradientReport:
    max_rel_error: float
    worst: Optional[Tuple[int, int, float, float]] = None  # (input, flat index, analytic, numeric)
    probes: List[Tuple[int, int, float, float]] = field(default_factory=list)

    def ok(self, tolerance: float) -> bool:
        return self.max_rel_error <= tolerance


def relative_error(analytic: float, numeric: float, floor: float = REL_FLOOR) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def check_gradients(
    fn: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    probes: int = 20,
    step: float = 1e-5,
    seed: int = 0,
) -> GradientReport:
    """Compare tape gradients of ``fn(*inputs)`` with central differences.

    ``probes`` coordinates are drawn uniformly over all input elements.
    """
    inputs = list(inputs)
    with GradTape() as tape:
        tape.watch(*inputs)
        loss = fn(*inputs)
    grads = backward(tape, loss)

    rng = np.random.default_rng(seed)
    sizes = np.array([t.size for t in inputs])
    report = GradientReport(max_rel_error=0.0)
    for _ in range(probes):
        which = int(rng.choice(len(inputs), p=sizes / sizes.sum()))
        flat = int(rng.integers(inputs[which].size))
        analytic = float(grads.array(inputs[which]).reshape(-1)[flat])

        def evaluate(delta: float) -> float:
            moved = inputs[which].numpy().reshape(-1)
            moved[flat] += delta
            args = list(inputs)
            args[which] = Tensor(moved.reshape(inputs[which].shape))
            return fn(*args).item()

        numeric = (evaluate(step) - evaluate(-step)) / (2.0 * step)
        probe = (which, flat, analytic, numeric)
        report.probes.append(probe)
        err = relative_error(analytic, numeric)
        if err >= report.max_rel_error:
            report.max_rel_error = err
            report.worst = probe
    return report
