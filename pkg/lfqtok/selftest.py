"""Invariant checks runnable from the command line (``lfqtok selftest``).

Checks are registered by name; each returns ``(ok, detail)`` and may raise,
which counts as a failure.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from .codec import pack, unpack
from .layers import FrameMap, blur_pool3d, temporal_downsample, temporal_upsample
from .lfq import (
    LfqConfig,
    TokenGrid,
    entropy_loss,
    entropy_terms,
    index_to_codes,
    literal_token_index,
    token_index,
)
from .numerics import Tensor, check_gradients, ops
from .tokenizer import TokenizerConfig, TokenizerModel

CheckFn = Callable[[], Tuple[bool, str]]


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str


_REGISTRY: Dict[str, CheckFn] = {}


def register_check(name: str, fn: CheckFn) -> None:
    _REGISTRY[name.lower()] = fn


def available_checks() -> List[str]:
    return list(_REGISTRY)


def run_checks(names: Optional[Iterable[str]] = None) -> List[CheckResult]:
    results = []
    for name in (list(names) if names is not None else available_checks()):
        fn = _REGISTRY.get(name.lower())
        if fn is None:
            results.append(CheckResult(name, False, f"unknown check '{name}'"))
            continue
        try:
            ok, detail = fn()
        except Exception as e:
            ok, detail = False, f"{type(e).__name__}: {e}"
        results.append(CheckResult(name, bool(ok), detail))
    return results


def tiny_config(**overrides) -> TokenizerConfig:
    """Two stages, four channels, 16 codes; small enough for probes."""
    values = dict(
        base_channels=4,
        channel_multipliers=(1, 1),
        num_res_blocks=1,
        spatial_strides=(2, 1),
        temporal_strides=(1, 2),
        norm_groups=2,
        lfq=LfqConfig(codebook_size=16),
    )
    values.update(overrides)
    return TokenizerConfig(**values)


# ──────────────────────────────────────────────────────────────────────────────
# checks
# ──────────────────────────────────────────────────────────────────────────────

def _bijection(dim: int = 10) -> Tuple[bool, str]:
    codes = np.stack([index_to_codes(i, dim) for i in range(2 ** dim)])
    back = token_index(codes).indices
    mismatches = int(np.sum(back != np.arange(2 ** dim)))
    return mismatches == 0, f"D={dim}: {mismatches} mismatches over {2 ** dim} indices"


def _literal_index(samples: int = 2000, dim: int = 10) -> Tuple[bool, str]:
    z = np.random.default_rng(0).normal(size=(samples, dim))
    mismatches = int(np.sum(literal_token_index(z) != token_index(z).indices))
    return mismatches == 0, f"{mismatches} mismatches over {samples} latents"


def _entropy_enumeration(dim: int = 4, batch: int = 6) -> Tuple[bool, str]:
    p = np.random.default_rng(1).uniform(0.05, 0.95, size=(batch, dim))
    _, batch_term = entropy_terms(Tensor(p), dim)
    joint = np.zeros(2 ** dim)
    for code in range(2 ** dim):
        bits = (code >> np.arange(dim)) & 1
        joint[code] = np.mean(np.prod(np.where(bits == 1, p, 1.0 - p), axis=1))
    expected = float(-(joint * np.log(joint)).sum())
    err = abs(batch_term.item() - expected)
    return err < 1e-10, f"batch entropy off by {err:.3g}"


def _gradients() -> Tuple[bool, str]:
    rng = np.random.default_rng(2)
    x = Tensor(rng.normal(size=(2, 3, 3, 2)))
    k = Tensor(rng.normal(size=(2, 2, 2, 2, 3)))
    conv = check_gradients(lambda a, b: ops.reduce_sum(ops.tanh(ops.conv3d(a, b, padding=((1, 0), (1, 1), (0, 1))))),
                           [x, k], probes=30)
    z = Tensor(rng.normal(size=(5, 4)))
    ent = check_gradients(lambda a: entropy_loss(a, 1.0, 2), [z], probes=20)
    worst = max(conv.max_rel_error, ent.max_rel_error)
    return worst <= 1e-4, f"max relative error {worst:.3g}"


def _causality() -> Tuple[bool, str]:
    model = TokenizerModel(tiny_config())
    rng = np.random.default_rng(3)
    video = rng.uniform(-1, 1, size=(5, 8, 8, 3))
    tokens, _ = model.encode(video)
    perturbed = video.copy()
    perturbed[1:] = rng.uniform(-1, 1, size=perturbed[1:].shape)
    moved, _ = model.encode(perturbed)
    image, _ = model.encode(video[:1])
    first_ok = np.array_equal(tokens.indices[0], moved.indices[0])
    image_ok = np.array_equal(image.indices[0], tokens.indices[0])
    return first_ok and image_ok, f"first frame stable={first_ok}, image matches first frame={image_ok}"


def _frame_arithmetic() -> Tuple[bool, str]:
    failures = []
    for frames, s in ((1, 4), (5, 4), (17, 4), (9, 2)):
        x = Tensor(np.ones((frames, 1, 1, 1)))
        down = temporal_downsample(x, s)
        up = temporal_upsample(down, s)
        if down.shape[0] != FrameMap.downsample(frames, s).frames_out or up.shape[0] != frames:
            failures.append(f"T={frames}, s={s}")
    return not failures, "ok" if not failures else f"failed for {', '.join(failures)}"


def _blur_dc() -> Tuple[bool, str]:
    x = Tensor(np.full((3, 8, 8, 2), 0.5))
    out = blur_pool3d(x)
    err = float(np.max(np.abs(out.data - 0.5)))
    return err == 0.0, f"max deviation from constant {err:.3g}"


def _bitstream() -> Tuple[bool, str]:
    rng = np.random.default_rng(4)
    for dim in range(1, 19):
        shape = tuple(int(v) for v in rng.integers(1, 5, size=3))
        grid = TokenGrid(rng.integers(0, 2 ** dim, size=shape), 2 ** dim)
        if unpack(pack(grid, (1, 8, 8))).tokens != grid:
            return False, f"round trip failed for D={dim}"
    return True, "D=1..18 round trip exactly"


register_check("bijection", _bijection)
register_check("literal_index", _literal_index)
register_check("entropy_enumeration", _entropy_enumeration)
register_check("gradients", _gradients)
register_check("causality", _causality)
register_check("frame_arithmetic", _frame_arithmetic)
register_check("blur_dc", _blur_dc)
register_check("bitstream", _bitstream)


def summary(results: List[CheckResult]) -> str:
    passed = sum(r.ok for r in results)
    return f"{passed}/{len(results)} checks passed" + ("" if passed == len(results) else " - FAILED")


def all_passed(results: List[CheckResult]) -> bool:
    return bool(results) and all(r.ok for r in results)
