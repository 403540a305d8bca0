"""Batches for training.

Batch ``k`` depends only on ``(seed, k)``, so a run resumed at step ``k``
sees exactly the batches an uninterrupted run would.
"""
from __future__ import annotations

import queue
import threading
from typing import Callable, Iterator, Optional, Sequence, Tuple

import numpy as np

from ..errors import ContractError, DimensionError
from ..sources import ClipSource, SyntheticSource
from ..utils.logging import log_debug


def batch_indices(seed: int, index: int, batch_size: int, pool: int) -> np.ndarray:
    return np.random.default_rng([seed, index]).integers(pool, size=batch_size)


def make_batch(source: ClipSource, clip_ids: Sequence[str], seed: int, index: int, batch_size: int) -> np.ndarray:
    clips = []
    for i in batch_indices(seed, index, batch_size, len(clip_ids)):
        clip = source.load_clip(clip_ids[int(i)])
        if clip is None:
            raise ContractError(f"Clip '{clip_ids[int(i)]}' disappeared from its source")
        clips.append(clip)
    shapes = {c.shape for c in clips}
    if len(shapes) != 1:
        raise DimensionError(f"clips in one batch differ in shape: {sorted(shapes)}")
    return np.stack(clips)


def synth_dataset(seed: int, count: int, frames: int, height: int, width: int,
                  batch_size: int = 1) -> Iterator[np.ndarray]:
    """``count`` batches ``[B, T, H, W, 3]`` of consecutive synthetic clips."""
    source = SyntheticSource(seed=seed, count=count * batch_size, frames=frames, height=height, width=width)
    for k in range(count):
        yield np.stack([source.clip(k * batch_size + b) for b in range(batch_size)])


class PrefetchLoader:
    """Builds batches ``start, start+1, ...`` on a worker thread.

    The queue is bounded by ``depth``; every batch travels with its sequence
    number and the consumer checks it, so order never depends on timing.
    """

    def __init__(self, make: Callable[[int], np.ndarray], start: int, stop: int, depth: int = 2):
        self._make = make
        self._next = start
        self._stop = stop
        self._queue: "queue.Queue[Tuple[int, Optional[np.ndarray], Optional[BaseException]]]" = queue.Queue(
            maxsize=max(depth, 1)
        )
        self._closed = threading.Event()
        self._worker = threading.Thread(target=self._produce, args=(start,), name="lfqtok-prefetch", daemon=True)
        self._worker.start()

    def _produce(self, start: int) -> None:
        for seq in range(start, self._stop):
            if self._closed.is_set():
                return
            try:
                item = (seq, self._make(seq), None)
            except BaseException as e:  # handed to the consumer
                item = (seq, None, e)
            while not self._closed.is_set():
                try:
                    self._queue.put(item, timeout=0.1)
                    break
                except queue.Full:
                    continue
            if item[2] is not None:
                return

    def __iter__(self) -> "PrefetchLoader":
        return self

    def __next__(self) -> np.ndarray:
        if self._next >= self._stop:
            raise StopIteration
        seq, batch, error = self._queue.get()
        if error is not None:
            self.close()
            raise error
        if seq != self._next:
            self.close()
            raise ContractError(f"prefetch delivered batch {seq}, expected {self._next}")
        self._next += 1
        log_debug(f"batch {seq} ready, {self._queue.qsize()} queued")
        return batch

    def close(self) -> None:
        self._closed.set()
        self._worker.join(timeout=1.0)

    def __enter__(self) -> "PrefetchLoader":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
