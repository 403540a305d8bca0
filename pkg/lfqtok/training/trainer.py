"""Single-threaded, deterministic training loop.

Each step: batch ``k`` -> forward under a tape -> total loss -> gradients ->
global-norm clip -> Adam -> EMA. A metrics record per step goes to an
optional JSON-lines file.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from ..errors import ConfigurationError, FormatError, TrainingFault
from ..lfq import codebook_usage
from ..numerics import GradTape, Tensor, backward
from ..sources import ClipSource, FileSystemSource, SyntheticSource
from ..tokenizer import TokenizerModel, init_parameters, load_checkpoint, save_checkpoint
from ..utils.logging import log_error, log_info
from .config import TrainConfig
from .data import PrefetchLoader, make_batch
from .losses import total_loss
from .optim import AdamState, adam_step, clip_by_global_norm, ema_update, lr_schedule

PathLike = Union[str, Path]

HELD_OUT_SEED_OFFSET = 7919


@dataclass
class TrainState:
    adam: AdamState
    ema: Dict[str, np.ndarray]
    loss_history: List[float] = field(default_factory=list)

    @property
    def step(self) -> int:
        return self.adam.step

    @property
    def params(self) -> Dict[str, np.ndarray]:
        return self.adam.params

    def rng_state(self, seed: int) -> Dict[str, int]:
        # batches come from default_rng([seed, k]); the cursor is the whole state
        return {"seed": seed, "batch_cursor": self.step}


def default_source(config: TrainConfig) -> ClipSource:
    if config.data_dir:
        source = FileSystemSource(config.data_dir)
        if not source.list_clips():
            raise ConfigurationError(f"data_dir '{config.data_dir}' contains no *.lfqv clips")
        return source
    return SyntheticSource(config.seed, config.synthetic_clips, *config.clip_shape)


def held_out_batch(config: TrainConfig, batch_size: Optional[int] = None) -> np.ndarray:
    """A batch of synthetic clips the training stream never draws."""
    source = SyntheticSource(config.seed + HELD_OUT_SEED_OFFSET, batch_size or config.batch_size, *config.clip_shape)
    return np.stack([source.clip(i) for i in range(len(source))])


class Trainer:
    def __init__(self, config: TrainConfig, source: Optional[ClipSource] = None,
                 state: Optional[TrainState] = None):
        self.config = config
        self.source = source or default_source(config)
        self._clip_ids = self.source.list_clips()
        if not self._clip_ids:
            raise ConfigurationError("the clip source is empty")
        self._template = TokenizerModel(config.tokenizer, init_parameters(config.tokenizer))
        if state is None:
            arrays = self._template.params.arrays()
            state = TrainState(adam=AdamState.create(arrays), ema={k: v.copy() for k, v in arrays.items()})
        self.state = state

    # ──────────────────────────────────────────────────────────────────────
    # models
    # ──────────────────────────────────────────────────────────────────────

    @property
    def model(self) -> TokenizerModel:
        return self._template.with_parameters(self.state.params)

    @property
    def ema_model(self) -> TokenizerModel:
        return self._template.with_parameters(self.state.ema)

    # ──────────────────────────────────────────────────────────────────────
    # steps
    # ──────────────────────────────────────────────────────────────────────

    def batch(self, index: int) -> np.ndarray:
        return make_batch(self.source, self._clip_ids, self.config.seed, index, self.config.batch_size)

    def step(self, batch: Optional[np.ndarray] = None) -> Dict[str, Any]:
        cfg = self.config
        step = self.state.step
        if batch is None:
            batch = self.batch(step)

        params = self._template.params.replaced(self.state.params)
        with GradTape() as tape:
            tape.watch(list(params.values()))
            breakdown = total_loss(batch, self._template, step, cfg, params)
        grads = backward(tape, breakdown.total).by_name(params)

        grad_norm = None
        if cfg.grad_clip is not None:
            grads, grad_norm = clip_by_global_norm(grads, cfg.grad_clip)
        lr = lr_schedule(step, cfg.peak_lr, cfg.warmup_steps, cfg.steps)
        adam = adam_step(self.state.adam, grads, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
        for name, value in adam.params.items():
            if not np.all(np.isfinite(value)):
                raise TrainingFault(f"parameter {name}", step, float("nan"))
        ema = ema_update(self.state.ema, adam.params, cfg.ema_decay)

        values = breakdown.values()
        tokens = self._template.quantizer.tokens(breakdown.forward.latents)
        record = {"step": step, "lr": lr, **values, "distinct_tokens": codebook_usage(tokens)["distinct"]}
        if grad_norm is not None:
            record["grad_norm"] = grad_norm
        self.state = TrainState(adam=adam, ema=ema, loss_history=self.state.loss_history + [values["total"]])
        return record

    def run(self, steps: Optional[int] = None, metrics_path: Optional[PathLike] = None) -> List[Dict[str, Any]]:
        """Train until ``steps`` total steps (default ``config.steps``) have been taken.

        A fresh run (step 0) truncates ``metrics_path``; a resumed run appends to it.
        """
        cfg = self.config
        stop = cfg.steps if steps is None else steps
        start = self.state.step
        records = []
        metrics = None
        if metrics_path is not None:
            Path(metrics_path).parent.mkdir(parents=True, exist_ok=True)
            metrics = open(metrics_path, "a" if start > 0 else "w", encoding="utf-8")
        log_info(f"Training steps {start}..{stop} with batch {cfg.batch_size} on {len(self._clip_ids)} clips")
        try:
            batches = PrefetchLoader(self.batch, start, stop, cfg.prefetch) if cfg.prefetch else (
                self.batch(k) for k in range(start, stop)
            )
            try:
                for batch in batches:
                    record = self.step(batch)
                    records.append(record)
                    if metrics is not None:
                        metrics.write(json.dumps(record, sort_keys=True) + "\n")
                    if record["step"] % cfg.log_every == 0 or record["step"] == stop - 1:
                        log_info(
                            f"step {record['step']}: total={record['total']:.5f} "
                            f"rec={record['reconstruction']:.5f} distinct={record['distinct_tokens']} "
                            f"lr={record['lr']:.2e}"
                        )
            except TrainingFault as e:
                log_error(f"Training stopped: {e}")
                raise
            finally:
                if isinstance(batches, PrefetchLoader):
                    batches.close()
        finally:
            if metrics is not None:
                metrics.close()
        return records

    # ──────────────────────────────────────────────────────────────────────
    # evaluation
    # ──────────────────────────────────────────────────────────────────────

    def evaluate(self, batch: Optional[np.ndarray] = None, use_ema: bool = False) -> Dict[str, float]:
        """Reconstruction MSE and token usage on a batch (held-out by default)."""
        batch = held_out_batch(self.config) if batch is None else batch
        model = self.ema_model if use_ema else self.model
        fwd = model.forward(Tensor(batch))
        usage = codebook_usage(model.quantizer.tokens(fwd.latents))
        return {
            "reconstruction": float(np.mean((fwd.reconstruction.data - batch) ** 2)),
            "distinct_tokens": usage["distinct"],
            "perplexity": usage["perplexity"],
        }

    # ──────────────────────────────────────────────────────────────────────
    # persistence
    # ──────────────────────────────────────────────────────────────────────

    def save(self, path: PathLike) -> Path:
        s = self.state
        metadata = {
            "train": self.config.model_dump(mode="json"),
            "step": s.step,
            "rng_state": s.rng_state(self.config.seed),
            "loss_history": s.loss_history,
        }
        groups = {"params": s.adam.params, "adam_m": s.adam.m, "adam_v": s.adam.v, "ema": s.ema}
        return save_checkpoint(path, self.config.tokenizer, groups, metadata)

    @classmethod
    def load(cls, path: PathLike, source: Optional[ClipSource] = None) -> "Trainer":
        ckpt = load_checkpoint(path)
        meta = ckpt.metadata
        if "train" not in meta:
            raise ConfigurationError(f"{path} is a model checkpoint without training state")
        missing = [g for g in ("params", "adam_m", "adam_v", "ema") if g not in ckpt.groups]
        if missing:
            raise FormatError("group", f"training checkpoint lacks groups {missing}")
        config = TrainConfig.model_validate(meta["train"])
        step = int(meta["step"])
        state = TrainState(
            adam=AdamState(params=ckpt.groups["params"], m=ckpt.groups["adam_m"], v=ckpt.groups["adam_v"], step=step),
            ema=ckpt.groups["ema"],
            loss_history=[float(v) for v in meta.get("loss_history", [])],
        )
        log_info(f"Resumed training state at step {step} from {path}")
        return cls(config, source, state)
