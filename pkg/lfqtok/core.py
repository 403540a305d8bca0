"""File-level operations behind the command line.

Each function reads its inputs from disk, does one job and writes its
outputs, returning a small dict of facts worth printing.
"""
from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from .codec import bits_per_pixel, pack, quality_report, read_video, token_histogram, unpack, write_video
from .errors import FormatError
from .tokenizer import load_model
from .training import Trainer, load_train_config
from .utils.logging import log_info

PathLike = Union[str, Path]


def train(config_path: PathLike, out_path: PathLike, metrics_path: Optional[PathLike] = None,
          resume: Optional[PathLike] = None) -> Dict[str, Any]:
    """Train from a YAML config (or resume a training checkpoint) and save the result."""
    if resume is not None:
        trainer = Trainer.load(resume)
    else:
        trainer = Trainer(load_train_config(config_path))
    metrics_path = Path(metrics_path) if metrics_path else Path(out_path).with_suffix(".metrics.jsonl")
    records = trainer.run(metrics_path=metrics_path)
    trainer.save(out_path)
    last = records[-1] if records else {}
    return {
        "steps": trainer.state.step,
        "checkpoint": str(out_path),
        "metrics": str(metrics_path),
        "reconstruction": last.get("reconstruction", float("nan")),
        "distinct_tokens": last.get("distinct_tokens", 0),
    }


def tokenize(ckpt_path: PathLike, video_path: PathLike, out_path: PathLike, use_ema: bool = False) -> Dict[str, Any]:
    model = load_model(ckpt_path, "ema" if use_ema else "params")
    video = read_video(video_path)
    tokens, _ = model.encode(video)
    data = pack(tokens, video.shape[:3])
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_bytes(data)
    stream = unpack(data)
    log_info(f"Tokenized {video_path} {video.shape[:3]} -> {tokens.shape} into {out_path}")
    return {**stream.header.as_dict(), "bytes": len(data), "bpp": bits_per_pixel(stream)}


def detokenize(ckpt_path: PathLike, stream_path: PathLike, out_path: PathLike, use_ema: bool = False) -> Dict[str, Any]:
    model = load_model(ckpt_path, "ema" if use_ema else "params")
    stream = unpack(Path(stream_path).read_bytes())
    if stream.header.dim != model.config.latent_dim:
        raise FormatError("dim", f"bitstream has D={stream.header.dim}, checkpoint expects D={model.config.latent_dim}")
    expected = model.config.video_shape(*stream.header.token_shape)
    if expected != stream.header.original_shape:
        raise FormatError(
            "frames", f"token grid {stream.header.token_shape} decodes to {expected}, header says "
                      f"{stream.header.original_shape}"
        )
    video = np.clip(model.decode(stream.tokens).data, -1.0, 1.0)
    write_video(out_path, video)
    log_info(f"Decoded {stream_path} -> {out_path} {video.shape[:3]}")
    return {"frames": video.shape[0], "height": video.shape[1], "width": video.shape[2]}


def compare(reference_path: PathLike, test_path: PathLike) -> Dict[str, float]:
    return quality_report(read_video(reference_path), read_video(test_path))


def inspect(stream_path: PathLike, top: int = 8) -> Dict[str, Any]:
    stream = unpack(Path(stream_path).read_bytes())
    return {**stream.header.as_dict(), "bpp": bits_per_pixel(stream), **token_histogram(stream.tokens, top)}
