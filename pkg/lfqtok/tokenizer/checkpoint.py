"""Versioned binary checkpoint container.

Layout, little-endian throughout::

    magic      4 bytes   b"LFQC"
    version    u8        1
    meta_len   u32       length of the metadata block
    metadata   bytes     UTF-8 JSON, keys sorted: {"config": ..., "step": ..., ...}
    count      u32       number of tensors
    tensor * count:
        name_len  u16
        name      UTF-8, "<group>/<parameter name>", e.g. "params/encoder.conv_in.kernel"
        ndim      u8
        dims      u32 * ndim
        payload   float64 * prod(dims), row-major

Groups are ``params`` (weights), and for training runs ``adam_m``,
``adam_v`` and ``ema``.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import numpy as np

from ..errors import FormatError
from ..utils.logging import log_info
from .config import TokenizerConfig
from .model import TokenizerModel
from .params import ParameterRegistry

MAGIC = b"LFQC"
VERSION = 1
PARAMS = "params"

PathLike = Union[str, Path]


@dataclass
class Checkpoint:
    config: TokenizerConfig
    groups: Dict[str, Dict[str, np.ndarray]]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def model(self, group: str = PARAMS) -> TokenizerModel:
        if group not in self.groups:
            raise FormatError("group", f"checkpoint has no '{group}' group (has {sorted(self.groups)})")
        registry = ParameterRegistry()
        for name, value in self.groups[group].items():
            registry.add(name, value)
        return TokenizerModel(self.config, registry)


def encode_checkpoint(
    config: TokenizerConfig,
    groups: Mapping[str, Mapping[str, np.ndarray]],
    metadata: Optional[Mapping[str, Any]] = None,
) -> bytes:
    meta = dict(metadata or {})
    meta["config"] = config.model_dump(mode="json")
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")

    tensors = [(f"{g}/{name}", np.asarray(value, dtype=np.float64))
               for g, values in groups.items() for name, value in values.items()]
    chunks = [MAGIC, struct.pack("<BI", VERSION, len(meta_bytes)), meta_bytes, struct.pack("<I", len(tensors))]
    for name, value in tensors:
        raw_name = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw_name)) + raw_name)
        chunks.append(struct.pack(f"<B{value.ndim}I", value.ndim, *value.shape))
        chunks.append(np.ascontiguousarray(value, dtype="<f8").tobytes())
    return b"".join(chunks)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(what, f"truncated at byte {self.pos}, needed {n} more bytes")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode_checkpoint(data: bytes) -> Checkpoint:
    r = _Reader(data)
    if r.take(4, "magic") != MAGIC:
        raise FormatError("magic", f"expected {MAGIC!r}")
    version, meta_len = r.unpack("<BI", "version")
    if version != VERSION:
        raise FormatError("version", f"unsupported checkpoint version {version}")
    try:
        meta = json.loads(r.take(meta_len, "metadata").decode("utf-8"))
        config = TokenizerConfig.model_validate(meta.pop("config"))
    except (ValueError, KeyError, TypeError, AttributeError) as e:
        raise FormatError("metadata", str(e)) from e

    (count,) = r.unpack("<I", "count")
    groups: Dict[str, Dict[str, np.ndarray]] = {}
    for _ in range(count):
        (name_len,) = r.unpack("<H", "name")
        raw_name = r.take(name_len, "name")
        try:
            name = raw_name.decode("utf-8")
        except UnicodeDecodeError as e:
            raise FormatError("name", f"tensor name {raw_name!r} is not UTF-8: {e.reason}") from e
        group, sep, pname = name.partition("/")
        if not sep:
            raise FormatError("name", f"tensor name '{name}' has no group prefix")
        (ndim,) = r.unpack("<B", "ndim")
        dims = r.unpack(f"<{ndim}I", "dims")
        n = int(np.prod(dims)) if ndim else 1
        payload = np.frombuffer(r.take(8 * n, f"payload of {name}"), dtype="<f8")
        groups.setdefault(group, {})[pname] = payload.astype(np.float64).reshape(dims)
    if r.pos != len(data):
        raise FormatError("trailer", f"{len(data) - r.pos} unexpected bytes after the last tensor")
    return Checkpoint(config=config, groups=groups, metadata=meta)


def save_checkpoint(
    path: PathLike,
    config: TokenizerConfig,
    groups: Mapping[str, Mapping[str, np.ndarray]],
    metadata: Optional[Mapping[str, Any]] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(config, groups, metadata))
    log_info(f"Wrote checkpoint {path} ({', '.join(groups)})")
    return path


def load_checkpoint(path: PathLike) -> Checkpoint:
    return decode_checkpoint(Path(path).read_bytes())


def save_model(path: PathLike, model: TokenizerModel, metadata: Optional[Mapping[str, Any]] = None) -> Path:
    return save_checkpoint(path, model.config, {PARAMS: model.params.arrays()}, metadata)


def load_model(path: PathLike, group: str = PARAMS) -> TokenizerModel:
    return load_checkpoint(path).model(group)
