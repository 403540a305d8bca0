"""Token bitstream: a fixed-width packing of a token grid.

Layout (little-endian)::

    magic    4 bytes  b"LFQT"
    version  u8       1
    dim      u8       D, bits per token (1..62)
    T', H', W'        u16 each, token grid
    T, H, W           u16 each, original video
    payload           T'*H'*W' tokens, D bits each, raster order (T' outer,
                      W' inner), bit 0 of a token first, bits filled into
                      bytes least-significant first, trailing pad bits zero

There is no entropy coding: the payload is exactly ``T'*H'*W'*D`` bits
rounded up to whole bytes.
"""
from __future__ import annotations

import struct
from collections import Counter
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import DomainError, FormatError
from ..lfq import TokenGrid, codebook_usage

MAGIC = b"LFQT"
VERSION = 1
HEADER = struct.Struct("<4sBBHHHHHH")
U16_MAX = 0xFFFF
# indices are held in int64
MAX_DIM = 62

_GRID_FIELDS = ("latent_frames", "latent_height", "latent_width")
_VIDEO_FIELDS = ("frames", "height", "width")


@dataclass(frozen=True)
class BitstreamHeader:
    dim: int
    token_shape: Tuple[int, int, int]
    original_shape: Tuple[int, int, int]
    version: int = VERSION

    @property
    def num_tokens(self) -> int:
        t, h, w = self.token_shape
        return t * h * w

    @property
    def payload_bits(self) -> int:
        return self.num_tokens * self.dim

    @property
    def payload_bytes(self) -> int:
        return (self.payload_bits + 7) // 8

    def as_dict(self) -> Dict[str, int]:
        values = dict(zip(_GRID_FIELDS + _VIDEO_FIELDS, self.token_shape + self.original_shape))
        return {"version": self.version, "dim": self.dim, **values}


@dataclass(frozen=True)
class TokenBitstream:
    header: BitstreamHeader
    tokens: TokenGrid

    def to_bytes(self) -> bytes:
        return pack(self.tokens, self.header.original_shape)


def _check_u16(label: str, values: Sequence[int], minimum: int) -> None:
    for name, v in zip(label.split(","), values):
        if not minimum <= int(v) <= U16_MAX:
            raise DomainError(f"{name}={v} does not fit the header range [{minimum}, {U16_MAX}]")


def pack(tokens: Union[TokenGrid, np.ndarray], original_shape: Sequence[int], dim: Optional[int] = None) -> bytes:
    """Serialize a ``[T', H', W']`` token grid; ``dim`` is needed for raw index arrays."""
    if isinstance(tokens, TokenGrid):
        dim = tokens.dim if dim is None else dim
        indices = tokens.indices
    else:
        if dim is None:
            raise DomainError("pack() needs the code dimension for a raw index array")
        indices = np.asarray(tokens)
    if not 1 <= dim <= MAX_DIM:
        raise DomainError(f"code dimension D={dim} outside [1, {MAX_DIM}]")
    if indices.ndim != 3:
        raise DomainError(f"token grid must be [T',H',W'], got shape {indices.shape}")
    idx = indices.astype(np.int64).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= (1 << dim)):
        raise DomainError(f"token index overflows {dim} bits: range [{int(idx.min())}, {int(idx.max())}]")
    _check_u16(",".join(_GRID_FIELDS), indices.shape, 1)
    _check_u16(",".join(_VIDEO_FIELDS), tuple(original_shape), 1)

    header = HEADER.pack(MAGIC, VERSION, dim, *indices.shape, *(int(v) for v in original_shape))
    bits = ((idx[:, None] >> np.arange(dim, dtype=np.int64)) & 1).astype(np.uint8)
    payload = np.packbits(bits.reshape(-1), bitorder="little").tobytes()
    return header + payload


def read_header(data: bytes) -> BitstreamHeader:
    if len(data) < HEADER.size:
        raise FormatError("header", f"{len(data)} bytes, need at least {HEADER.size}")
    magic, version, dim, *dims = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError("magic", f"expected {MAGIC!r}, got {magic!r}")
    if version != VERSION:
        raise FormatError("version", f"unsupported bitstream version {version}")
    if not 1 <= dim <= MAX_DIM:
        raise FormatError("dim", f"code dimension {dim} outside [1, {MAX_DIM}]")
    for name, v in zip(_GRID_FIELDS, dims[:3]):
        if v < 1:
            raise FormatError(name, "token grid extent must be >= 1")
    return BitstreamHeader(dim=dim, token_shape=tuple(dims[:3]), original_shape=tuple(dims[3:]), version=version)


def unpack(data: bytes) -> TokenBitstream:
    header = read_header(data)
    payload = data[HEADER.size:]
    if len(payload) != header.payload_bytes:
        raise FormatError("payload", f"{len(payload)} bytes, header implies {header.payload_bytes}")
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), bitorder="little")
    if bits[header.payload_bits:].any():
        raise FormatError("payload", "trailing pad bits are not zero")
    words = bits[:header.payload_bits].reshape(header.num_tokens, header.dim).astype(np.int64)
    indices = words @ np.left_shift(np.int64(1), np.arange(header.dim, dtype=np.int64))
    grid = TokenGrid(indices=indices.reshape(header.token_shape), codebook_size=1 << header.dim)
    return TokenBitstream(header=header, tokens=grid)


def bits_per_pixel(stream: Union[TokenBitstream, BitstreamHeader, bytes]) -> float:
    """Payload bits over original pixel count; the header is not counted."""
    if isinstance(stream, (bytes, bytearray)):
        header = read_header(bytes(stream))
    elif isinstance(stream, TokenBitstream):
        header = stream.header
    else:
        header = stream
    t, h, w = header.original_shape
    pixels = t * h * w
    if pixels == 0:
        raise DomainError(f"original video dims {header.original_shape} contain a zero")
    return header.payload_bits / pixels


def token_histogram(grid: TokenGrid, top: int = 8) -> Dict[str, Any]:
    usage = codebook_usage(grid)
    common = Counter(grid.indices.reshape(-1).tolist()).most_common(top)
    return {
        "distinct": usage["distinct"],
        "perplexity": usage["perplexity"],
        "top": [(int(token), int(count)) for token, count in common],
    }
