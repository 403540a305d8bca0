from .bitstream import (
    BitstreamHeader,
    TokenBitstream,
    bits_per_pixel,
    pack,
    read_header,
    token_histogram,
    unpack,
)
from .metrics import format_value, mse, psnr, quality_report
from .video_io import decode_video, encode_video, read_video, write_video

__all__ = [
    "BitstreamHeader", "TokenBitstream", "pack", "unpack", "read_header", "bits_per_pixel",
    "token_histogram", "mse", "psnr", "quality_report", "format_value",
    "encode_video", "decode_video", "read_video", "write_video",
]
