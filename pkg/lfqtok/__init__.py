from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("lfqtok")
except PackageNotFoundError:
    __version__ = "0.0.0+local"

from .errors import (
    ConfigurationError,
    ContractError,
    DimensionError,
    DomainError,
    FormatError,
    LfqtokError,
    ShapeError,
    TrainingFault,
)
from .lfq import LfqConfig, LookupFreeQuantizer, TokenGrid
from .tokenizer import TokenizerConfig, TokenizerModel, decode, encode, load_model, save_model
from .training import TrainConfig, Trainer
from .codec import bits_per_pixel, pack, psnr, unpack
from .sources import ArraySource, ClipSource, FileSystemSource, SyntheticSource

__all__ = [
    "LfqtokError", "DimensionError", "ShapeError", "DomainError", "ConfigurationError",
    "ContractError", "TrainingFault", "FormatError",
    "LfqConfig", "LookupFreeQuantizer", "TokenGrid",
    "TokenizerConfig", "TokenizerModel", "encode", "decode", "load_model", "save_model",
    "TrainConfig", "Trainer",
    "pack", "unpack", "bits_per_pixel", "psnr",
    "ClipSource", "ArraySource", "FileSystemSource", "SyntheticSource",
]
