from .config import StageSpec, TokenizerConfig
from .params import ParameterRegistry, fan_in_uniform, init_parameters
from .model import ForwardPass, TokenizerModel, decode, encode
from .inflation import inflate_2d_to_3d, inflate_model, inflate_parameters
from .checkpoint import (
    Checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    load_model,
    save_checkpoint,
    save_model,
)

__all__ = [
    "StageSpec", "TokenizerConfig", "ParameterRegistry", "fan_in_uniform", "init_parameters",
    "ForwardPass", "TokenizerModel", "encode", "decode",
    "inflate_2d_to_3d", "inflate_model", "inflate_parameters",
    "Checkpoint", "encode_checkpoint", "decode_checkpoint", "save_checkpoint", "load_checkpoint",
    "save_model", "load_model",
]
