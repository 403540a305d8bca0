from .config import TrainConfig, dump_train_config, load_train_config, parse_train_config
from .losses import LossBreakdown, combine_losses, total_loss
from .optim import AdamState, adam_step, clip_by_global_norm, ema_update, global_norm, lr_schedule
from .data import PrefetchLoader, batch_indices, make_batch, synth_dataset
from .trainer import Trainer, TrainState, default_source, held_out_batch

__all__ = [
    "TrainConfig", "load_train_config", "dump_train_config", "parse_train_config",
    "LossBreakdown", "combine_losses", "total_loss",
    "AdamState", "adam_step", "lr_schedule", "ema_update", "clip_by_global_norm", "global_norm",
    "PrefetchLoader", "batch_indices", "make_batch", "synth_dataset",
    "Trainer", "TrainState", "default_source", "held_out_batch",
]
