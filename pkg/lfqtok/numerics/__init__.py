from .tensor import Gradients, GradTape, Tensor, active_tape, as_tensor, backward
from .gradcheck import GradientReport, check_gradients, relative_error
from . import ops

__all__ = [
    "Tensor", "GradTape", "Gradients", "backward", "active_tape", "as_tensor",
    "check_gradients", "relative_error", "GradientReport", "ops",
]
