"""Named parameter storage for the tokenizer.

Every weight lives under one dotted name (``encoder.stage0.res0.conv1.kernel``)
so that the optimizer, the EMA shadow and checkpoints can address it.
"""
from __future__ import annotations

from collections import OrderedDict
from typing import Dict, Iterator, Mapping, Tuple

import numpy as np

from ..errors import ContractError, DimensionError
from ..numerics import Tensor
from .config import TokenizerConfig


def fan_in_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, scale: float = 1.0) -> np.ndarray:
    """Uniform in ``+-sqrt(3 / fan_in)``, i.e. unit variance per fan-in."""
    bound = scale * np.sqrt(3.0 / max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


class ParameterRegistry(Mapping[str, Tensor]):
    """Ordered ``name -> Tensor`` map in which each name is registered once."""

    def __init__(self):
        self._params: "OrderedDict[str, Tensor]" = OrderedDict()

    def add(self, name: str, value) -> Tensor:
        if name in self._params:
            raise ContractError(f"Parameter '{name}' is registered twice")
        tensor = value if isinstance(value, Tensor) else Tensor(value)
        tensor.name = name
        self._params[name] = tensor
        return tensor

    def conv(self, name: str, rng: np.random.Generator, kernel_size: Tuple[int, int, int],
             cin: int, cout: int, scale: float = 1.0) -> None:
        kt, kh, kw = kernel_size
        self.add(f"{name}.kernel", fan_in_uniform(rng, (kt, kh, kw, cin, cout), kt * kh * kw * cin, scale))
        self.add(f"{name}.bias", np.zeros(cout))

    def control_projection(self, name: str, control_dim: int, channels: int) -> None:
        # zero projections make the adaptive norm start as a plain group norm
        for part, shape in (("w_gamma", (control_dim, channels)), ("w_beta", (control_dim, channels)),
                            ("b_gamma", (channels,)), ("b_beta", (channels,))):
            self.add(f"{name}.{part}", np.zeros(shape))

    def __getitem__(self, name: str) -> Tensor:
        try:
            return self._params[name]
        except KeyError:
            raise KeyError(f"Unknown parameter '{name}'") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    @property
    def num_elements(self) -> int:
        return sum(t.size for t in self._params.values())

    def arrays(self) -> Dict[str, np.ndarray]:
        return {name: t.numpy() for name, t in self._params.items()}

    def replaced(self, arrays: Mapping[str, np.ndarray]) -> "ParameterRegistry":
        """A registry with the same names holding new values."""
        missing = set(self._params) - set(arrays)
        extra = set(arrays) - set(self._params)
        if missing or extra:
            raise ContractError(
                f"Parameter sets differ: missing {sorted(missing)[:5]}, unexpected {sorted(extra)[:5]}"
            )
        out = ParameterRegistry()
        for name, old in self._params.items():
            value = np.asarray(arrays[name], dtype=np.float64)
            if value.shape != old.shape:
                raise DimensionError(f"Parameter '{name}' has shape {value.shape}, expected {old.shape}")
            out.add(name, value)
        return out


def init_parameters(config: TokenizerConfig) -> ParameterRegistry:
    """Registers every encoder and decoder weight, seeded by ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    reg = ParameterRegistry()
    kt, ks = config.temporal_kernel_size, config.spatial_kernel_size
    k3 = (kt, ks, ks)
    d = config.latent_dim
    stages = config.stages()
    chans = config.stage_channels

    reg.conv("encoder.conv_in", rng, k3, config.in_channels, chans[0])
    for st in stages:
        for j in range(config.num_res_blocks):
            _res_block(reg, rng, f"encoder.stage{st.index}.res{j}", k3, st.channels)
        if st.downsamples:
            reg.conv(f"encoder.stage{st.index}.down", rng, k3, st.channels, st.out_channels)
    for j in range(config.num_res_blocks):
        _res_block(reg, rng, f"encoder.mid.res{j}", k3, chans[-1])
    reg.conv("encoder.conv_out", rng, k3, chans[-1], d, scale=config.output_init_scale)

    reg.conv("decoder.conv_in", rng, k3, d, chans[-1])
    reg.control_projection("decoder.mid.adanorm", d, chans[-1])
    for j in range(config.num_res_blocks):
        _res_block(reg, rng, f"decoder.mid.res{j}", k3, chans[-1])
    for st in reversed(stages):
        if st.downsamples:
            r = st.spatial_stride
            reg.conv(f"decoder.stage{st.index}.up", rng, k3, st.out_channels, st.channels * r * r)
        reg.control_projection(f"decoder.stage{st.index}.adanorm", d, st.channels)
        for j in range(config.num_res_blocks):
            _res_block(reg, rng, f"decoder.stage{st.index}.res{j}", k3, st.channels)
    reg.conv("decoder.conv_out", rng, k3, chans[0], config.in_channels)
    return reg


def _res_block(reg: ParameterRegistry, rng, name: str, k3, channels: int) -> None:
    reg.conv(f"{name}.conv1", rng, k3, channels, channels)
    reg.conv(f"{name}.conv2", rng, k3, channels, channels)
