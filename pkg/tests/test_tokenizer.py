from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from lfqtok.errors import ContractError, DimensionError, DomainError, FormatError, ShapeError
from lfqtok.lfq import LfqConfig, TokenGrid
from lfqtok.numerics import Tensor, check_gradients, ops
from lfqtok.selftest import tiny_config
from lfqtok.tokenizer import (
    Checkpoint,
    ParameterRegistry,
    TokenizerConfig,
    TokenizerModel,
    decode,
    decode_checkpoint,
    encode,
    encode_checkpoint,
    inflate_2d_to_3d,
    inflate_model,
    init_parameters,
    load_model,
    save_model,
)

# ──────────────────────────────────────────────────────────────────────────────
# FIXTURES
# ──────────────────────────────────────────────────────────────────────────────

def _video(frames, height=8, width=8, seed=0):
    return np.random.default_rng(seed).uniform(-1.0, 1.0, size=(frames, height, width, 3))


@pytest.fixture(scope="module")
def tiny_model():
    return TokenizerModel(tiny_config())


@pytest.fixture(scope="module")
def toy_model():
    return TokenizerModel(TokenizerConfig.toy())


# ──────────────────────────────────────────────────────────────────────────────
# CONFIG
# ──────────────────────────────────────────────────────────────────────────────

def test_toy_and_full_size_shape_laws():
    toy = TokenizerConfig.toy()
    assert toy.latent_shape(17, 32, 32) == (5, 4, 4)
    assert toy.latent_shape(1, 32, 32) == (1, 4, 4)
    assert toy.latent_dim == 10
    full = TokenizerConfig.full_size()
    assert full.latent_shape(17, 128, 128) == (5, 16, 16)
    assert full.lfq.codebook_size == 2 ** 18
    assert full.video_shape(5, 16, 16) == (17, 128, 128)


@pytest.mark.parametrize("shape,axis", [((16, 32, 32), "T"), ((17, 30, 32), "H"), ((17, 32, 12), "W")])
def test_latent_shape_names_axis(shape, axis):
    with pytest.raises(ShapeError) as info:
        TokenizerConfig.toy().latent_shape(*shape)
    assert info.value.axis == axis


def test_temporal_strides_must_come_last():
    with pytest.raises(ValidationError):
        TokenizerConfig(spatial_strides=(2, 2, 2), temporal_strides=(2, 1, 1))
    with pytest.raises(ValidationError):
        TokenizerConfig(channel_multipliers=(1, 2), spatial_strides=(2, 2, 2), temporal_strides=(1, 2, 2))


def test_stage_layout():
    stages = TokenizerConfig.toy().stages()
    assert [(s.channels, s.out_channels, s.stride) for s in stages] == [
        (16, 32, (1, 2, 2)), (32, 64, (2, 2, 2)), (64, 64, (2, 2, 2))
    ]


# ──────────────────────────────────────────────────────────────────────────────
# PARAMETERS
# ──────────────────────────────────────────────────────────────────────────────

def test_registry_rejects_duplicates():
    reg = ParameterRegistry()
    reg.add("a", np.zeros(2))
    with pytest.raises(ContractError):
        reg.add("a", np.zeros(2))


def test_replaced_checks_names_and_shapes():
    params = init_parameters(tiny_config())
    arrays = params.arrays()
    with pytest.raises(ContractError):
        params.replaced({k: v for k, v in list(arrays.items())[1:]})
    name = next(iter(arrays))
    arrays[name] = np.zeros((1,))
    with pytest.raises(DimensionError):
        params.replaced(arrays)


def test_init_is_seeded():
    a = init_parameters(tiny_config()).arrays()
    b = init_parameters(tiny_config()).arrays()
    c = init_parameters(tiny_config(seed=1)).arrays()
    assert all(np.array_equal(a[k], b[k]) for k in a)
    assert not all(np.array_equal(a[k], c[k]) for k in a)


# ──────────────────────────────────────────────────────────────────────────────
# ENCODE / DECODE
# ──────────────────────────────────────────────────────────────────────────────

def test_toy_video_and_image_token_shapes(toy_model):
    video = _video(17, 32, 32)
    tokens, latents = encode(video, toy_model)
    assert tokens.shape == (5, 4, 4)
    assert latents.shape == (5, 4, 4, 10)
    assert tokens.indices.min() >= 0 and tokens.indices.max() < 1024
    image_tokens, _ = toy_model.encode(video[:1])
    assert image_tokens.shape == (1, 4, 4)
    np.testing.assert_array_equal(image_tokens.indices[0], tokens.indices[0])


@pytest.mark.parametrize("t", [1, 2, 3])
def test_toy_encoder_is_causal(toy_model, t):
    video = _video(17, 32, 32, seed=1)
    base, _ = toy_model.encode(video)
    moved = video.copy()
    # token frame t sees input frames <= 4 * t
    moved[4 * t + 1:] = _video(16 - 4 * t, 32, 32, seed=2 + t)
    perturbed, _ = toy_model.encode(moved)
    np.testing.assert_array_equal(perturbed.indices[:t + 1], base.indices[:t + 1])


@pytest.mark.parametrize("frames", [1, 5], ids=["image", "video"])
def test_decode_restores_shape(tiny_model, frames):
    video = _video(frames)
    tokens, _ = tiny_model.encode(video)
    assert decode(tokens, tiny_model).shape == video.shape


def test_decode_is_deterministic(tiny_model):
    tokens, _ = tiny_model.encode(_video(5, seed=3))
    np.testing.assert_array_equal(tiny_model.decode(tokens).data, tiny_model.decode(tokens).data)


def test_decoder_first_frame_ignores_later_tokens(tiny_model):
    tokens, _ = tiny_model.encode(_video(5, seed=4))
    rng = np.random.default_rng(5)
    scrambled = tokens.indices.copy()
    scrambled[1:] = rng.integers(0, 16, size=scrambled[1:].shape)
    a = tiny_model.decode(tokens).data
    b = tiny_model.decode(TokenGrid(scrambled, 16)).data
    np.testing.assert_array_equal(a[0], b[0])


def test_batched_encode_matches_single(tiny_model):
    videos = np.stack([_video(5, seed=s) for s in (6, 7)])
    batched, _ = tiny_model.encode(videos)
    assert batched.shape == (2, 3, 4, 4)
    for n in range(2):
        single, _ = tiny_model.encode(videos[n])
        np.testing.assert_array_equal(batched.indices[n], single.indices)


def test_encode_rejects_out_of_range_pixels(tiny_model):
    with pytest.raises(DomainError):
        tiny_model.encode(np.full((1, 8, 8, 3), 1.5))


def test_encode_rejects_bad_frame_count(tiny_model):
    with pytest.raises(ShapeError) as info:
        tiny_model.encode(_video(4))
    assert info.value.axis == "T"


def test_decode_rejects_codebook_mismatch(tiny_model):
    with pytest.raises(ShapeError) as info:
        tiny_model.decode(TokenGrid(np.zeros((1, 4, 4), dtype=np.int64), 32))
    assert info.value.axis == "D"


def test_full_model_gradients_without_quantization(tiny_model):
    video = Tensor(_video(3, seed=8))
    names = ["encoder.conv_in.kernel", "decoder.stage0.adanorm.w_gamma", "decoder.conv_out.kernel"]
    rng = np.random.default_rng(9)
    # nonzero adaptive projections so their gradient path is exercised
    start = [Tensor(tiny_model.params[n].data + 0.05 * rng.normal(size=tiny_model.params[n].shape)) for n in names]

    def loss(*tensors):
        params = dict(tiny_model.params)
        params.update(zip(names, tensors))
        return ops.mse(tiny_model.reconstruct(video, params, quantize=False), video)

    report = check_gradients(loss, start, probes=40)
    print(f"[DEBUG] full model max relative error {report.max_rel_error:.3g}")
    if not report.ok(1e-3):
        pytest.fail(f"worst probe {report.worst}")


# ──────────────────────────────────────────────────────────────────────────────
# INFLATION
# ──────────────────────────────────────────────────────────────────────────────

def test_inflate_kernel_layout():
    w = np.random.default_rng(10).normal(size=(3, 3, 2, 4))
    np.testing.assert_array_equal(inflate_2d_to_3d(w, 1), w[None])
    out = inflate_2d_to_3d(w, 3)
    assert out.shape == (3, 3, 3, 2, 4)
    assert not out[:2].any()
    np.testing.assert_array_equal(out[2], w)
    with pytest.raises(DimensionError):
        inflate_2d_to_3d(np.zeros((2, 3, 3, 2, 4)), 3)


def test_inflated_model_reproduces_image_outputs():
    image_model = TokenizerModel(tiny_config(temporal_kernel_size=1, seed=3))
    video_model = inflate_model(image_model, 3)
    assert video_model.config.temporal_kernel_size == 3
    image = _video(1, seed=11)
    np.testing.assert_allclose(video_model.encode_latents(image).data, image_model.encode_latents(image).data,
                               rtol=0, atol=1e-12)
    np.testing.assert_allclose(video_model.reconstruct(image).data, image_model.reconstruct(image).data,
                               rtol=0, atol=1e-12)
    clip = _video(5, seed=12)
    assert video_model.reconstruct(clip).shape == clip.shape


def test_inflate_requires_image_model(tiny_model):
    with pytest.raises(DimensionError):
        inflate_model(tiny_model, 3)


# ──────────────────────────────────────────────────────────────────────────────
# CHECKPOINTS
# ──────────────────────────────────────────────────────────────────────────────

def test_checkpoint_round_trip_is_exact(tmp_path: Path, tiny_model):
    path = save_model(tmp_path / "tiny.lfqc", tiny_model, {"note": "unit"})
    loaded = load_model(path)
    assert loaded.config == tiny_model.config
    for name, tensor in tiny_model.params.items():
        np.testing.assert_array_equal(loaded.params[name].data, tensor.data)
    video = _video(5, seed=13)
    np.testing.assert_array_equal(loaded.encode(video)[0].indices, tiny_model.encode(video)[0].indices)


def test_checkpoint_groups_and_metadata():
    cfg = tiny_config()
    data = encode_checkpoint(cfg, {"params": {"w": np.arange(6.0).reshape(2, 3)}, "ema": {"w": np.ones((2, 3))}},
                             {"step": 7})
    ckpt = decode_checkpoint(data)
    assert isinstance(ckpt, Checkpoint)
    assert sorted(ckpt.groups) == ["ema", "params"]
    assert ckpt.metadata == {"step": 7}
    np.testing.assert_array_equal(ckpt.groups["params"]["w"], np.arange(6.0).reshape(2, 3))
    with pytest.raises(FormatError) as info:
        ckpt.model("adam_m")
    assert info.value.field == "group"


@pytest.mark.parametrize(
    "mutate,field",
    [(lambda b: b"XXXX" + b[4:], "magic"),
     (lambda b: b[:4] + b"\x09" + b[5:], "version"),
     (lambda b: b[:20], "metadata"),
     (lambda b: b[:-3], "payload of params/w"),
     (lambda b: b.replace(b"params/w", b"params/\xff"), "name"),
     (lambda b: b.replace(b"params/w", b"paramsxw"), "name"),
     (lambda b: b + b"\x00", "trailer")],
    ids=["magic", "version", "metadata", "payload", "name-not-utf8", "name-no-group", "trailer"],
)
def test_checkpoint_errors_name_the_field(mutate, field):
    data = encode_checkpoint(tiny_config(), {"params": {"w": np.ones(3)}})
    with pytest.raises(FormatError) as info:
        decode_checkpoint(mutate(data))
    assert info.value.field == field


def test_checkpoint_with_different_lfq_round_trips(tmp_path: Path):
    cfg = tiny_config(lfq=LfqConfig(codebook_size=64, subgroup_size=3, num_subspaces=2))
    model = TokenizerModel(cfg)
    assert load_model(save_model(tmp_path / "m.lfqc", model)).config.lfq == cfg.lfq
