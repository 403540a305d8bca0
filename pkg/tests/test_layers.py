import numpy as np
import pytest

from lfqtok.errors import DimensionError, ShapeError
from lfqtok.layers import (
    CausalConv3dLayer,
    FrameMap,
    adaptive_group_norm,
    binomial_filter,
    blur_pool3d,
    causal_conv3d,
    causal_pair,
    depth_to_space,
    group_norm,
    regular_pair,
    resize_control,
    space_to_depth,
    strided_subsample,
    temporal_downsample,
    temporal_upsample,
)
from lfqtok.numerics import Tensor, check_gradients, ops

# ──────────────────────────────────────────────────────────────────────────────
# HELPERS
# ──────────────────────────────────────────────────────────────────────────────

FRAME_PAIRS = [(1, 4), (5, 4), (17, 4), (9, 2)]


def _rand(shape, seed=0):
    return np.random.default_rng(seed).normal(size=shape)


def _layer(kt, cin=2, cout=3, k=3, seed=0, stride=(1, 1, 1), causal=True):
    rng = np.random.default_rng(seed)
    return CausalConv3dLayer(
        kernel=Tensor(rng.normal(size=(kt, k, k, cin, cout))),
        bias=Tensor(rng.normal(size=(cout,))),
        stride=stride,
        causal=causal,
    )


# ──────────────────────────────────────────────────────────────────────────────
# CAUSAL CONVOLUTION
# ──────────────────────────────────────────────────────────────────────────────

@pytest.mark.parametrize("kt,causal,regular", [(3, (2, 0), (1, 1)), (1, (0, 0), (0, 0)), (4, (3, 0), (1, 2))])
def test_padding_pairs(kt, causal, regular):
    assert causal_pair(kt) == causal
    assert regular_pair(kt) == regular
    assert _layer(kt).temporal_padding == causal
    assert _layer(kt, causal=False).temporal_padding == regular


def test_causal_conv_equals_masked_regular_conv():
    x = Tensor(_rand((6, 4, 4, 2)))
    layer = _layer(3)
    got = causal_conv3d(x, layer).data
    # a regular 5-tap conv whose two future taps are zero computes the same thing
    masked = np.concatenate([layer.kernel.data, np.zeros((2,) + layer.kernel.shape[1:])], axis=0)
    regular = CausalConv3dLayer(kernel=Tensor(masked), bias=layer.bias, causal=False)
    np.testing.assert_allclose(got, causal_conv3d(x, regular).data, rtol=0, atol=1e-12)


@pytest.mark.parametrize("t", [0, 1, 2, 4])
def test_causal_conv_ignores_future_frames(t):
    x = _rand((6, 4, 4, 2))
    layer = _layer(3, seed=1)
    base = causal_conv3d(Tensor(x), layer).data
    moved = x.copy()
    moved[t + 1:] = _rand(moved[t + 1:].shape, seed=99)
    out = causal_conv3d(Tensor(moved), layer).data
    np.testing.assert_array_equal(out[:t + 1], base[:t + 1])


def test_causal_conv_rejects_bad_rank():
    with pytest.raises(DimensionError):
        causal_conv3d(Tensor(np.zeros((4, 4, 2))), _layer(1))


def test_causal_conv_gradients():
    x = Tensor(_rand((3, 3, 3, 2), seed=2))
    layer = _layer(3, seed=3)

    def loss(inp, kernel, bias):
        out = causal_conv3d(inp, CausalConv3dLayer(kernel=kernel, bias=bias))
        return ops.reduce_sum(ops.tanh(out))

    assert check_gradients(loss, [x, layer.kernel, layer.bias], probes=60).ok(1e-4)


# ──────────────────────────────────────────────────────────────────────────────
# TEMPORAL RESAMPLING
# ──────────────────────────────────────────────────────────────────────────────

@pytest.mark.parametrize("frames,stride", FRAME_PAIRS, ids=lambda v: str(v))
def test_frame_arithmetic_round_trip(frames, stride):
    x = Tensor(_rand((frames, 2, 2, 1)))
    down = temporal_downsample(x, stride)
    assert down.shape[0] == 1 + (frames - 1) // stride
    assert FrameMap.downsample(frames, stride).frames_out == down.shape[0]
    up = temporal_upsample(down, stride)
    assert up.shape[0] == frames


def test_identity_downsample_keeps_every_s_th_frame():
    x = _rand((9, 2, 2, 3))
    down = temporal_downsample(Tensor(x), 2).data
    np.testing.assert_array_equal(down, x[::2])


def test_downsample_rejects_bad_frame_count():
    with pytest.raises(ShapeError) as info:
        temporal_downsample(Tensor(np.zeros((8, 2, 2, 1))), 4)
    assert info.value.axis == "T"


def test_strided_causal_conv_impulse_alignment():
    x = np.zeros((9, 1, 1, 1))
    x[3] = 1.0
    layer = CausalConv3dLayer(kernel=Tensor(np.ones((3, 1, 1, 1, 1))), stride=(2, 1, 1))
    out = temporal_downsample(Tensor(x), 2, layer).data[:, 0, 0, 0]
    assert out.shape == (5,)
    assert np.flatnonzero(out)[0] == 2


def test_downsample_layer_must_match_stride():
    layer = CausalConv3dLayer(kernel=Tensor(np.ones((3, 1, 1, 1, 1))), stride=(1, 1, 1))
    with pytest.raises(DimensionError):
        temporal_downsample(Tensor(np.zeros((9, 1, 1, 1))), 2, layer)


def test_upsample_repeats_then_drops_leading_frames():
    a, b = np.full((1, 1, 1), 1.0), np.full((1, 1, 1), 2.0)
    x = Tensor(np.stack([a, b]))
    up = temporal_upsample(x, 2).data[:, 0, 0, 0]
    np.testing.assert_array_equal(up, [1.0, 2.0, 2.0])


def test_upsample_single_frame_passes_through():
    x = Tensor(_rand((1, 3, 3, 2)))
    np.testing.assert_array_equal(temporal_upsample(x, 4).data, x.data)


def test_upsample_is_causal():
    x = _rand((5, 2, 2, 1))
    moved = x.copy()
    moved[3:] += 1.0
    a = temporal_upsample(Tensor(x), 4).data
    b = temporal_upsample(Tensor(moved), 4).data
    # output frame t reads latent frame ceil(t / 4)
    np.testing.assert_array_equal(a[:9], b[:9])
    assert not np.array_equal(a[9:], b[9:])


# ──────────────────────────────────────────────────────────────────────────────
# DEPTH TO SPACE
# ──────────────────────────────────────────────────────────────────────────────

def test_depth_to_space_block_order():
    x = Tensor(np.array([1.0, 2.0, 3.0, 4.0]).reshape(1, 1, 1, 4))
    out = depth_to_space(x, 2)
    assert out.shape == (1, 2, 2, 1)
    np.testing.assert_array_equal(out.data[0, :, :, 0], [[1.0, 2.0], [3.0, 4.0]])


def test_depth_to_space_identity_and_inverse():
    x = Tensor(_rand((2, 3, 3, 8)))
    assert depth_to_space(x, 1) is x
    np.testing.assert_array_equal(space_to_depth(depth_to_space(x, 2), 2).data, x.data)
    y = Tensor(_rand((2, 2, 4, 4, 3)))
    np.testing.assert_array_equal(depth_to_space(space_to_depth(y, 2), 2).data, y.data)


def test_depth_to_space_rejects_channels():
    with pytest.raises(ShapeError) as info:
        depth_to_space(Tensor(np.zeros((1, 1, 1, 6))), 2)
    assert info.value.axis == "C"


def test_depth_to_space_gradients():
    x = Tensor(_rand((1, 2, 2, 8), seed=4))
    assert check_gradients(lambda a: ops.reduce_sum(ops.tanh(depth_to_space(a, 2))), [x], probes=30).ok(1e-4)


# ──────────────────────────────────────────────────────────────────────────────
# BLUR POOLING
# ──────────────────────────────────────────────────────────────────────────────

def test_binomial_taps():
    np.testing.assert_allclose(binomial_filter(3).coeffs, [0.25, 0.5, 0.25])


def test_blur_preserves_constants():
    x = Tensor(np.full((5, 8, 8, 2), 0.5))
    for stride in ((1, 1, 1), (1, 2, 2), (2, 2, 2)):
        out = blur_pool3d(x, stride, causal_temporal=False)
        np.testing.assert_array_equal(out.data, np.full(out.shape, 0.5))


def test_blur_one_dimensional_slice():
    x = Tensor(np.array([0.0, 0.0, 4.0, 0.0, 0.0]).reshape(1, 1, 5, 1))
    out = blur_pool3d(x, (1, 1, 1)).data.reshape(-1)
    np.testing.assert_allclose(out, [0.0, 1.0, 2.0, 1.0, 0.0], atol=1e-15)


def test_blur_is_causal_in_time():
    x = _rand((6, 4, 4, 1))
    moved = x.copy()
    moved[3:] = 0.0
    a = blur_pool3d(Tensor(x), (1, 2, 2)).data
    b = blur_pool3d(Tensor(moved), (1, 2, 2)).data
    np.testing.assert_array_equal(a[:3], b[:3])


def _smooth(rng, shape):
    x = rng.normal(size=shape)
    for axis in (1, 2):
        x = (x + np.roll(x, 1, axis) + np.roll(x, -1, axis)) / 3.0
    return x


def test_blur_is_more_shift_robust_than_plain_striding():
    rng = np.random.default_rng(5)
    blur_err, naive_err = [], []
    for _ in range(50):
        x = _smooth(rng, (1, 16, 16, 1))
        shifted = np.roll(x, 1, axis=2)
        blur_err.append(np.linalg.norm(blur_pool3d(Tensor(shifted)).data - blur_pool3d(Tensor(x)).data))
        naive_err.append(np.linalg.norm(strided_subsample(Tensor(shifted), (1, 2, 2)).data
                                        - strided_subsample(Tensor(x), (1, 2, 2)).data))
    print(f"[DEBUG] blur {np.mean(blur_err):.4f} vs strided {np.mean(naive_err):.4f}")
    assert np.mean(blur_err) <= np.mean(naive_err)


def test_blur_gradients():
    x = Tensor(_rand((3, 4, 4, 2), seed=6))
    report = check_gradients(lambda a: ops.reduce_sum(ops.tanh(blur_pool3d(a))), [x], probes=40)
    assert report.ok(1e-4), report.worst


# ──────────────────────────────────────────────────────────────────────────────
# NORMALIZATION
# ──────────────────────────────────────────────────────────────────────────────

@pytest.mark.parametrize("groups", [1, 2, 4])
def test_group_norm_statistics(groups):
    x = _rand((3, 4, 4, 8), seed=7) * 3.0 + 1.5
    out = group_norm(Tensor(x), groups).data
    per_group = out.reshape(3, 16, groups, 8 // groups)
    means = per_group.mean(axis=(1, 3))
    variances = per_group.var(axis=(1, 3))
    assert np.max(np.abs(means)) < 1e-10
    assert np.max(np.abs(variances - 1.0)) < 1e-4


def test_group_norm_is_per_frame():
    x = _rand((4, 3, 3, 4), seed=8)
    moved = x.copy()
    moved[2:] *= 10.0
    a = group_norm(Tensor(x), 2).data
    b = group_norm(Tensor(moved), 2).data
    np.testing.assert_array_equal(a[:2], b[:2])


def test_group_norm_rejects_groups():
    with pytest.raises(ShapeError):
        group_norm(Tensor(np.zeros((1, 2, 2, 6))), 4)


def test_adaptive_norm_with_zero_projection_is_group_norm():
    x = Tensor(_rand((5, 4, 4, 4), seed=9))
    control = Tensor(np.sign(_rand((2, 2, 2, 3), seed=10)))
    zeros = Tensor(np.zeros((3, 4)))
    out = adaptive_group_norm(x, control, 2, zeros, zeros)
    np.testing.assert_allclose(out.data, group_norm(x, 2).data, rtol=0, atol=1e-15)


def test_adaptive_norm_applies_scale_and_shift():
    x = Tensor(_rand((1, 2, 2, 2), seed=11))
    control = Tensor(np.ones((1, 1, 1, 1)))
    w_gamma, w_beta = Tensor(np.array([[1.0, 0.0]])), Tensor(np.array([[0.5, -0.5]]))
    out = adaptive_group_norm(x, control, 1, w_gamma, w_beta).data
    normed = group_norm(x, 1).data
    np.testing.assert_allclose(out, normed * np.array([2.0, 1.0]) + np.array([0.5, -0.5]))


def test_resize_control_is_causal_nearest():
    control = Tensor(np.arange(2.0).reshape(2, 1, 1, 1))
    target = Tensor(np.zeros((5, 2, 2, 1)))
    resized = resize_control(control, target).data
    assert resized.shape == (5, 2, 2, 1)
    np.testing.assert_array_equal(resized[:, 0, 0, 0], [0.0, 1.0, 1.0, 1.0, 1.0])


def test_resize_control_rejects_incompatible_frames():
    with pytest.raises(ShapeError) as info:
        resize_control(Tensor(np.zeros((3, 1, 1, 1))), Tensor(np.zeros((4, 1, 1, 1))))
    assert info.value.axis == "T"


def test_adaptive_norm_gradients():
    rng = np.random.default_rng(12)
    x = Tensor(rng.normal(size=(3, 2, 2, 4)))
    control = Tensor(rng.normal(size=(2, 1, 1, 2)))
    wg, wb = Tensor(rng.normal(size=(2, 4)) * 0.3), Tensor(rng.normal(size=(2, 4)) * 0.3)
    bg, bb = Tensor(rng.normal(size=(4,))), Tensor(rng.normal(size=(4,)))

    def loss(a, c, g, b, g0, b0):
        return ops.reduce_sum(ops.tanh(adaptive_group_norm(a, c, 2, g, b, g0, b0)))

    report = check_gradients(loss, [x, control, wg, wb, bg, bb], probes=80)
    assert report.ok(1e-4), report.worst
