import numpy as np
import pytest
from hypothesis import given, strategies as st

from drivermon.errors import MissingWeight, ShapeMismatch
from drivermon.micronet import (BlockSpec, ModelSpec, MultiTaskNet, StemSpec, bundled_spec,
                                conv2d, count_macs, count_params, depthwise_conv, forward,
                                global_avg_pool, inverted_residual, layer_inventory,
                                pointwise_conv, random_weights, separable_conv_params,
                                separable_savings, spec_from_dict, standard_conv_params,
                                zero_weights)
from drivermon.micronet.layers import out_size

import oracles

TOY = ModelSpec(StemSpec(8), (BlockSpec(8, 8, 2, 1), BlockSpec(8, 12, 3, 2), BlockSpec(12, 16, 2, 2, 5)),
                (0, 1, 2), head_out=209, input_size=(3, 16, 16), name="toy")


def test_depthwise_examples():
    x = np.random.default_rng(0).normal(size=(3, 6, 6)).astype(np.float32)
    ident = np.zeros((3, 3, 3), np.float32)
    ident[:, 1, 1] = 1
    assert np.array_equal(depthwise_conv(x, ident), x)
    ones = depthwise_conv(np.ones((1, 5, 5)), np.ones((1, 3, 3)))
    assert ones[0, 2, 2] == 9 and ones[0, 0, 0] == 4 and ones[0, 0, 2] == 6
    assert depthwise_conv(np.ones((2, 8, 8)), np.ones((2, 3, 3)), stride=2).shape == (2, 4, 4)
    with pytest.raises(ShapeMismatch):
        depthwise_conv(x, np.ones((2, 3, 3)))


def test_pointwise_examples():
    x = np.random.default_rng(1).normal(size=(4, 3, 3)).astype(np.float32)
    assert np.array_equal(pointwise_conv(x, np.eye(4)), x)
    out = pointwise_conv(x, np.zeros((2, 4)), bias=[1.5, -2.0])
    assert np.all(out[0] == 1.5) and np.all(out[1] == -2.0)
    w = np.random.default_rng(2).normal(size=(6, 4))
    x2 = np.random.default_rng(3).normal(size=(4, 2, 2))
    assert oracles.rel_err(pointwise_conv(x2, w), oracles.naive_pointwise(x2, w)) < 1e-6
    with pytest.raises(ShapeMismatch):
        pointwise_conv(x, np.eye(3))


def test_gap_examples():
    assert np.array_equal(global_avg_pool(np.full((2, 3, 3), 0.75)), [0.75, 0.75])
    assert np.array_equal(global_avg_pool(np.array([[[1.0, 2.0], [3.0, 4.0]]])), [2.5])
    v = np.array([[[3.0]], [[-1.0]]])
    assert np.array_equal(global_avg_pool(v), [3.0, -1.0])


@pytest.mark.parametrize("h,s", [(8, 2), (7, 2), (5, 1), (1, 2), (16, 2)])
def test_output_size_is_ceil(h, s):
    y = conv2d(np.ones((1, h, h)), np.ones((2, 1, 3, 3)), stride=s)
    assert y.shape == (2, -(-h // s), -(-h // s)) and out_size(h, s) == -(-h // s)


def test_kernel_rules():
    with pytest.raises(ShapeMismatch):
        depthwise_conv(np.ones((1, 4, 4)), np.ones((1, 2, 2)))
    with pytest.raises(ShapeMismatch):
        conv2d(np.ones((1, 4, 4)), np.ones((1, 1, 3, 3)), stride=3)
    with pytest.raises(ValueError):
        BlockSpec(4, 4, 1, 3)


def test_block_zero_projection_is_identity_bit_exact():
    b = BlockSpec(4, 4, 3, 1)
    rng = np.random.default_rng(4)
    w = {"expand.weight": rng.normal(size=(12, 4)), "expand.bias": rng.normal(size=12),
         "depthwise.weight": rng.normal(size=(12, 3, 3)), "depthwise.bias": rng.normal(size=12),
         "project.weight": np.zeros((4, 12)), "project.bias": np.zeros(4)}
    x = rng.normal(size=(4, 7, 7)).astype(np.float32)
    assert np.array_equal(inverted_residual(x, b, w), x)


def test_block_stride2_has_no_residual():
    b = BlockSpec(4, 4, 1, 2)
    w = {"expand.weight": np.eye(4), "depthwise.weight": np.zeros((4, 3, 3)),
         "project.weight": np.zeros((4, 4))}
    out = inverted_residual(np.ones((4, 6, 6)), b, w)
    assert out.shape == (4, 3, 3) and np.all(out == 0)
    assert not b.residual and BlockSpec(4, 4, 1, 1).residual and not BlockSpec(4, 8, 1, 1).residual


def test_block_matches_oracle():
    b = BlockSpec(2, 2, 2, 1)
    spec = ModelSpec(StemSpec(2), (b,), (0,), input_size=(3, 4, 4))
    ws = random_weights(spec, seed=5)
    x = np.random.default_rng(6).normal(size=(2, 4, 4)).astype(np.float32)
    got = inverted_residual(x, b, ws, prefix="blocks.0.")
    assert oracles.rel_err(got, oracles.naive_block(x, b, ws, "blocks.0.")) < 1e-5


def test_forward_zero_weights_gives_zeros():
    spec = bundled_spec("tiny")
    out = forward(spec, zero_weights(spec), np.random.default_rng(0).random((3, 160, 160)))
    assert out.shape == (209,) and np.all(out == 0)


def test_forward_head_linearity():
    ws = random_weights(TOY, seed=7)
    ws = type(ws)({**ws, "head.bias": np.zeros(209, np.float32)})
    img = np.random.default_rng(8).random((3, 16, 16))
    base = forward(TOY, ws, img)
    assert np.array_equal(forward(TOY, ws.scaled("head.weight", 2.0), img), 2 * base)


def test_forward_matches_layer_by_layer_oracle():
    ws = random_weights(TOY, seed=9)
    img = np.random.default_rng(10).random((3, 16, 16))
    assert oracles.rel_err(forward(TOY, ws, img), oracles.naive_forward(TOY, ws, img)) < 1e-5


def test_forward_deterministic_and_errors():
    net = MultiTaskNet(TOY, random_weights(TOY, seed=11))
    img = np.random.default_rng(12).random((3, 16, 16))
    a, b = net(img), net(img)
    assert a.tobytes() == b.tobytes()
    with pytest.raises(ShapeMismatch):
        net(np.zeros((3, 15, 16)))
    partial = {k: v for k, v in random_weights(TOY).items() if k != "head.bias"}
    with pytest.raises(MissingWeight):
        MultiTaskNet(TOY, type(net.weights)(partial))


def test_forward_thread_determinism():
    from concurrent.futures import ThreadPoolExecutor

    net = MultiTaskNet(TOY, random_weights(TOY, seed=13))
    img = np.random.default_rng(14).random((3, 16, 16))
    ref = net(img).tobytes()
    with ThreadPoolExecutor(4) as pool:
        outs = list(pool.map(lambda _: net(img).tobytes(), range(8)))
    assert all(o == ref for o in outs)


# ---------------------------------------------------------------- accounting

def test_conv_param_examples():
    assert standard_conv_params(3, 8, 16) == 1152
    assert separable_conv_params(3, 8, 16) == 200
    assert separable_savings(3, 8, 16) == 952
    # the printed alternative c((k-1)n^2 + k) disagrees with enumeration
    assert 8 * ((16 - 1) * 9 + 16) == 1208 != 1152 - 200


@given(st.integers(1, 7).map(lambda v: 2 * v - 1), st.integers(1, 64), st.integers(1, 64))
def test_separable_saving_identity(n, c, k):
    std = sum(1 for _ in np.ndindex(k, c, n, n))
    sep = sum(1 for _ in np.ndindex(c, n, n)) + sum(1 for _ in np.ndindex(k, c))
    assert std - sep == separable_savings(n, c, k) == standard_conv_params(n, c, k) - separable_conv_params(n, c, k)


@given(st.integers(1, 7).map(lambda v: 2 * v - 1), st.integers(1, 64), st.integers(1, 64), st.integers(1, 40))
def test_separable_macs_ordering(n, c, k, hw):
    std = hw * hw * n * n * c * k
    sep = hw * hw * n * n * c + hw * hw * c * k
    if n * n * c + c * k <= n * n * c * k:
        assert sep <= std


def test_layer_mac_examples():
    spec = ModelSpec(StemSpec(4), (BlockSpec(4, 8, 1, 1),), (0,), input_size=(3, 20, 20))
    inv = {l.name: l for l in layer_inventory(spec)}
    assert inv["blocks.0.expand"].macs == 100 * 4 * 4
    assert inv["blocks.0.depthwise"].macs == 3600
    assert inv["blocks.0.project"].macs == 3200


SPECS = [TOY, bundled_spec("tiny"), bundled_spec("small"), bundled_spec("large"),
         ModelSpec(StemSpec(6), (), (), input_size=(3, 12, 12)),
         ModelSpec(StemSpec(4, kernel=5, stride=1), (BlockSpec(4, 4, 1, 1, 1), BlockSpec(4, 6, 6, 2, 3)),
                   (1,), head_out=10, input_size=(3, 9, 11))]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.name + str(s.input_size))
def test_params_equal_enumeration(spec):
    assert count_params(spec) == oracles.enumerate_params(spec) == random_weights(spec).num_scalars


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.name + str(s.input_size))
def test_macs_equal_observed_shapes(spec):
    maps = MultiTaskNet(spec, zero_weights(spec)).features(np.zeros(spec.input_size))
    assert count_macs(spec) == oracles.macs_from_feature_shapes(spec, maps)


def test_macs_equal_op_counter_on_toy():
    counter = {"macs": 0}
    ws = random_weights(TOY, seed=1)
    oracles.naive_forward(TOY, ws, np.zeros(TOY.input_size), counter)
    assert count_macs(TOY) == counter["macs"]


def test_bundled_variants_are_ordered():
    counts = [count_params(bundled_spec(n)) for n in ("tiny", "small", "large")]
    assert counts == sorted(counts) and counts[0] > 50_000


def test_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec(StemSpec(8), (BlockSpec(4, 4),), (0,))
    with pytest.raises(ValueError):
        ModelSpec(StemSpec(8), (BlockSpec(8, 8), BlockSpec(8, 8)), (1, 0))
    with pytest.raises(ValueError):
        ModelSpec(StemSpec(8), (BlockSpec(8, 8), BlockSpec(8, 8)), (0,))
    with pytest.raises(ValueError):
        spec_from_dict({"blocks": [{"out": 8, "bogus": 1}]})
    s = spec_from_dict({"stem": {"out": 8}, "blocks": [{"out": 16, "t": 2, "s": 2, "repeat": 3}]})
    assert [b.stride for b in s.blocks] == [2, 1, 1] and s.taps == (2,)
    assert s.head_out == 209 and s.feature_size == 16


def test_head_input_is_sum_of_taps():
    assert TOY.feature_size == 8 + 12 + 16
    inv = layer_inventory(TOY)
    assert inv[-1].weight_shape == (209, 36)
