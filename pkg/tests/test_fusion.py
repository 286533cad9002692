"""Fusion stack: layer norm, causal conv, gated scan, residual blocks."""

import math

import numpy as np
import pytest

from statefuse import (
    DiscreteSsmBank,
    FusedQuerySequence,
    Gs4Params,
    NumericOverflowError,
    QueryMambaStack,
    ValidationError,
    depthwise_causal_conv,
    gs4_layer,
    layer_norm,
    query_mamba_block,
    query_mamba_stack,
    seeded_layer_params,
    seeded_stack,
    zero_layer_params,
    zero_stack,
)

GELU_ONE = 0.5 * (1.0 + math.erf(1.0 / math.sqrt(2.0)))


def feed_through_bank(e=1):
    # scan output equals its input: no state, unit feed-through
    zeros = np.zeros((e, 1))
    return DiscreteSsmBank(zeros, zeros, zeros, np.ones(e))


# --- layer norm ---

def test_layer_norm_constant_row_is_shift():
    x = np.full((2, 5), 3.7)
    out = layer_norm(x, np.ones(5), np.zeros(5), 1e-6)
    assert np.max(np.abs(out)) == 0.0


def test_layer_norm_two_point_row():
    out = layer_norm(np.array([-1.0, 1.0]), np.ones(2), np.zeros(2), 0.0)
    assert np.array_equal(out, [-1.0, 1.0])


def test_layer_norm_three_point_row():
    # population variance of (1, 2, 3) is 2/3, so the ends map to sqrt(3/2)
    out = layer_norm(np.array([1.0, 2.0, 3.0]), np.ones(3), np.zeros(3), 0.0)
    want = math.sqrt(1.5)
    assert abs(want - 1.224744871391589) < 1e-15
    assert np.allclose(out, [-want, 0.0, want], rtol=0, atol=1e-15)


def test_layer_norm_affine_params():
    x = np.array([1.0, 2.0, 3.0])
    base = layer_norm(x, np.ones(3), np.zeros(3), 0.0)
    out = layer_norm(x, 2.0 * np.ones(3), 5.0 * np.ones(3), 0.0)
    assert np.allclose(out, 2.0 * base + 5.0, rtol=0, atol=1e-12)


def test_layer_norm_rejects_non_finite():
    with pytest.raises(ValidationError):
        layer_norm(np.array([1.0, float("nan")]), np.ones(2), np.zeros(2), 1e-6)


# --- depthwise causal conv ---

def test_dwconv_identity_tap():
    x = np.arange(8.0).reshape(4, 2)
    out = depthwise_causal_conv(x, np.ones((2, 1)))
    assert np.array_equal(out, x)


def test_dwconv_unit_delay():
    x = np.array([[1.0], [2.0], [3.0]])
    out = depthwise_causal_conv(x, np.array([[0.0, 1.0]]))
    assert np.array_equal(out, [[0.0], [1.0], [2.0]])


def test_dwconv_two_tap_average():
    x = np.array([[2.0], [4.0]])
    out = depthwise_causal_conv(x, np.array([[0.5, 0.5]]))
    assert np.array_equal(out, [[1.0], [3.0]])


def test_dwconv_per_channel_kernels():
    x = np.array([[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]])
    kernel = np.array([[1.0, 0.0], [0.0, 1.0]])
    out = depthwise_causal_conv(x, kernel)
    assert np.array_equal(out, [[1.0, 0.0], [1.0, 1.0], [1.0, 1.0]])


def test_dwconv_kernel_longer_than_sequence():
    x = np.array([[1.0], [2.0]])
    out = depthwise_causal_conv(x, np.array([[1.0, 1.0, 1.0, 1.0]]))
    assert np.array_equal(out, [[1.0], [3.0]])


# --- gated scan sublayer ---

def test_gs4_zero_value_gate_closes():
    bank = feed_through_bank()
    params = Gs4Params(bank, np.ones((1, 1)), np.zeros((1, 1)), np.ones((1, 1)))
    out = gs4_layer(np.array([[1.0], [2.0]]), params)
    assert np.array_equal(out, np.zeros((2, 1)))


def test_gs4_zero_input_stays_zero():
    bank = feed_through_bank()
    params = Gs4Params(bank, np.ones((1, 1)), np.ones((1, 1)), np.ones((1, 1)))
    out = gs4_layer(np.zeros((3, 1)), params)
    assert np.array_equal(out, np.zeros((3, 1)))


def test_gs4_unit_feed_through_squares_gelu():
    """With identity projections and a feed-through scan, y = gelu(x)^2."""
    bank = feed_through_bank()
    params = Gs4Params(bank, np.ones((1, 1)), np.ones((1, 1)), np.ones((1, 1)))
    out = gs4_layer(np.array([[1.0]]), params)
    assert abs(out[0, 0] - GELU_ONE**2) < 1e-15
    assert abs(out[0, 0] - 0.707860981737141) < 1e-15


def test_gs4_overflow_raises():
    bank = feed_through_bank()
    big = np.full((1, 1), 1e300)
    params = Gs4Params(bank, big, big, big)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(NumericOverflowError):
            gs4_layer(np.array([[1e300]]), params)


# --- residual blocks ---

def seq(rng, n=4, k=2, d=4):
    data = rng.uniform(-1.0, 1.0, size=(n, k * d))
    return FusedQuerySequence(data, tuple(range(n)), k, d)


def test_zero_block_is_identity():
    rng = np.random.default_rng(53)
    x = seq(rng, n=4, k=2, d=4)
    out = query_mamba_block(x, zero_layer_params(8))
    assert np.array_equal(out.data, x.data)
    assert out.frame_order == x.frame_order


def test_zero_stack_is_identity():
    rng = np.random.default_rng(59)
    x = seq(rng, n=7, k=3, d=4)
    out = query_mamba_stack(x, zero_stack(12, n_layers=6))
    assert np.array_equal(out.data, x.data)


def test_seeded_block_output_well_formed():
    rng = np.random.default_rng(61)
    x = seq(rng, n=4, k=2, d=4)
    out = query_mamba_block(x, seeded_layer_params(8, seed=1))
    assert out.data.shape == x.data.shape
    assert np.all(np.isfinite(out.data))
    assert not np.array_equal(out.data, x.data)


def test_seeded_stack_repeatable():
    rng = np.random.default_rng(67)
    x = seq(rng, n=5, k=2, d=4)
    a = query_mamba_stack(x, seeded_stack(8, seed=2, n_layers=6))
    b = query_mamba_stack(x, seeded_stack(8, seed=2, n_layers=6))
    assert np.array_equal(a.data, b.data)


def test_stack_layers_differ_by_index():
    s = seeded_stack(6, seed=4, n_layers=3)
    assert not np.array_equal(s.layers[0].out_weight, s.layers[1].out_weight)


def test_stack_reports_offending_layer():
    # the normalized row (-1, 1) hits 1e300 gains, and the gate squares it
    good = zero_layer_params(2)
    bad_gs4 = Gs4Params(
        feed_through_bank(2),
        np.diag([1e300, 1e300]),
        np.diag([1e300, 1e300]),
        np.eye(2),
    )
    bad = type(good)(
        ln1=good.ln1,
        ln2=good.ln2,
        dw_kernel=good.dw_kernel,
        gs4=bad_gs4,
        out_weight=good.out_weight,
        out_bias=good.out_bias,
    )
    x = FusedQuerySequence(np.array([[0.0, 2.0], [0.0, 2.0]]), (0, 1), 1, 2)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(NumericOverflowError, match="layer 1"):
            query_mamba_stack(x, QueryMambaStack((good, bad)))


def test_block_rejects_width_mismatch():
    rng = np.random.default_rng(71)
    x = seq(rng, n=3, k=2, d=4)
    with pytest.raises(ValidationError):
        query_mamba_block(x, zero_layer_params(9))


def test_sequence_validates_frame_order():
    data = np.zeros((3, 4))
    with pytest.raises(ValidationError):
        FusedQuerySequence(data, (0, 1, 1), 2, 2)
    with pytest.raises(ValidationError):
        FusedQuerySequence(data, (0, 1), 2, 2)


def test_sequence_validates_width():
    with pytest.raises(ValidationError):
        FusedQuerySequence(np.zeros((2, 5)), (0, 1), 2, 2)
