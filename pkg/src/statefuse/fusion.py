"""Temporal fusion of query sequences with gated state-space layers.

The fusion operand is a channel-concatenated query sequence: one row per
frame (oldest to newest), each row the K per-frame query vectors of width D
laid side by side, so E = K * D channels.  A fusion layer is

    z   = DWConv(LN1(x)) + LN1(x)
    z'  = GS4(LN2(z)) + LN2(z)
    out = Linear(z') + x

where GS4 gates a bank of per-channel state-space scans:

    u = GELU(x @ W_u);  v = GELU(x @ W_v)
    s[:, e] = scan of channel e over u[:, e]
    y = (s * v) @ W_o

Every stage is causal along the frame axis, and the final residual makes an
all-zero-weight layer an exact identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericOverflowError, ValidationError
from .numerics import as_float_array, gelu, readonly
from .ssm import DiscreteSsmBank, scan_bank, seeded_bank


@dataclass(frozen=True)
class LayerNormParams:
    scale: np.ndarray
    shift: np.ndarray
    epsilon: float

    def __post_init__(self):
        scale = as_float_array(self.scale, "scale")
        if scale.ndim != 1 or scale.size == 0:
            raise ValidationError("scale must be a non-empty 1-d vector")
        shift = as_float_array(self.shift, "shift", shape=scale.shape)
        eps = float(self.epsilon)
        if not np.isfinite(eps) or eps <= 0.0:
            raise ValidationError("epsilon must be a positive finite number")
        object.__setattr__(self, "scale", readonly(scale))
        object.__setattr__(self, "shift", readonly(shift))
        object.__setattr__(self, "epsilon", eps)


@dataclass(frozen=True)
class Gs4Params:
    """Gated state-space sublayer: channel bank plus gating projections."""

    bank: DiscreteSsmBank
    w_u: np.ndarray
    w_v: np.ndarray
    w_o: np.ndarray

    def __post_init__(self):
        e = self.bank.n_channels
        w_u = as_float_array(self.w_u, "w_u", shape=(e, e))
        w_v = as_float_array(self.w_v, "w_v", shape=(e, e))
        w_o = as_float_array(self.w_o, "w_o", shape=(e, e))
        object.__setattr__(self, "w_u", readonly(w_u))
        object.__setattr__(self, "w_v", readonly(w_v))
        object.__setattr__(self, "w_o", readonly(w_o))

    @property
    def n_channels(self) -> int:
        return self.bank.n_channels


@dataclass(frozen=True)
class QueryMambaLayerParams:
    ln1: LayerNormParams
    ln2: LayerNormParams
    dw_kernel: np.ndarray
    gs4: Gs4Params
    out_weight: np.ndarray
    out_bias: np.ndarray

    def __post_init__(self):
        e = self.gs4.n_channels
        if self.ln1.scale.size != e or self.ln2.scale.size != e:
            raise ValidationError("layer norm width must match the channel count")
        kernel = as_float_array(self.dw_kernel, "dw_kernel")
        if kernel.ndim != 2 or kernel.shape[0] != e or kernel.shape[1] < 1:
            raise ValidationError("dw_kernel must have shape (E, ksize) with ksize >= 1")
        w = as_float_array(self.out_weight, "out_weight", shape=(e, e))
        b = as_float_array(self.out_bias, "out_bias", shape=(e,))
        object.__setattr__(self, "dw_kernel", readonly(kernel))
        object.__setattr__(self, "out_weight", readonly(w))
        object.__setattr__(self, "out_bias", readonly(b))

    @property
    def n_channels(self) -> int:
        return self.gs4.n_channels


@dataclass(frozen=True)
class QueryMambaStack:
    layers: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValidationError("stack needs at least one layer")
        e = layers[0].n_channels
        if any(layer.n_channels != e for layer in layers):
            raise ValidationError("all stack layers must share one channel count")
        object.__setattr__(self, "layers", layers)

    @property
    def n_channels(self) -> int:
        return self.layers[0].n_channels

    @property
    def n_layers(self) -> int:
        return len(self.layers)


@dataclass(frozen=True)
class FusedQuerySequence:
    """Channel-concatenated query sequence: rows are frames, oldest first."""

    data: np.ndarray
    frame_order: tuple
    k_queries: int
    embed_dim: int

    def __post_init__(self):
        data = as_float_array(self.data, "data")
        if data.ndim != 2 or data.shape[0] == 0:
            raise ValidationError("data must be a non-empty (N, E) array")
        k = int(self.k_queries)
        d = int(self.embed_dim)
        if k < 1 or d < 1:
            raise ValidationError("k_queries and embed_dim must be >= 1")
        if data.shape[1] != k * d:
            raise ValidationError(
                f"row width {data.shape[1]} must equal k_queries * embed_dim = {k * d}"
            )
        order = tuple(int(i) for i in self.frame_order)
        if len(order) != data.shape[0] or sorted(order) != list(range(data.shape[0])):
            raise ValidationError("frame_order must index every frame exactly once")
        object.__setattr__(self, "data", readonly(data))
        object.__setattr__(self, "frame_order", order)
        object.__setattr__(self, "k_queries", k)
        object.__setattr__(self, "embed_dim", d)

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def n_channels(self) -> int:
        return self.data.shape[1]

    def with_data(self, data: np.ndarray) -> "FusedQuerySequence":
        return FusedQuerySequence(data, self.frame_order, self.k_queries, self.embed_dim)


def layer_norm(x, scale, shift, epsilon) -> np.ndarray:
    """Normalize the last axis to zero mean / unit population variance.

    The epsilon = 0 limit is accepted so exact hand values stay expressible;
    callers guarding degenerate inputs should pass a positive epsilon.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] == 0:
        raise ValidationError("layer_norm input must have a non-empty last axis")
    if not np.all(np.isfinite(x)):
        raise ValidationError("layer_norm input contains NaN or Inf")
    epsilon = float(epsilon)
    if not np.isfinite(epsilon) or epsilon < 0.0:
        raise ValidationError("epsilon must be >= 0")
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return np.asarray(scale) * (x - mean) / np.sqrt(var + epsilon) + np.asarray(shift)


def depthwise_causal_conv(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Per-channel causal convolution with left zero padding.

    y[k, e] = sum_i kernel[e, i] * x[k - i, e], taking x[<0] = 0.
    """
    x = np.asarray(x)
    kernel = np.asarray(kernel)
    if x.ndim != 2:
        raise ValidationError("x must be an (N, E) array")
    if kernel.ndim != 2 or kernel.shape[0] != x.shape[1]:
        raise ValidationError("kernel must have shape (E, ksize)")
    out = kernel[:, 0] * x
    for i in range(1, kernel.shape[1]):
        if i < x.shape[0]:
            out[i:] += kernel[:, i] * x[:-i]
    return out


def gs4_layer(x: np.ndarray, params: Gs4Params) -> np.ndarray:
    """Gated state-space sublayer over an (N, E) sequence."""
    x = np.asarray(x)
    u = gelu(x @ params.w_u)
    v = gelu(x @ params.w_v)
    s = scan_bank(params.bank, u)
    y = (s * v) @ params.w_o
    if not np.all(np.isfinite(y)):
        raise NumericOverflowError("gs4 produced a non-finite value")
    return y


def _block_forward(data: np.ndarray, params: QueryMambaLayerParams) -> np.ndarray:
    ln1 = layer_norm(data, params.ln1.scale, params.ln1.shift, params.ln1.epsilon)
    z = depthwise_causal_conv(ln1, params.dw_kernel) + ln1
    ln2 = layer_norm(z, params.ln2.scale, params.ln2.shift, params.ln2.epsilon)
    zp = gs4_layer(ln2, params.gs4) + ln2
    return zp @ params.out_weight + params.out_bias + data


def query_mamba_block(x: FusedQuerySequence, params: QueryMambaLayerParams) -> FusedQuerySequence:
    """One fusion layer; the final residual adds the untouched input back."""
    if x.n_channels != params.n_channels:
        raise ValidationError(
            f"sequence width {x.n_channels} does not match layer width {params.n_channels}"
        )
    return x.with_data(_block_forward(x.data, params))


def query_mamba_stack(x: FusedQuerySequence, stack: QueryMambaStack) -> FusedQuerySequence:
    """Compose fusion layers in order; overflow reports the offending layer."""
    out = x
    for index, layer in enumerate(stack.layers):
        try:
            out = query_mamba_block(out, layer)
        except NumericOverflowError as exc:
            raise NumericOverflowError(f"layer {index}: {exc}") from exc
    return out


# === parameter construction ===

_WEIGHT_SCALE = 0.1


def seeded_layer_params(
    n_channels: int,
    seed,
    *,
    state_dim: int = 16,
    ksize: int = 3,
    delta: float = 0.1,
    epsilon: float = 1e-6,
) -> QueryMambaLayerParams:
    """Deterministic layer init: weights uniform in [-0.1, 0.1] from the seed."""
    e = int(n_channels)
    if e < 1:
        raise ValidationError("n_channels must be >= 1")
    rng = np.random.default_rng(seed)
    ones, zeros = np.ones(e), np.zeros(e)

    def w(*shape):
        return rng.uniform(-_WEIGHT_SCALE, _WEIGHT_SCALE, size=shape)

    bank_seed = int(rng.integers(0, 2**63 - 1))
    return QueryMambaLayerParams(
        ln1=LayerNormParams(ones, zeros, epsilon),
        ln2=LayerNormParams(ones, zeros, epsilon),
        dw_kernel=w(e, ksize),
        gs4=Gs4Params(
            bank=seeded_bank(e, state_dim, bank_seed, delta),
            w_u=w(e, e),
            w_v=w(e, e),
            w_o=w(e, e),
        ),
        out_weight=w(e, e),
        out_bias=w(e),
    )


def seeded_stack(
    n_channels: int,
    seed: int,
    *,
    n_layers: int = 6,
    state_dim: int = 16,
    ksize: int = 3,
    delta: float = 0.1,
    epsilon: float = 1e-6,
) -> QueryMambaStack:
    if int(n_layers) < 1:
        raise ValidationError("n_layers must be >= 1")
    layers = tuple(
        seeded_layer_params(
            n_channels,
            [int(seed), 0xF0, i],
            state_dim=state_dim,
            ksize=ksize,
            delta=delta,
            epsilon=epsilon,
        )
        for i in range(int(n_layers))
    )
    return QueryMambaStack(layers)


def zero_layer_params(
    n_channels: int,
    *,
    state_dim: int = 16,
    ksize: int = 3,
    delta: float = 0.1,
    epsilon: float = 1e-6,
) -> QueryMambaLayerParams:
    """All learnable weights zero (scales one, shifts zero): an exact identity."""
    e = int(n_channels)
    ones, zeros = np.ones(e), np.zeros(e)
    return QueryMambaLayerParams(
        ln1=LayerNormParams(ones, zeros, epsilon),
        ln2=LayerNormParams(ones, zeros, epsilon),
        dw_kernel=np.zeros((e, ksize)),
        gs4=Gs4Params(
            bank=seeded_bank(e, state_dim, 0, delta),
            w_u=np.zeros((e, e)),
            w_v=np.zeros((e, e)),
            w_o=np.zeros((e, e)),
        ),
        out_weight=np.zeros((e, e)),
        out_bias=zeros,
    )


def zero_stack(
    n_channels: int,
    *,
    n_layers: int = 6,
    state_dim: int = 16,
    ksize: int = 3,
    delta: float = 0.1,
    epsilon: float = 1e-6,
) -> QueryMambaStack:
    layer = zero_layer_params(
        n_channels, state_dim=state_dim, ksize=ksize, delta=delta, epsilon=epsilon
    )
    return QueryMambaStack(tuple(layer for _ in range(int(n_layers))))
