"""Transformer encoder producing a pooled fixed-dimension sentence embedding.

Scaled dot-product attention with masking, multi-head projection splits,
GELU feedforward blocks, post-layer-norm residuals, and learned position
embeddings. The encoder is a frozen feature extractor: weights are seeded
or loaded from file, never trained here. The pooled sentence vector is the
final hidden state at the [CLS] position.

Weight file format "MPE1": the magic, six little-endian int32 header fields
(num_layers, d_model, num_heads, d_ff, max_len, vocab_size), the layer-norm
epsilon as a little-endian float64, then all matrices as little-endian
float64 in the order token embeddings, position embeddings, and per layer
w_query, b_query, w_key, b_key, w_value, b_value, w_output, b_output,
attn_norm scale, attn_norm shift, w_ff_in, b_ff_in, w_ff_out, b_ff_out,
ff_norm scale, ff_norm shift.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import erf

from .binio import ByteReader, pack_f64, pack_f64_array, pack_i32
from .tokenizer import TokenSequence

WEIGHTS_MAGIC = b"MPE1"


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    max_len: int
    num_layers: int = 2
    d_model: int = 64
    num_heads: int = 4
    d_ff: int = 256
    layernorm_epsilon: float = 1e-12

    def __post_init__(self) -> None:
        for name in ("vocab_size", "max_len", "num_layers", "d_model", "num_heads", "d_ff"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.d_model % self.num_heads != 0:
            raise ValueError(
                f"d_model {self.d_model} not divisible by num_heads {self.num_heads}"
            )

    @property
    def d_k(self) -> int:
        return self.d_model // self.num_heads


@dataclass
class LayerWeights:
    w_query: np.ndarray
    b_query: np.ndarray
    w_key: np.ndarray
    b_key: np.ndarray
    w_value: np.ndarray
    b_value: np.ndarray
    w_output: np.ndarray
    b_output: np.ndarray
    attn_norm_scale: np.ndarray
    attn_norm_shift: np.ndarray
    w_ff_in: np.ndarray
    b_ff_in: np.ndarray
    w_ff_out: np.ndarray
    b_ff_out: np.ndarray
    ff_norm_scale: np.ndarray
    ff_norm_shift: np.ndarray


@dataclass
class EncoderWeights:
    config: EncoderConfig
    token_embeddings: np.ndarray
    position_embeddings: np.ndarray
    layers: list[LayerWeights] = field(repr=False)


def softmax(row: Sequence[float] | np.ndarray) -> np.ndarray:
    """Overflow-safe softmax of one row; -inf entries map to exactly 0."""
    x = np.asarray(row, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("softmax expects a non-empty 1-D row")
    if np.isnan(x).any() or np.isposinf(x).any():
        raise ValueError("softmax entries must be finite or -inf")
    finite = x[np.isfinite(x)]
    if finite.size == 0:
        raise ValueError("softmax row is fully masked (all -inf)")
    shifted = np.exp(x - finite.max())
    return shifted / shifted.sum()


def _masked_scores(q: np.ndarray, k: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    scores = (q @ k.T) / np.sqrt(k.shape[1])
    if mask is not None:
        scores[:, mask == 0] = -np.inf
    return scores


def _row_softmax(scores: np.ndarray) -> np.ndarray:
    finite_max = np.max(np.where(np.isfinite(scores), scores, -np.inf), axis=1, keepdims=True)
    shifted = np.exp(scores - finite_max)
    return shifted / shifted.sum(axis=1, keepdims=True)


def attention_weights(
    q: np.ndarray, k: np.ndarray, mask: Sequence[int] | np.ndarray | None = None
) -> np.ndarray:
    """Row-stochastic attention weight matrix softmax(QK^T / sqrt(d_k))."""
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    if q.ndim != 2 or k.ndim != 2 or q.shape[1] != k.shape[1]:
        raise ValueError(f"Q and K widths differ: {q.shape} vs {k.shape}")
    if mask is not None:
        mask = np.asarray(mask)
        if mask.shape != (k.shape[0],):
            raise ValueError("mask length must equal the number of key rows")
        if not mask.any():
            raise ValueError("all positions masked")
    return _row_softmax(_masked_scores(q, k, mask))


def attention(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    mask: Sequence[int] | np.ndarray | None = None,
) -> np.ndarray:
    """softmax(QK^T / sqrt(d_k))V with masked key positions scored -inf."""
    v = np.asarray(v, dtype=np.float64)
    weights = attention_weights(q, k, mask)
    if v.shape[0] != weights.shape[1]:
        raise ValueError(f"V has {v.shape[0]} rows, expected {weights.shape[1]}")
    return weights @ v


def layer_norm(
    x: np.ndarray, scale: np.ndarray, shift: np.ndarray, epsilon: float
) -> np.ndarray:
    """Per-position normalization (population variance) with scale and shift."""
    mean = x.mean(axis=-1, keepdims=True)
    var = np.mean((x - mean) ** 2, axis=-1, keepdims=True)
    return scale * ((x - mean) / np.sqrt(var + epsilon)) + shift


def gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))


def feed_forward(
    x: np.ndarray,
    w_in: np.ndarray,
    b_in: np.ndarray,
    w_out: np.ndarray,
    b_out: np.ndarray,
) -> np.ndarray:
    return gelu(x @ w_in + b_in) @ w_out + b_out


def init_weights(config: EncoderConfig, seed: int) -> EncoderWeights:
    """Draw all parameters from one seeded normal(0, 0.02^2) stream.

    Layer-norm scales start at 1 and shifts at 0; everything else comes from
    the stream in the documented file order, so identical (config, seed)
    yields bit-identical weights.
    """
    rng = np.random.default_rng(seed)

    def draw(*shape: int) -> np.ndarray:
        return rng.normal(0.0, 0.02, size=shape)

    d, f = config.d_model, config.d_ff
    token_embeddings = draw(config.vocab_size, d)
    position_embeddings = draw(config.max_len, d)
    layers = []
    for _ in range(config.num_layers):
        layers.append(
            LayerWeights(
                w_query=draw(d, d), b_query=draw(d),
                w_key=draw(d, d), b_key=draw(d),
                w_value=draw(d, d), b_value=draw(d),
                w_output=draw(d, d), b_output=draw(d),
                attn_norm_scale=np.ones(d), attn_norm_shift=np.zeros(d),
                w_ff_in=draw(d, f), b_ff_in=draw(f),
                w_ff_out=draw(f, d), b_ff_out=draw(d),
                ff_norm_scale=np.ones(d), ff_norm_shift=np.zeros(d),
            )
        )
    return EncoderWeights(config, token_embeddings, position_embeddings, layers)


def encoder_forward(tokens: TokenSequence, weights: EncoderWeights) -> np.ndarray:
    """Encode one token sequence into a d_model-dimensional [CLS] vector.

    Sequences shorter than config.max_len use the leading position
    embeddings; padded positions are masked out of every attention step.
    """
    config = weights.config
    ids = np.asarray(tokens.ids)
    mask = np.asarray(tokens.attention_mask)
    if ids.shape[0] > config.max_len:
        raise ValueError(f"sequence length {ids.shape[0]} exceeds max_len {config.max_len}")
    if (ids < 0).any() or (ids >= config.vocab_size).any():
        raise ValueError("token id out of range for the encoder vocabulary")

    x = weights.token_embeddings[ids] + weights.position_embeddings[: ids.shape[0]]
    d_k = config.d_k
    for layer in weights.layers:
        q = x @ layer.w_query + layer.b_query
        k = x @ layer.w_key + layer.b_key
        v = x @ layer.w_value + layer.b_value
        heads = [
            attention(
                q[:, h * d_k : (h + 1) * d_k],
                k[:, h * d_k : (h + 1) * d_k],
                v[:, h * d_k : (h + 1) * d_k],
                mask,
            )
            for h in range(config.num_heads)
        ]
        attn_out = np.concatenate(heads, axis=1) @ layer.w_output + layer.b_output
        x = layer_norm(
            x + attn_out, layer.attn_norm_scale, layer.attn_norm_shift,
            config.layernorm_epsilon,
        )
        ff_out = feed_forward(x, layer.w_ff_in, layer.b_ff_in, layer.w_ff_out, layer.b_ff_out)
        x = layer_norm(
            x + ff_out, layer.ff_norm_scale, layer.ff_norm_shift,
            config.layernorm_epsilon,
        )
    return x[0]


def _layer_arrays(layer: LayerWeights) -> list[np.ndarray]:
    return [
        layer.w_query, layer.b_query, layer.w_key, layer.b_key,
        layer.w_value, layer.b_value, layer.w_output, layer.b_output,
        layer.attn_norm_scale, layer.attn_norm_shift,
        layer.w_ff_in, layer.b_ff_in, layer.w_ff_out, layer.b_ff_out,
        layer.ff_norm_scale, layer.ff_norm_shift,
    ]


def save_weights(weights: EncoderWeights) -> bytes:
    config = weights.config
    parts = [WEIGHTS_MAGIC]
    for value in (
        config.num_layers, config.d_model, config.num_heads,
        config.d_ff, config.max_len, config.vocab_size,
    ):
        parts.append(pack_i32(value))
    parts.append(pack_f64(config.layernorm_epsilon))
    parts.append(pack_f64_array(weights.token_embeddings))
    parts.append(pack_f64_array(weights.position_embeddings))
    for layer in weights.layers:
        parts.extend(pack_f64_array(a) for a in _layer_arrays(layer))
    return b"".join(parts)


def load_weights(data: bytes) -> EncoderWeights:
    reader = ByteReader(data)
    reader.expect_magic(WEIGHTS_MAGIC)
    num_layers = reader.read_i32()
    d_model = reader.read_i32()
    num_heads = reader.read_i32()
    d_ff = reader.read_i32()
    max_len = reader.read_i32()
    vocab_size = reader.read_i32()
    epsilon = reader.read_f64()
    config = EncoderConfig(
        vocab_size=vocab_size, max_len=max_len, num_layers=num_layers,
        d_model=d_model, num_heads=num_heads, d_ff=d_ff, layernorm_epsilon=epsilon,
    )
    d, f = d_model, d_ff
    token_embeddings = reader.read_f64_array((vocab_size, d))
    position_embeddings = reader.read_f64_array((max_len, d))
    layers = []
    for _ in range(num_layers):
        layers.append(
            LayerWeights(
                w_query=reader.read_f64_array((d, d)), b_query=reader.read_f64_array((d,)),
                w_key=reader.read_f64_array((d, d)), b_key=reader.read_f64_array((d,)),
                w_value=reader.read_f64_array((d, d)), b_value=reader.read_f64_array((d,)),
                w_output=reader.read_f64_array((d, d)), b_output=reader.read_f64_array((d,)),
                attn_norm_scale=reader.read_f64_array((d,)),
                attn_norm_shift=reader.read_f64_array((d,)),
                w_ff_in=reader.read_f64_array((d, f)), b_ff_in=reader.read_f64_array((f,)),
                w_ff_out=reader.read_f64_array((f, d)), b_ff_out=reader.read_f64_array((d,)),
                ff_norm_scale=reader.read_f64_array((d,)),
                ff_norm_shift=reader.read_f64_array((d,)),
            )
        )
    reader.expect_end()
    return EncoderWeights(config, token_embeddings, position_embeddings, layers)
