"""Attention primitives: windowed, channel, overlapping and bucketed.

All primitives operate on ``(batch, channels, height, width)`` feature maps
and take their trainable weights as a dict of named tensors, so the same
functions serve the network blocks, standalone use, and tests.

Boundary semantics are periodic throughout: shifted windows roll the map
cyclically (no masking), and overlapping key windows wrap around the edges.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ConfigError, ShapeError
from .tensor import Tensor, as_tensor


@dataclass(frozen=True)
class AttentionConfig:
    """Shared settings for the attention primitives.

    ``window``/``shift`` drive the windowed forms, ``overlap_ratio`` the
    overlapping cross-attention, and ``chunk_size``/``hash_rounds``/``seed``
    the bucketed sparse form.  Unused fields are ignored by each primitive.
    """

    dim: int
    heads: int = 1
    window: int = 4
    shift: int = 0
    overlap_ratio: float = 0.5
    chunk_size: int = 144
    hash_rounds: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.heads < 1:
            raise ConfigError(f"heads must be >= 1, got {self.heads}")
        if self.dim % self.heads:
            raise ConfigError(
                f"dim {self.dim} is not divisible by heads {self.heads}"
            )
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if not 0 <= self.shift < self.window:
            raise ConfigError(
                f"shift must lie in [0, window), got {self.shift} for window "
                f"{self.window}"
            )
        if self.overlap_ratio < 0:
            raise ConfigError(
                f"overlap_ratio must be >= 0, got {self.overlap_ratio}"
            )
        if self.chunk_size < 1:
            raise ConfigError(f"chunk_size must be >= 1, got {self.chunk_size}")
        if self.hash_rounds < 1:
            raise ConfigError(f"hash_rounds must be >= 1, got {self.hash_rounds}")


def overlap_window(config: AttentionConfig) -> int:
    """Key/value window edge after widening by the overlap ratio."""
    return int(math.floor((1.0 + config.overlap_ratio) * config.window))


# ---- parameter construction --------------------------------------------------


def _init_linear(rng, out_dim: int, in_dim: int, std: float = 0.02):
    w = Tensor(rng.normal(0.0, std, size=(out_dim, in_dim)), requires_grad=True)
    b = Tensor(np.zeros(out_dim), requires_grad=True)
    return w, b


def _init_qkvo(config: AttentionConfig, rng) -> dict:
    params = {}
    for name in ("q", "k", "v", "o"):
        w, b = _init_linear(rng, config.dim, config.dim)
        params[f"w_{name}"] = w
        params[f"b_{name}"] = b
    return params


def init_window_attention_params(config: AttentionConfig, rng) -> dict:
    """Projections plus a zero relative-position bias table."""
    params = _init_qkvo(config, rng)
    span = 2 * config.window - 1
    params["rel_bias"] = Tensor(np.zeros((span * span, config.heads)),
                                requires_grad=True)
    return params


def init_overlapping_attention_params(config: AttentionConfig, rng) -> dict:
    """Like the windowed form, but the bias spans query/key window offsets."""
    params = _init_qkvo(config, rng)
    span = config.window + overlap_window(config) - 1
    params["rel_bias"] = Tensor(np.zeros((span * span, config.heads)),
                                requires_grad=True)
    return params


def init_bucketed_attention_params(config: AttentionConfig, rng) -> dict:
    return _init_qkvo(config, rng)


def init_channel_attention_params(dim: int, squeeze_ratio: int, rng) -> dict:
    if squeeze_ratio < 1 or dim % squeeze_ratio:
        raise ConfigError(
            f"dim {dim} is not divisible by squeeze_ratio {squeeze_ratio}"
        )
    hidden = dim // squeeze_ratio
    w1, b1 = _init_linear(rng, hidden, dim)
    w2, b2 = _init_linear(rng, dim, hidden)
    return {"w1": w1, "b1": b1, "w2": w2, "b2": b2}


# ---- shared plumbing -----------------------------------------------------------


def _linear(t, w, b):
    return T.add(T.matmul(t, T.transpose(w, (1, 0))), b)


def _check_map(x, config: AttentionConfig):
    if x.ndim != 4:
        raise ShapeError(f"expected (b, c, h, w), got shape {x.shape}")
    b, c, h, w = x.shape
    if c != config.dim:
        raise ShapeError(f"expected {config.dim} channels, got {c}")
    m = config.window
    if h % m or w % m:
        raise ShapeError(
            f"spatial size {h}x{w} is not divisible by window {m}; "
            "pad the input first"
        )


def _partition(x, m: int):
    """(b, c, h, w) -> (b * nh * nw, m * m, c), windows in raster order."""
    b, c, h, w = x.shape
    nh, nw = h // m, w // m
    t = T.reshape(x, (b, c, nh, m, nw, m))
    t = T.transpose(t, (0, 2, 4, 3, 5, 1))
    return T.reshape(t, (b * nh * nw, m * m, c))


def _merge(tokens, b: int, h: int, w: int, m: int, c: int):
    nh, nw = h // m, w // m
    t = T.reshape(tokens, (b, nh, nw, m, m, c))
    t = T.transpose(t, (0, 5, 1, 3, 2, 4))
    return T.reshape(t, (b, c, h, w))


def _split_heads(t, heads: int):
    n_win, n, c = t.shape
    t = T.reshape(t, (n_win, n, heads, c // heads))
    return T.transpose(t, (0, 2, 1, 3))


def _join_heads(t):
    n_win, heads, n, dh = t.shape
    t = T.transpose(t, (0, 2, 1, 3))
    return T.reshape(t, (n_win, n, heads * dh))


def _relative_index(m_q: int, m_k: int) -> np.ndarray:
    """Bias-table row for every query/key pair of aligned square windows.

    The key window may be larger than the query window (centred on it); the
    table then spans ``(m_q + m_k - 1)`` distinct offsets per axis.
    """
    qr, qc = np.divmod(np.arange(m_q * m_q), m_q)
    kr, kc = np.divmod(np.arange(m_k * m_k), m_k)
    span = m_q + m_k - 1
    dr = qr[:, None] - kr[None, :] + (m_k - 1)
    dc = qc[:, None] - kc[None, :] + (m_k - 1)
    return dr * span + dc


def _attend(q, k, v, heads: int, rel_bias, rel_index: np.ndarray):
    qh = _split_heads(q, heads)
    kh = _split_heads(k, heads)
    vh = _split_heads(v, heads)
    scale = 1.0 / math.sqrt(qh.shape[-1])
    logits = T.mul(T.matmul(qh, T.transpose(kh, (0, 1, 3, 2))), scale)
    bias = T.transpose(T.take(rel_bias, rel_index), (2, 0, 1))
    attn = T.softmax(T.add(logits, bias), axis=-1)
    out = T.matmul(attn, vh)
    return _join_heads(out), attn.data


# ---- windowed multi-head self-attention ---------------------------------------


def window_msa(x, config: AttentionConfig, params: dict,
               return_weights: bool = False):
    """Self-attention within non-overlapping windows, optionally shifted.

    A non-zero ``config.shift`` rolls the map cyclically before windowing
    and rolls the result back, so shifted windows mix content across window
    borders (and across image edges, which are periodic here).
    """
    x = as_tensor(x)
    _check_map(x, config)
    b, c, h, w = x.shape
    m = config.window
    span = 2 * m - 1
    if params["rel_bias"].shape != (span * span, config.heads):
        raise ShapeError(
            f"rel_bias must have shape ({span * span}, {config.heads}), "
            f"got {params['rel_bias'].shape}"
        )
    shifted = T.roll(x, (-config.shift, -config.shift), (2, 3)) if config.shift else x
    tokens = _partition(shifted, m)
    q = _linear(tokens, params["w_q"], params["b_q"])
    k = _linear(tokens, params["w_k"], params["b_k"])
    v = _linear(tokens, params["w_v"], params["b_v"])
    out, weights = _attend(q, k, v, config.heads, params["rel_bias"],
                           _relative_index(m, m))
    out = _linear(out, params["w_o"], params["b_o"])
    out = _merge(out, b, h, w, m, c)
    if config.shift:
        out = T.roll(out, (config.shift, config.shift), (2, 3))
    if return_weights:
        return out, weights
    return out


# ---- channel attention ----------------------------------------------------------


def channel_attention(x, squeeze_ratio: int, params: dict,
                      return_gate: bool = False):
    """Squeeze-and-excite gating: pooled stats modulate each channel.

    The gate pools each channel globally, squeezes to ``c / squeeze_ratio``
    units with a ReLU, expands back, and applies a logistic; the output is
    the input scaled per channel by the resulting (0, 1) factors.
    """
    x = as_tensor(x)
    if x.ndim != 4:
        raise ShapeError(f"expected (b, c, h, w), got shape {x.shape}")
    b, c, h, w = x.shape
    if squeeze_ratio < 1 or c % squeeze_ratio:
        raise ConfigError(
            f"channel count {c} is not divisible by squeeze_ratio "
            f"{squeeze_ratio}"
        )
    if params["w1"].shape != (c // squeeze_ratio, c):
        raise ShapeError(
            f"channel attention params expect w1 of shape "
            f"{(c // squeeze_ratio, c)}, got {params['w1'].shape}"
        )
    pooled = T.tmean(x, axis=(2, 3))
    z = T.relu(_linear(pooled, params["w1"], params["b1"]))
    gate = T.sigmoid(_linear(z, params["w2"], params["b2"]))
    out = T.mul(x, T.reshape(gate, (b, c, 1, 1)))
    if return_gate:
        return out, gate.data
    return out


# ---- overlapping cross-attention -------------------------------------------------


def overlapping_cross_attention(x, config: AttentionConfig, params: dict,
                                return_weights: bool = False):
    """Queries from plain windows, keys/values from widened ones.

    Key windows share their centre with the query window and extend
    ``(overlap_window - window) / 2`` pixels on each side, wrapping
    periodically at the map edges.  With ``overlap_ratio == 0`` this
    reduces exactly to the unshifted windowed form.
    """
    x = as_tensor(x)
    _check_map(x, config)
    b, c, h, w = x.shape
    m = config.window
    mo = overlap_window(config)
    if (mo - m) % 2:
        raise ConfigError(
            f"overlap_ratio {config.overlap_ratio} widens window {m} to {mo}; "
            "the margin must be even so key windows stay centred"
        )
    pad = (mo - m) // 2
    span = m + mo - 1
    if params["rel_bias"].shape != (span * span, config.heads):
        raise ShapeError(
            f"rel_bias must have shape ({span * span}, {config.heads}), "
            f"got {params['rel_bias'].shape}"
        )
    nh, nw = h // m, w // m

    q_tokens = _partition(x, m)

    rows = (np.arange(nh)[:, None] * m - pad + np.arange(mo)[None, :]) % h
    cols = (np.arange(nw)[:, None] * m - pad + np.arange(mo)[None, :]) % w
    flat = rows[:, None, :, None] * w + cols[None, :, None, :]
    idx = (np.arange(b) * (h * w))[:, None, None, None, None] + flat[None]
    x_tokens = T.reshape(T.transpose(x, (0, 2, 3, 1)), (b * h * w, c))
    kv_tokens = T.reshape(T.take(x_tokens, idx.reshape(-1)),
                          (b * nh * nw, mo * mo, c))

    q = _linear(q_tokens, params["w_q"], params["b_q"])
    k = _linear(kv_tokens, params["w_k"], params["b_k"])
    v = _linear(kv_tokens, params["w_v"], params["b_v"])
    out, weights = _attend(q, k, v, config.heads, params["rel_bias"],
                           _relative_index(m, mo))
    out = _linear(out, params["w_o"], params["b_o"])
    out = _merge(out, b, h, w, m, c)
    if return_weights:
        return out, weights
    return out


# ---- bucketed sparse self-attention ----------------------------------------------


@dataclass
class BucketAssignment:
    """Hash ids plus the chunked token order they induce.

    ``buckets`` lists disjoint index arrays covering every token exactly
    once, each no longer than the chunk size; tokens are ordered by hash id
    (stable, so ties keep their original order) and split consecutively.
    """

    bucket_ids: np.ndarray
    buckets: list
    n_projections: int


def spherical_lsh(vectors: np.ndarray, n_projections: int, seed,
                  chunk_size: int) -> BucketAssignment:
    """Bucket unit-sphere neighbours together via random projections.

    Each vector is l2-normalized and hashed to the index of the largest
    entry of ``[P v; -P v]`` for a seeded Gaussian projection ``P`` with
    unit-norm rows, so a vector and its negation land in paired buckets.
    Zero vectors hash to bucket 0 by convention.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2:
        raise ShapeError(f"expected (n, d) vectors, got shape {vectors.shape}")
    if n_projections < 1:
        raise ConfigError(f"n_projections must be >= 1, got {n_projections}")
    if chunk_size < 1:
        raise ConfigError(f"chunk_size must be >= 1, got {chunk_size}")
    n, _ = vectors.shape
    rng = np.random.default_rng(seed)
    proj = rng.standard_normal((n_projections, vectors.shape[1]))
    proj /= np.linalg.norm(proj, axis=1, keepdims=True)
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    unit = vectors / np.where(norms == 0.0, 1.0, norms)
    scores = unit @ proj.T
    ids = np.argmax(np.concatenate([scores, -scores], axis=1), axis=1)
    ids[norms[:, 0] == 0.0] = 0
    order = np.argsort(ids, kind="stable")
    buckets = [order[i:i + chunk_size] for i in range(0, n, chunk_size)]
    return BucketAssignment(bucket_ids=ids, buckets=buckets,
                            n_projections=n_projections)


def derive_projections(n_tokens: int, chunk_size: int) -> int:
    """Projection count scaling with the number of chunks to tell apart."""
    return max(1, math.ceil(n_tokens / chunk_size / 2))


def nlsa(x, config: AttentionConfig, params: dict,
         return_weights: bool = False):
    """Non-local sparse attention over hash-bucketed token chunks.

    Tokens (one per pixel) are bucketed by spherical LSH on the raw input
    features; no gradient flows through the hashing.  Attention runs
    densely inside each chunk (single head), rounds are averaged, and the
    result is added back to the input.  When ``chunk_size`` covers all
    tokens there is a single chunk and this is exactly dense attention.
    """
    x = as_tensor(x)
    if x.ndim != 4:
        raise ShapeError(f"expected (b, c, h, w), got shape {x.shape}")
    b, c, h, w = x.shape
    if c != config.dim:
        raise ShapeError(f"expected {config.dim} channels, got {c}")
    n = h * w
    tokens = T.reshape(T.transpose(x, (0, 2, 3, 1)), (b, n, c))
    q = _linear(tokens, params["w_q"], params["b_q"])
    k = _linear(tokens, params["w_k"], params["b_k"])
    v = _linear(tokens, params["w_v"], params["b_v"])
    flat_q = T.reshape(q, (b * n, c))
    flat_k = T.reshape(k, (b * n, c))
    flat_v = T.reshape(v, (b * n, c))
    m_proj = derive_projections(n, config.chunk_size)
    scale = 1.0 / math.sqrt(c)

    all_weights = []
    round_outputs = []
    for rnd in range(config.hash_rounds):
        per_image = []
        for bi in range(b):
            assign = spherical_lsh(tokens.data[bi], m_proj,
                                   (config.seed, rnd, bi), config.chunk_size)
            pieces = []
            for bucket in assign.buckets:
                sel = bucket + bi * n
                qi = T.take(flat_q, sel)
                ki = T.take(flat_k, sel)
                vi = T.take(flat_v, sel)
                attn = T.softmax(T.mul(T.matmul(qi, T.transpose(ki, (1, 0))),
                                       scale), axis=-1)
                if return_weights:
                    all_weights.append(attn.data)
                pieces.append(T.matmul(attn, vi))
            order = np.concatenate(assign.buckets)
            inverse = np.empty(n, dtype=np.int64)
            inverse[order] = np.arange(n)
            restored = T.take(T.concat(pieces, axis=0), inverse)
            per_image.append(T.reshape(restored, (1, n, c)))
        round_outputs.append(T.concat(per_image, axis=0))

    mixed = round_outputs[0]
    for extra in round_outputs[1:]:
        mixed = T.add(mixed, extra)
    if config.hash_rounds > 1:
        mixed = T.mul(mixed, 1.0 / config.hash_rounds)
    out = _linear(mixed, params["w_o"], params["b_o"])
    out = T.transpose(T.reshape(out, (b, h, w, c)), (0, 3, 1, 2))
    y = T.add(x, out)
    if return_weights:
        return y, all_weights
    return y
