"""4x (or 2x) super-resolution network built from the attention primitives.

Topology: a shallow conv lifts RGB to ``dim`` channels, a few bucketed
sparse attention blocks run before and after a residual body of hybrid
attention groups, and a conv plus pixel shuffle produces the upscaled
image.  Each hybrid block combines windowed self-attention (alternating
unshifted/shifted) with a lightly weighted channel-attention branch and an
MLP; each group ends with overlapping cross-attention, a conv, and a
residual connection.

Everything is float64 on the reverse-mode tape; the training step seeds the
tape with the analytic loss gradient and updates parameters with Adam.
"""

import dataclasses
import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import attention as A
from . import tensor as T
from .attention import AttentionConfig
from .errors import ConfigError, DataFormatError, ShapeError
from .loss import LossConfig, total_loss, total_loss_grad
from .tensor import Tensor, as_tensor

_CKPT_MAGIC = b"WSR1"

_CONFIG_KEYS = {
    "scale": "scale",
    "dim": "dim",
    "heads": "heads",
    "window": "window",
    "groups": "n_groups",
    "blocks_per_group": "blocks_per_group",
    "pre_nlsa": "n_pre_nlsa",
    "post_nlsa": "n_post_nlsa",
    "chunk_size": "chunk_size",
    "hash_rounds": "hash_rounds",
    "overlap_ratio": "overlap_ratio",
    "squeeze_ratio": "squeeze_ratio",
    "channel_weight": "channel_weight",
    "mlp_ratio": "mlp_ratio",
    "seed": "seed",
}


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters; defaults give a small trainable model.

    The full-size setting uses dim 180, window 16, 6 groups of 6 blocks and
    chunk size 144; the defaults here are a reduced profile that exercises
    every component at desk scale.
    """

    scale: int = 4
    dim: int = 16
    heads: int = 2
    window: int = 4
    n_groups: int = 1
    blocks_per_group: int = 2
    n_pre_nlsa: int = 2
    n_post_nlsa: int = 2
    chunk_size: int = 16
    hash_rounds: int = 1
    overlap_ratio: float = 0.5
    squeeze_ratio: int = 4
    channel_weight: float = 0.01
    mlp_ratio: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.scale < 1:
            raise ConfigError(f"scale must be >= 1, got {self.scale}")
        if self.dim < 1 or self.dim % self.heads:
            raise ConfigError(
                f"dim {self.dim} must be positive and divisible by heads "
                f"{self.heads}"
            )
        if self.dim % self.squeeze_ratio:
            raise ConfigError(
                f"dim {self.dim} is not divisible by squeeze_ratio "
                f"{self.squeeze_ratio}"
            )
        for name in ("n_groups", "blocks_per_group", "n_pre_nlsa",
                     "n_post_nlsa"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if self.chunk_size < 1:
            raise ConfigError(f"chunk_size must be >= 1, got {self.chunk_size}")
        if self.hash_rounds < 1:
            raise ConfigError(f"hash_rounds must be >= 1, got {self.hash_rounds}")
        if self.mlp_hidden < 1:
            raise ConfigError(
                f"mlp_ratio {self.mlp_ratio} leaves no hidden units"
            )

    @property
    def mlp_hidden(self) -> int:
        return int(self.dim * self.mlp_ratio)

    def to_dict(self) -> dict:
        return {key: getattr(self, attr) for key, attr in _CONFIG_KEYS.items()}

    @classmethod
    def from_dict(cls, raw: dict) -> "ModelConfig":
        extra = set(raw) - set(_CONFIG_KEYS)
        if extra:
            raise ConfigError(
                f"unknown model config keys: {', '.join(sorted(extra))}; "
                f"known keys: {', '.join(sorted(_CONFIG_KEYS))}"
            )
        return cls(**{_CONFIG_KEYS[k]: v for k, v in raw.items()})


@dataclass
class Model:
    config: ModelConfig
    params: dict


def _mix(*parts) -> int:
    acc = 7
    for p in parts:
        acc = (acc * 1000003 + int(p)) % (2 ** 63)
    return acc


def _window_config(config: ModelConfig, shift: int) -> AttentionConfig:
    return AttentionConfig(dim=config.dim, heads=config.heads,
                           window=config.window, shift=shift,
                           overlap_ratio=config.overlap_ratio)


def _bucket_config(config: ModelConfig, stage: int, index: int) -> AttentionConfig:
    return AttentionConfig(dim=config.dim, heads=1,
                           chunk_size=config.chunk_size,
                           hash_rounds=config.hash_rounds,
                           seed=_mix(config.seed, stage, index))


def _init_conv(rng, out_c: int, in_c: int, k: int):
    w = Tensor(rng.normal(0.0, 0.02, size=(out_c, in_c, k, k)),
               requires_grad=True)
    b = Tensor(np.zeros(out_c), requires_grad=True)
    return w, b


def _init_norm(dim: int):
    return (Tensor(np.ones(dim), requires_grad=True),
            Tensor(np.zeros(dim), requires_grad=True))


def build_model(config: ModelConfig, seed=None) -> Model:
    """Construct a model with seeded weights.

    Conv and projection weights draw from N(0, 0.02^2); biases and relative
    position biases start at zero, norm gains at one.  The same config and
    seed always produce bitwise-identical parameters.  Passing ``seed``
    overrides the seed stored in the config.
    """
    if seed is not None:
        config = dataclasses.replace(config, seed=int(seed))
    rng = np.random.default_rng(config.seed)
    params: dict = {}

    def put(prefix: str, sub: dict):
        for name, value in sub.items():
            params[f"{prefix}.{name}"] = value

    w, b = _init_conv(rng, config.dim, 3, 3)
    params["head.conv.w"], params["head.conv.b"] = w, b

    for i in range(config.n_pre_nlsa):
        put(f"pre.{i}", A.init_bucketed_attention_params(
            _bucket_config(config, 1, i), rng))

    for gi in range(config.n_groups):
        for bi in range(config.blocks_per_group):
            base = f"body.g{gi}.b{bi}"
            g, beta = _init_norm(config.dim)
            params[f"{base}.ln1.g"], params[f"{base}.ln1.b"] = g, beta
            shift = config.window // 2 if bi % 2 else 0
            put(f"{base}.attn", A.init_window_attention_params(
                _window_config(config, shift), rng))
            put(f"{base}.ca", A.init_channel_attention_params(
                config.dim, config.squeeze_ratio, rng))
            g, beta = _init_norm(config.dim)
            params[f"{base}.ln2.g"], params[f"{base}.ln2.b"] = g, beta
            w, b = _init_linear_pair(rng, config.mlp_hidden, config.dim)
            params[f"{base}.mlp.w1"], params[f"{base}.mlp.b1"] = w, b
            w, b = _init_linear_pair(rng, config.dim, config.mlp_hidden)
            params[f"{base}.mlp.w2"], params[f"{base}.mlp.b2"] = w, b
        put(f"body.g{gi}.oca", A.init_overlapping_attention_params(
            _window_config(config, 0), rng))
        w, b = _init_conv(rng, config.dim, config.dim, 3)
        params[f"body.g{gi}.conv.w"], params[f"body.g{gi}.conv.b"] = w, b

    w, b = _init_conv(rng, config.dim, config.dim, 3)
    params["body.conv.w"], params["body.conv.b"] = w, b

    for i in range(config.n_post_nlsa):
        put(f"post.{i}", A.init_bucketed_attention_params(
            _bucket_config(config, 2, i), rng))

    w, b = _init_conv(rng, 3 * config.scale ** 2, config.dim, 3)
    params["tail.conv.w"], params["tail.conv.b"] = w, b

    return Model(config=config, params=params)


def _init_linear_pair(rng, out_dim: int, in_dim: int):
    w = Tensor(rng.normal(0.0, 0.02, size=(out_dim, in_dim, 1, 1)),
               requires_grad=True)
    b = Tensor(np.zeros(out_dim), requires_grad=True)
    return w, b


def _sub(params: dict, prefix: str) -> dict:
    cut = len(prefix)
    return {k[cut:]: v for k, v in params.items() if k.startswith(prefix)}


def _conv(x, params: dict, prefix: str):
    return T.conv2d(x, params[f"{prefix}.w"], stride=1, boundary="zero") \
        + params[f"{prefix}.b"].reshape((1, -1, 1, 1))


def _hybrid_block(x, config: ModelConfig, params: dict, prefix: str,
                  shift: int):
    normed = T.layer_norm(x, params[f"{prefix}.ln1.g"],
                          params[f"{prefix}.ln1.b"], axis=1)
    attn = A.window_msa(normed, _window_config(config, shift),
                        _sub(params, f"{prefix}.attn."))
    gated = A.channel_attention(normed, config.squeeze_ratio,
                                _sub(params, f"{prefix}.ca."))
    x = T.add(T.add(x, attn), T.mul(gated, config.channel_weight))
    normed = T.layer_norm(x, params[f"{prefix}.ln2.g"],
                          params[f"{prefix}.ln2.b"], axis=1)
    hidden = T.gelu(T.conv2d(normed, params[f"{prefix}.mlp.w1"])
                    + params[f"{prefix}.mlp.b1"].reshape((1, -1, 1, 1)))
    mlp = T.conv2d(hidden, params[f"{prefix}.mlp.w2"]) \
        + params[f"{prefix}.mlp.b2"].reshape((1, -1, 1, 1))
    return T.add(x, mlp)


def forward(model: Model, image) -> Tensor:
    """Upscale a batch of RGB images by the configured factor.

    Input is ``(b, 3, h, w)`` with h and w divisible by the window size;
    output is ``(b, 3, h * scale, w * scale)``.  Values are treated as
    [0, 1] intensities but are not clipped.
    """
    config, params = model.config, model.params
    x = as_tensor(image)
    if x.ndim != 4 or x.shape[1] != 3:
        raise ShapeError(f"expected (b, 3, h, w) input, got shape {x.shape}")
    b, _, h, w = x.shape
    if h % config.window or w % config.window:
        raise ShapeError(
            f"input {h}x{w} is not divisible by window {config.window}; "
            "pad the input first"
        )

    feat = _conv(x, params, "head.conv")
    for i in range(config.n_pre_nlsa):
        feat = A.nlsa(feat, _bucket_config(config, 1, i),
                      _sub(params, f"pre.{i}."))

    body_in = feat
    t = feat
    for gi in range(config.n_groups):
        group_in = t
        for bi in range(config.blocks_per_group):
            shift = config.window // 2 if bi % 2 else 0
            t = _hybrid_block(t, config, params, f"body.g{gi}.b{bi}", shift)
        t = A.overlapping_cross_attention(t, _window_config(config, 0),
                                          _sub(params, f"body.g{gi}.oca."))
        t = _conv(t, params, f"body.g{gi}.conv")
        t = T.add(t, group_in)
    t = T.add(_conv(t, params, "body.conv"), body_in)

    for i in range(config.n_post_nlsa):
        t = A.nlsa(t, _bucket_config(config, 2, i),
                   _sub(params, f"post.{i}."))

    up = _conv(t, params, "tail.conv")
    return T.pixel_shuffle(up, config.scale)


# ---- cost accounting ------------------------------------------------------------


def count_params(model: Model) -> int:
    return int(sum(p.size for p in model.params.values()))


def _chunk_sizes(n: int, chunk: int) -> list:
    sizes = [chunk] * (n // chunk)
    if n % chunk:
        sizes.append(n % chunk)
    return sizes


def count_mult_adds(model: Model, height: int, width: int) -> int:
    """Multiply-accumulate count for one image at the given input size.

    Counts convolutions, projections, and the two attention matmuls per
    block (plus hashing projections and the channel gate); elementwise
    work and normalization are excluded.
    """
    config = model.config
    if height % config.window or width % config.window:
        raise ShapeError(
            f"size {height}x{width} is not divisible by window {config.window}"
        )
    hw = height * width
    d = config.dim
    m = config.window
    mo = A.overlap_window(_window_config(config, 0))
    n_win = hw // (m * m)

    def nlsa_cost() -> int:
        m_proj = A.derive_projections(hw, config.chunk_size)
        per_round = hw * m_proj * d \
            + 2 * d * sum(s * s for s in _chunk_sizes(hw, config.chunk_size))
        return 4 * hw * d * d + config.hash_rounds * per_round

    def msa_cost() -> int:
        return n_win * (4 * (m * m) * d * d + 2 * (m ** 4) * d)

    def ca_cost() -> int:
        squeeze = d // config.squeeze_ratio
        return 2 * d * squeeze + hw * d

    def mlp_cost() -> int:
        return 2 * hw * d * config.mlp_hidden

    def oca_cost() -> int:
        proj = n_win * ((m * m) * d * d * 2 + (mo * mo) * d * d * 2)
        return proj + n_win * 2 * (m * m) * (mo * mo) * d

    total = hw * d * 3 * 9
    total += (config.n_pre_nlsa + config.n_post_nlsa) * nlsa_cost()
    per_block = msa_cost() + ca_cost() + mlp_cost()
    total += config.n_groups * (config.blocks_per_group * per_block
                                + oca_cost() + hw * d * d * 9)
    total += hw * d * d * 9
    total += hw * (3 * config.scale ** 2) * d * 9
    return int(total)


# ---- optimization ----------------------------------------------------------------


@dataclass
class AdamState:
    """Adam moments plus a stepwise-halving learning-rate schedule."""

    lr: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    milestones: tuple = ()
    decay: float = 0.5
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def current_lr(self) -> float:
        drops = sum(1 for t in self.milestones if self.step > t)
        return self.lr * self.decay ** drops


def adam_step(model: Model, state: AdamState) -> None:
    """Apply one Adam update from the gradients stored on the parameters."""
    state.step += 1
    lr = state.current_lr()
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    for name, p in model.params.items():
        if p.grad is None:
            continue
        g = p.grad
        m = state.m.setdefault(name, np.zeros_like(p.data))
        v = state.v.setdefault(name, np.zeros_like(p.data))
        m += (1.0 - state.beta1) * (g - m)
        v += (1.0 - state.beta2) * (g * g - v)
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


def zero_grads(model: Model) -> None:
    for p in model.params.values():
        p.grad = None


def train_step(model: Model, lr_batch, hr_batch, loss_config: LossConfig,
               state: AdamState) -> float:
    """One optimization step; returns the loss value before the update.

    The loss gradient with respect to the network output is computed in
    closed form and seeded into the reverse pass.  Non-finite parameters,
    outputs, or losses abort with a diagnostic naming the offender.
    """
    for name, p in model.params.items():
        if not np.all(np.isfinite(p.data)):
            raise FloatingPointError(f"non-finite values in parameter {name}")
    zero_grads(model)
    sr = forward(model, lr_batch)
    if not np.all(np.isfinite(sr.data)):
        raise FloatingPointError("non-finite values in model output")
    hr = np.asarray(hr_batch, dtype=np.float64)
    value = total_loss(sr.data, hr, loss_config)
    if not math.isfinite(value):
        raise FloatingPointError("non-finite loss value")
    sr.backward(total_loss_grad(sr.data, hr, loss_config))
    adam_step(model, state)
    return float(value)


# ---- checkpoints ------------------------------------------------------------------


def save_checkpoint(model: Model, path) -> None:
    """Write config and parameters: JSON header then flat float64 data."""
    header = {
        "config": model.config.to_dict(),
        "dtype": "<f8",
        "params": [{"name": k, "shape": list(v.shape)}
                   for k, v in model.params.items()],
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for p in model.params.values():
            fh.write(np.ascontiguousarray(p.data, dtype="<f8").tobytes())


def load_checkpoint(path) -> Model:
    """Rebuild a model from :func:`save_checkpoint` output, bit for bit."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _CKPT_MAGIC:
        raise DataFormatError(f"{path}: not a checkpoint (bad magic)")
    if len(raw) < 8:
        raise DataFormatError(f"{path}: truncated checkpoint header")
    (hlen,) = struct.unpack("<I", raw[4:8])
    try:
        header = json.loads(raw[8:8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"{path}: corrupt checkpoint header") from exc
    if header.get("dtype") != "<f8":
        raise DataFormatError(f"{path}: unsupported dtype {header.get('dtype')!r}")
    model = build_model(ModelConfig.from_dict(header["config"]))
    entries = header["params"]
    names = [e["name"] for e in entries]
    if names != list(model.params.keys()):
        raise DataFormatError(f"{path}: parameter list does not match config")
    offset = 8 + hlen
    for entry in entries:
        p = model.params[entry["name"]]
        shape = tuple(entry["shape"])
        if shape != p.shape:
            raise DataFormatError(
                f"{path}: parameter {entry['name']} has shape {shape}, "
                f"expected {p.shape}"
            )
        nbytes = p.size * 8
        chunk = raw[offset:offset + nbytes]
        if len(chunk) != nbytes:
            raise DataFormatError(f"{path}: truncated parameter data")
        p.data = np.frombuffer(chunk, dtype="<f8").reshape(shape).copy()
        offset += nbytes
    if offset != len(raw):
        raise DataFormatError(f"{path}: trailing bytes after parameter data")
    return model
