"""The SigT receiver network: tokenization, transformer encoder stack,
pool/conv aggregation, MLP prediction head, sigmoid output.

Dataflow for one frame: the (n_s, n_r, n_i, 2) received grid becomes n_r
tokens (one per receive antenna, all subcarriers flattened into the vector),
the encoder mixes them with multi-head self-attention, aggregation reduces
n_r features to n_t, and the head maps their concatenation to 2*n_s*n_t
sigmoid outputs reshaped to (n_s, n_t, 2). Hard decisions (threshold 0.5,
boundary counts as 1) are applied only outside training.
"""

from dataclasses import dataclass

import numpy as np

from .attention import AttentionParams, multi_head_attention
from .errors import ConfigError, DimensionError
from .tensor import (
    Tensor,
    avg_pool1d,
    concat,
    conv1d,
    dropout,
    layer_norm,
    linear,
    max_pool1d,
    relu,
    reshape,
    sigmoid,
)


@dataclass
class SigTConfig:
    depth: int = 2  # encoder layers
    heads: int = 4
    d_model: int = 512
    d_ff: int = 1024
    aggregation: str = "conv"  # conv | pool
    pool_kind: str = "avg"  # avg | max
    dropout_p: float = 0.0  # 0.1 when dropout is enabled
    mlp_hidden: int = 1024

    def __post_init__(self):
        if self.depth < 0:
            raise ConfigError(f"depth must be >= 0, got {self.depth}")
        if self.heads < 1:
            raise ConfigError(f"heads must be >= 1, got {self.heads}")
        if self.d_model % self.heads:
            raise ConfigError(
                f"d_model ({self.d_model}) must be divisible by heads ({self.heads})"
            )
        if self.aggregation not in ("conv", "pool"):
            raise ConfigError(f"aggregation must be conv|pool, got {self.aggregation!r}")
        if self.pool_kind not in ("avg", "max"):
            raise ConfigError(f"pool_kind must be avg|max, got {self.pool_kind!r}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must be in [0,1), got {self.dropout_p}")

    def to_dict(self):
        return {
            "depth": self.depth,
            "heads": self.heads,
            "d_model": self.d_model,
            "d_ff": self.d_ff,
            "aggregation": self.aggregation,
            "pool_kind": self.pool_kind,
            "dropout_p": self.dropout_p,
            "mlp_hidden": self.mlp_hidden,
        }


@dataclass
class ModelOutput:
    """Soft sigmoid outputs and (test-phase) hard decisions."""

    x_hat: np.ndarray  # (..., n_s, n_t, 2) in (0, 1)
    x_tilde: np.ndarray  # same shape, uint8


def hard_decision(x_hat):
    """x_tilde = 1 iff x_hat >= 0.5 (sigmoid midpoint; boundary maps to 1)."""
    return (np.asarray(x_hat) >= 0.5).astype(np.uint8)


# -- tokenization ----------------------------------------------------------------


def tokenize(y):
    """Split the received grid into one token per receive antenna.

    y: (n_s, n_r, n_i, 2) or batched (b, n_s, n_r, n_i, 2). The n_r axis moves
    first and the remaining axes flatten row-major, giving tokens of width
    2*n_s*n_i. Lossless; detokenize() inverts it.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 4:
        n_s, n_r, n_i, two = y.shape
        if two != 2:
            raise DimensionError(f"trailing real/imag axis must be 2, got {y.shape}")
        return np.transpose(y, (1, 0, 2, 3)).reshape(n_r, 2 * n_s * n_i)
    if y.ndim == 5:
        b, n_s, n_r, n_i, two = y.shape
        if two != 2:
            raise DimensionError(f"trailing real/imag axis must be 2, got {y.shape}")
        return np.transpose(y, (0, 2, 1, 3, 4)).reshape(b, n_r, 2 * n_s * n_i)
    raise DimensionError(f"expected rank 4 or 5 received grid, got shape {y.shape}")


def detokenize(tokens, n_s, n_i=1):
    """Inverse of tokenize: (n_r, 2*n_s*n_i) -> (n_s, n_r, n_i, 2)."""
    tokens = np.asarray(tokens)
    n_r = tokens.shape[0]
    y = tokens.reshape(n_r, n_s, n_i, 2)
    return np.transpose(y, (1, 0, 2, 3))


# -- parameter helpers -------------------------------------------------------------


def glorot(rng, n_in, n_out):
    return Tensor(
        rng.standard_normal((n_in, n_out)) * np.sqrt(2.0 / (n_in + n_out)),
        requires_grad=True,
    )


def zeros_param(*shape):
    return Tensor(np.zeros(shape), requires_grad=True)


def ones_param(*shape):
    return Tensor(np.ones(shape), requires_grad=True)


class Module:
    """Minimal parameter container shared by all models."""

    kind = "base"

    def __init__(self):
        self._params = []  # list of (name, Tensor)

    def add_param(self, name, tensor):
        self._params.append((name, tensor))
        return tensor

    def parameters(self):
        return list(self._params)

    def num_params(self):
        return int(sum(t.size for _, t in self._params))

    def zero_grad(self):
        for _, t in self._params:
            t.grad = None

    def state(self):
        return {name: t.data.copy() for name, t in self._params}

    def load_state(self, state):
        for name, t in self._params:
            if name not in state:
                raise KeyError(f"checkpoint is missing parameter {name!r}")
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != t.shape:
                raise DimensionError(
                    f"parameter {name!r}: checkpoint shape {arr.shape} != model {t.shape}"
                )
            t.data = arr.copy()

    def prepare(self, ys):
        """Map a batch of raw received grids to the model's input array."""
        raise NotImplementedError

    def forward(self, inp, training=False, rng=None):
        raise NotImplementedError

    def predict(self, ys):
        """Eval-mode forward returning soft outputs plus hard decisions."""
        x_hat = self.forward(self.prepare(ys)).data
        return ModelOutput(x_hat, hard_decision(x_hat))


# -- encoder building blocks ----------------------------------------------------------


class EncoderLayer:
    """Post-norm transformer layer: MHA + residual + LN, FF + residual + LN."""

    def __init__(self, model, tag, cfg, rng):
        d, h = cfg.d_model, cfg.heads
        self.attn = AttentionParams.init(d, d, h, d // h, rng)
        names = (
            [f"{tag}.attn.h{i}.wq" for i in range(h)]
            + [f"{tag}.attn.h{i}.wk" for i in range(h)]
            + [f"{tag}.attn.h{i}.wv" for i in range(h)]
            + [f"{tag}.attn.wo"]
        )
        for name, t in zip(names, self.attn.tensors()):
            model.add_param(name, t)
        self.ln1_g = model.add_param(f"{tag}.ln1.g", ones_param(d))
        self.ln1_b = model.add_param(f"{tag}.ln1.b", zeros_param(d))
        self.ff_w1 = model.add_param(f"{tag}.ff.w1", glorot(rng, d, cfg.d_ff))
        self.ff_b1 = model.add_param(f"{tag}.ff.b1", zeros_param(cfg.d_ff))
        self.ff_w2 = model.add_param(f"{tag}.ff.w2", glorot(rng, cfg.d_ff, d))
        self.ff_b2 = model.add_param(f"{tag}.ff.b2", zeros_param(d))
        self.ln2_g = model.add_param(f"{tag}.ln2.g", ones_param(d))
        self.ln2_b = model.add_param(f"{tag}.ln2.b", zeros_param(d))

    def __call__(self, x):
        a = multi_head_attention(x, self.attn)
        x = layer_norm(x + a, self.ln1_g, self.ln1_b)
        f = linear(relu(linear(x, self.ff_w1, self.ff_b1)), self.ff_w2, self.ff_b2)
        return layer_norm(x + f, self.ln2_g, self.ln2_b)


class PredictionHead:
    """Concat -> two-layer MLP -> sigmoid -> (n_s, n_t, 2)."""

    def __init__(self, model, frame, d_model, mlp_hidden, dropout_p, rng):
        self.frame = frame
        self.d_model = d_model
        self.dropout_p = dropout_p
        n_in = frame.n_t * d_model
        n_out = frame.bits_per_frame
        self.w1 = model.add_param("head.w1", glorot(rng, n_in, mlp_hidden))
        self.b1 = model.add_param("head.b1", zeros_param(mlp_hidden))
        self.w2 = model.add_param("head.w2", glorot(rng, mlp_hidden, n_out))
        self.b2 = model.add_param("head.b2", zeros_param(n_out))

    def __call__(self, p, training=False, rng=None):
        # p: (b, n_t, d_model) -> flat (b, n_t*d_model)
        b = p.shape[0]
        flat = reshape(p, (b, self.frame.n_t * self.d_model))
        h = relu(linear(flat, self.w1, self.b1))
        h = dropout(h, self.dropout_p, rng=rng, training=training)
        out = sigmoid(linear(h, self.w2, self.b2))
        return reshape(out, (b, self.frame.n_s, self.frame.n_t, 2))


class Aggregator:
    """Reduce n_r token features to n_t via pooling or strided 1-D conv."""

    def __init__(self, model, cfg, frame, rng):
        if frame.n_r % frame.n_t:
            raise ConfigError(
                f"n_r ({frame.n_r}) must be divisible by n_t ({frame.n_t}) "
                "for token aggregation"
            )
        self.window = frame.n_r // frame.n_t
        self.mode = cfg.aggregation
        self.pool_kind = cfg.pool_kind
        if self.mode == "conv":
            d = cfg.d_model
            self.w = model.add_param(
                "agg.w",
                Tensor(
                    rng.standard_normal((self.window, d, d))
                    * np.sqrt(2.0 / (self.window * d + d)),
                    requires_grad=True,
                ),
            )
            self.b = model.add_param("agg.b", zeros_param(d))

    def __call__(self, f):
        if self.mode == "conv":
            return conv1d(f, self.w, stride=self.window) + self.b
        if self.pool_kind == "avg":
            return avg_pool1d(f, self.window)
        return max_pool1d(f, self.window)


class SigTModel(Module):
    """Transformer encoder over antenna tokens with conv/pool aggregation."""

    kind = "sigt"

    def __init__(self, cfg, frame, rng):
        super().__init__()
        self.cfg = cfg
        self.frame = frame
        d_in = frame.token_width
        self.w_in = self.add_param("proj.w", glorot(rng, d_in, cfg.d_model))
        self.b_in = self.add_param("proj.b", zeros_param(cfg.d_model))
        self.layers = [
            EncoderLayer(self, f"enc{i}", cfg, rng) for i in range(cfg.depth)
        ]
        self.agg = Aggregator(self, cfg, frame, rng)
        self.head = PredictionHead(
            self, frame, cfg.d_model, cfg.mlp_hidden, cfg.dropout_p, rng
        )

    def prepare(self, ys):
        return tokenize(ys)

    def encode(self, tokens):
        """Input projection then the encoder stack: (b, n_r, d) -> (b, n_r, d_model)."""
        x = linear(tokens, self.w_in, self.b_in)
        for layer in self.layers:
            x = layer(x)
        return x

    def forward(self, tokens, training=False, rng=None):
        if not isinstance(tokens, Tensor):
            tokens = Tensor(tokens)
        squeeze = tokens.ndim == 2
        if squeeze:
            tokens = reshape(tokens, (1,) + tokens.shape)
        if tokens.shape[-1] != self.frame.token_width:
            raise DimensionError(
                f"token width {tokens.shape[-1]} != 2*n_s*n_i = {self.frame.token_width}"
            )
        feats = self.encode(tokens)
        pooled = self.agg(feats)
        out = self.head(pooled, training=training, rng=rng)
        return reshape(out, out.shape[1:]) if squeeze else out


def sigt_num_params(cfg, frame):
    """Closed-form parameter count (pure function of the two configs)."""
    d, h, ff = cfg.d_model, cfg.heads, cfg.d_ff
    n = frame.token_width * d + d  # input projection
    per_layer = 4 * d * d + 2 * d  # attention (3 fused projections + output), LNs
    per_layer += d * ff + ff + ff * d + d + 2 * d  # feed-forward + second LN
    n += cfg.depth * per_layer
    if cfg.aggregation == "conv":
        w = frame.n_r // frame.n_t
        n += w * d * d + d
    n += frame.n_t * d * cfg.mlp_hidden + cfg.mlp_hidden
    n += cfg.mlp_hidden * frame.bits_per_frame + frame.bits_per_frame
    return n
