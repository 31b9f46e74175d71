"""Comparison networks sharing the SigT training/eval interface: an MLP bank
(FC-DNN), a residual-CNN (CSINet-style), and an LSTM-backbone SigT variant.

All three consume the same Samples and emit (n_s, n_t, 2) sigmoid grids, so
benchmark runs differ only in the network.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError
from .models import (
    Aggregator,
    Module,
    PredictionHead,
    glorot,
    tokenize,
    zeros_param,
)
from .tensor import (
    Tensor,
    concat,
    conv2d,
    dropout,
    linear,
    narrow,
    relu,
    reshape,
    sigmoid,
    tanh,
)


@dataclass
class BaselineConfig:
    kind: str  # fcdnn | csinet | lstm
    fcdnn_hidden: tuple = (1000, 500, 250)  # the cited widths 500/250/120, doubled
    csinet_channels: tuple = (8, 16, 2)
    csinet_blocks: int = 2
    lstm_d_model: int = 512
    lstm_mlp_hidden: int = 1024
    dropout_p: float = 0.0

    def __post_init__(self):
        if self.kind not in ("fcdnn", "csinet", "lstm"):
            raise ConfigError(f"unknown baseline kind {self.kind!r}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ConfigError(f"dropout_p must be in [0,1), got {self.dropout_p}")
        self.fcdnn_hidden = tuple(int(w) for w in self.fcdnn_hidden)
        self.csinet_channels = tuple(int(c) for c in self.csinet_channels)
        if len(self.csinet_channels) != 3:
            raise ConfigError("csinet_channels must list the three conv widths")

    def to_dict(self):
        return {
            "kind": self.kind,
            "fcdnn_hidden": ",".join(str(w) for w in self.fcdnn_hidden),
            "csinet_channels": ",".join(str(c) for c in self.csinet_channels),
            "csinet_blocks": self.csinet_blocks,
            "lstm_d_model": self.lstm_d_model,
            "lstm_mlp_hidden": self.lstm_mlp_hidden,
            "dropout_p": self.dropout_p,
        }


class FCDNNModel(Module):
    """One independent MLP per receive antenna; summed features, linear readout.

    No weight sharing across antennas: token r only ever passes through MLP r.
    """

    kind = "fcdnn"

    def __init__(self, cfg, frame, rng):
        super().__init__()
        self.cfg = cfg
        self.frame = frame
        self.mlps = []
        widths = cfg.fcdnn_hidden
        for r in range(frame.n_r):
            layers = []
            n_in = frame.token_width
            for j, w in enumerate(widths):
                layers.append(
                    (
                        self.add_param(f"mlp{r}.w{j}", glorot(rng, n_in, w)),
                        self.add_param(f"mlp{r}.b{j}", zeros_param(w)),
                    )
                )
                n_in = w
            self.mlps.append(layers)
        n_out = frame.bits_per_frame
        self.w_out = self.add_param("out.w", glorot(rng, widths[-1], n_out))
        self.b_out = self.add_param("out.b", zeros_param(n_out))

    def prepare(self, ys):
        return tokenize(ys)

    def forward(self, tokens, training=False, rng=None):
        if not isinstance(tokens, Tensor):
            tokens = Tensor(tokens)
        squeeze = tokens.ndim == 2
        if squeeze:
            tokens = reshape(tokens, (1,) + tokens.shape)
        b = tokens.shape[0]
        if tokens.shape[1] != self.frame.n_r:
            raise DimensionError(
                f"expected {self.frame.n_r} antenna tokens, got {tokens.shape[1]}"
            )
        total = None
        for r, layers in enumerate(self.mlps):
            h = reshape(narrow(tokens, 1, r, 1), (b, self.frame.token_width))
            for w, bias in layers:
                h = relu(linear(h, w, bias))
                h = dropout(h, self.cfg.dropout_p, rng=rng, training=training)
            total = h if total is None else total + h
        out = sigmoid(linear(total, self.w_out, self.b_out))
        out = reshape(out, (b, self.frame.n_s, self.frame.n_t, 2))
        return reshape(out, out.shape[1:]) if squeeze else out


class RefineBlock:
    """Residual branch of three 3x3 convs (C -> c1 -> c2 -> C), then add.

    No activation after the add, so a zeroed last conv makes the block exactly
    the identity.
    """

    def __init__(self, model, tag, channels, rng):
        c1, c2, c_out = channels

        def kernel(name, c_in, c_o):
            fan = 9 * c_in + c_o
            return model.add_param(
                name,
                Tensor(
                    rng.standard_normal((3, 3, c_in, c_o)) * np.sqrt(2.0 / fan),
                    requires_grad=True,
                ),
            )

        self.w1 = kernel(f"{tag}.c1.w", c_out, c1)
        self.b1 = model.add_param(f"{tag}.c1.b", zeros_param(c1))
        self.w2 = kernel(f"{tag}.c2.w", c1, c2)
        self.b2 = model.add_param(f"{tag}.c2.b", zeros_param(c2))
        self.w3 = kernel(f"{tag}.c3.w", c2, c_out)
        self.b3 = model.add_param(f"{tag}.c3.b", zeros_param(c_out))

    def __call__(self, x):
        h = relu(conv2d(x, self.w1, padding=1) + self.b1)
        h = relu(conv2d(h, self.w2, padding=1) + self.b2)
        h = conv2d(h, self.w3, padding=1) + self.b3
        return x + h


class CSINetModel(Module):
    """Stacked residual refine blocks over the (n_s, n_r*n_i) real/imag image,
    then flatten + linear + sigmoid."""

    kind = "csinet"

    def __init__(self, cfg, frame, rng):
        super().__init__()
        self.cfg = cfg
        self.frame = frame
        self.blocks = [
            RefineBlock(self, f"block{i}", cfg.csinet_channels, rng)
            for i in range(cfg.csinet_blocks)
        ]
        n_flat = frame.n_s * frame.n_r * frame.n_i * 2
        n_out = frame.bits_per_frame
        self.w_out = self.add_param("out.w", glorot(rng, n_flat, n_out))
        self.b_out = self.add_param("out.b", zeros_param(n_out))

    def prepare(self, ys):
        """(b, n_s, n_r, n_i, 2) -> channels-last image (b, n_s, n_r*n_i, 2)."""
        ys = np.asarray(ys, dtype=np.float64)
        if ys.ndim == 4:
            ys = ys[np.newaxis]
        b, n_s, n_r, n_i, _ = ys.shape
        return ys.reshape(b, n_s, n_r * n_i, 2)

    def forward(self, image, training=False, rng=None):
        if not isinstance(image, Tensor):
            image = Tensor(image)
        squeeze = image.ndim == 3
        if squeeze:
            image = reshape(image, (1,) + image.shape)
        b = image.shape[0]
        h = image
        for block in self.blocks:
            h = block(h)
        flat = reshape(h, (b, self.frame.n_s * self.frame.n_r * self.frame.n_i * 2))
        flat = dropout(flat, self.cfg.dropout_p, rng=rng, training=training)
        out = sigmoid(linear(flat, self.w_out, self.b_out))
        out = reshape(out, (b, self.frame.n_s, self.frame.n_t, 2))
        return reshape(out, out.shape[1:]) if squeeze else out


@dataclass
class _AggSpec:
    # the slice of SigTConfig the Aggregator reads
    d_model: int
    aggregation: str
    pool_kind: str


class LSTMModel(Module):
    """Single recurrent layer over the antenna-token sequence; aggregation and
    prediction head identical to SigT (conv aggregation)."""

    kind = "lstm"

    def __init__(self, cfg, frame, rng):
        super().__init__()
        self.cfg = cfg
        self.frame = frame
        d_in = frame.token_width
        d = cfg.lstm_d_model
        self.d_model = d
        for gate in ("i", "f", "g", "o"):
            setattr(self, f"wx{gate}", self.add_param(f"lstm.wx{gate}", glorot(rng, d_in, d)))
            setattr(self, f"wh{gate}", self.add_param(f"lstm.wh{gate}", glorot(rng, d, d)))
            setattr(self, f"b{gate}", self.add_param(f"lstm.b{gate}", zeros_param(d)))
        agg_cfg = _AggSpec(d_model=d, aggregation="conv", pool_kind="avg")
        self.agg = Aggregator(self, agg_cfg, frame, rng)
        self.head = PredictionHead(self, frame, d, cfg.lstm_mlp_hidden, cfg.dropout_p, rng)

    def prepare(self, ys):
        return tokenize(ys)

    def forward(self, tokens, training=False, rng=None):
        if not isinstance(tokens, Tensor):
            tokens = Tensor(tokens)
        squeeze = tokens.ndim == 2
        if squeeze:
            tokens = reshape(tokens, (1,) + tokens.shape)
        b, n_r, d_in = tokens.shape
        h = Tensor(np.zeros((b, self.d_model)))
        c = Tensor(np.zeros((b, self.d_model)))
        outputs = []
        for t in range(n_r):
            x_t = reshape(narrow(tokens, 1, t, 1), (b, d_in))
            gi = sigmoid(linear(x_t, self.wxi) + linear(h, self.whi) + self.bi)
            gf = sigmoid(linear(x_t, self.wxf) + linear(h, self.whf) + self.bf)
            gg = tanh(linear(x_t, self.wxg) + linear(h, self.whg) + self.bg)
            go = sigmoid(linear(x_t, self.wxo) + linear(h, self.who) + self.bo)
            c = gf * c + gi * gg
            h = go * tanh(c)
            outputs.append(reshape(h, (b, 1, self.d_model)))
        feats = concat(outputs, axis=1)  # (b, n_r, d_model)
        pooled = self.agg(feats)
        out = self.head(pooled, training=training, rng=rng)
        return reshape(out, out.shape[1:]) if squeeze else out
