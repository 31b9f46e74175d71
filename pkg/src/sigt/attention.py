"""Scaled dot-product self-attention and its multi-head wrapper.

Tokens are rows: an (N, d) matrix holds N token vectors of width d (a leading
batch axis is also accepted everywhere). Per head,

    Q = X Wq,  K = X Wk,  V = X Wv,
    out = softmax(Q K^T / sqrt(d_k), keys axis) V,

so every output token is a convex combination of value vectors. Heads are
concatenated along the feature axis and mixed by an output matrix.
"""

import numpy as np

from .errors import DimensionError
from .tensor import Tensor, as_tensor, concat, matmul, mul, softmax, transpose


class AttentionParams:
    """Per-head projection weights plus the output mix.

    wq/wk/wv: lists of h matrices shaped (d, d_q)/(d, d_k)/(d, d_v);
    wo: (h*d_v, d_out). Query and key widths must match for the 1/sqrt(d_k)
    scaling to make sense.
    """

    def __init__(self, wq, wk, wv, wo):
        self.wq = [as_tensor(w) for w in wq]
        self.wk = [as_tensor(w) for w in wk]
        self.wv = [as_tensor(w) for w in wv]
        self.wo = as_tensor(wo)
        if not (len(self.wq) == len(self.wk) == len(self.wv)) or not self.wq:
            raise DimensionError("need equal, nonzero per-head weight counts")
        d = self.wq[0].shape[0]
        for w in (*self.wq, *self.wk, *self.wv):
            if w.ndim != 2 or w.shape[0] != d:
                raise DimensionError(
                    f"head weight shaped {w.shape}, expected ({d}, width)"
                )
        if self.wq[0].shape[1] != self.wk[0].shape[1]:
            raise DimensionError(
                f"d_Q={self.wq[0].shape[1]} must equal d_K={self.wk[0].shape[1]}"
            )
        if self.wo.shape[0] != len(self.wv) * self.wv[0].shape[1]:
            raise DimensionError(
                f"wo input width {self.wo.shape[0]} != h*d_V "
                f"{len(self.wv) * self.wv[0].shape[1]}"
            )
        for arr in self.tensors():
            if not np.isfinite(arr.data).all():
                raise ValueError("attention weights must be finite")

    @property
    def heads(self):
        return len(self.wq)

    @property
    def d(self):
        return self.wq[0].shape[0]

    @property
    def d_k(self):
        return self.wk[0].shape[1]

    @property
    def d_v(self):
        return self.wv[0].shape[1]

    def tensors(self):
        return [*self.wq, *self.wk, *self.wv, self.wo]

    @classmethod
    def init(cls, d, d_model_out, heads, d_head, rng):
        """Glorot-normal initialization; d_q = d_k = d_v = d_head per head."""
        def mat(n_in, n_out):
            return Tensor(
                rng.standard_normal((n_in, n_out)) * np.sqrt(2.0 / (n_in + n_out)),
                requires_grad=True,
            )

        wq = [mat(d, d_head) for _ in range(heads)]
        wk = [mat(d, d_head) for _ in range(heads)]
        wv = [mat(d, d_head) for _ in range(heads)]
        return cls(wq, wk, wv, mat(heads * d_head, d_model_out))


def _head_attention(tokens, wq, wk, wv):
    """softmax(Q K^T / sqrt(d_k)) V for one head; tokens (..., N, d)."""
    q = matmul(tokens, wq)
    k = matmul(tokens, wk)
    v = matmul(tokens, wv)
    kt = transpose(k, tuple(range(k.ndim - 2)) + (k.ndim - 1, k.ndim - 2))
    scores = mul(matmul(q, kt), 1.0 / np.sqrt(wk.shape[1]))
    return matmul(softmax(scores, axis=-1), v)


def self_attention(tokens, params):
    """Single-head attention: (N, d) -> (N, d_v). Multi-head params are rejected."""
    tokens = as_tensor(tokens)
    if params.heads != 1:
        raise DimensionError(f"self_attention is single-head, got h={params.heads}")
    if tokens.shape[-1] != params.d:
        raise DimensionError(
            f"token width {tokens.shape[-1]} != weight width {params.d}"
        )
    return _head_attention(tokens, params.wq[0], params.wk[0], params.wv[0])


def multi_head_attention(tokens, params):
    """Concat h head outputs along features, then mix: (..., N, d) -> (..., N, d_out)."""
    tokens = as_tensor(tokens)
    if tokens.shape[-1] != params.d:
        raise DimensionError(
            f"token width {tokens.shape[-1]} != weight width {params.d}"
        )
    heads = [
        _head_attention(tokens, params.wq[i], params.wk[i], params.wv[i])
        for i in range(params.heads)
    ]
    stacked = heads[0] if len(heads) == 1 else concat(heads, axis=-1)
    return matmul(stacked, params.wo)
