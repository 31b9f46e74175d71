"""Dense float64 tensors with reverse-mode automatic differentiation.

Every value flowing through the neural models is a `Tensor`: a flat-stored
(row-major) numpy float64 array plus an optional record of how it was computed.
Calling `backward()` on a scalar walks the recorded graph in reverse topological
order and accumulates d(scalar)/d(leaf) into `.grad` of every leaf tensor that
was created with `requires_grad=True`.

Design notes:
  * float64 only; gradient checking drives the precision choice.
  * ops materialize their outputs (no lazy views); the tape holds references to
    parent tensors plus a vector-Jacobian-product closure.
  * limited numpy-style broadcasting is supported by the elementwise ops; the
    backward pass sums gradients over broadcast axes.
"""

import numpy as np

from .errors import ContractError, DimensionError


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjp")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._vjp = None

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def _from_op(data, parents, vjp):
        out = Tensor(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._vjp = vjp
        return out

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = np.zeros_like(self.data)

    # -- autodiff -------------------------------------------------------------

    def backward(self):
        """Accumulate d(self)/d(leaf) into .grad of every reachable leaf.

        self must be a scalar (rank 0 or a single element).
        """
        if self.data.size != 1:
            raise ContractError(
                f"backward() requires a scalar loss, got shape {self.shape}"
            )
        topo = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))

        grads = {id(self): np.ones_like(self.data)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._vjp is None:
                # leaf tensor: accumulate
                if node.requires_grad:
                    if node.grad is None:
                        node.grad = g.copy()
                    else:
                        node.grad += g
                continue
            for parent, pg in zip(node._parents, node._vjp(g)):
                if not parent.requires_grad or pg is None:
                    continue
                acc = grads.get(id(parent))
                if acc is None:
                    grads[id(parent)] = pg
                else:
                    acc += pg

    # -- operator sugar ---------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __pow__(self, c):
        return power(self, c)

    def __matmul__(self, other):
        return matmul(self, other)

    def reshape(self, *shape):
        return reshape(self, *shape)

    def transpose(self, *axes):
        return transpose(self, *axes)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def max(self, axis=None, keepdims=False):
        return tmax(self, axis=axis, keepdims=keepdims)

    def item(self):
        return float(self.data)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad, shape):
    """Sum `grad` down to `shape` (inverse of numpy broadcasting)."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# -- elementwise arithmetic ----------------------------------------------------


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.data + b.data

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor._from_op(out, (a, b), vjp)


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.data - b.data

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor._from_op(out, (a, b), vjp)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.data * b.data

    def vjp(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor._from_op(out, (a, b), vjp)


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data

    def vjp(g):
        ga = _unbroadcast(g / b.data, a.shape)
        gb = _unbroadcast(-g * a.data / (b.data * b.data), b.shape)
        return ga, gb

    return Tensor._from_op(out, (a, b), vjp)


def power(a, c):
    """Elementwise a**c for a constant exponent c."""
    a = as_tensor(a)
    c = float(c)
    out = a.data**c

    def vjp(g):
        return (g * c * a.data ** (c - 1.0),)

    return Tensor._from_op(out, (a,), vjp)


def texp(a):
    a = as_tensor(a)
    out = np.exp(a.data)

    def vjp(g):
        return (g * out,)

    return Tensor._from_op(out, (a,), vjp)


def tlog(a):
    a = as_tensor(a)
    out = np.log(a.data)

    def vjp(g):
        return (g / a.data,)

    return Tensor._from_op(out, (a,), vjp)


# -- activations -----------------------------------------------------------------


def relu(a):
    a = as_tensor(a)
    out = np.maximum(a.data, 0.0)

    def vjp(g):
        return (g * (a.data > 0.0),)

    return Tensor._from_op(out, (a,), vjp)


def sigmoid(a):
    a = as_tensor(a)
    out = 1.0 / (1.0 + np.exp(-a.data))

    def vjp(g):
        return (g * out * (1.0 - out),)

    return Tensor._from_op(out, (a,), vjp)


def tanh(a):
    a = as_tensor(a)
    out = np.tanh(a.data)

    def vjp(g):
        return (g * (1.0 - out * out),)

    return Tensor._from_op(out, (a,), vjp)


def softmax(a, axis):
    """Exp-normalize along `axis` with max-subtraction for overflow safety."""
    a = as_tensor(a)
    if not -a.ndim <= axis < a.ndim:
        raise DimensionError(f"softmax axis {axis} out of range for shape {a.shape}")
    z = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def vjp(g):
        # dx = y * (g - sum(g*y, axis))
        dot = (g * out).sum(axis=axis, keepdims=True)
        return (out * (g - dot),)

    return Tensor._from_op(out, (a,), vjp)


# -- reductions -------------------------------------------------------------------


def tsum(a, axis=None, keepdims=False):
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, a.shape).copy(),)
        g2 = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(g2, a.shape).copy(),)

    return Tensor._from_op(out, (a,), vjp)


def tmean(a, axis=None, keepdims=False):
    a = as_tensor(a)
    n = a.size if axis is None else a.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def tmax(a, axis=None, keepdims=False):
    """Max along an axis; gradient flows to the first-occurring maximum."""
    a = as_tensor(a)
    out = a.data.max(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            mask = np.zeros_like(a.data)
            mask.flat[np.argmax(a.data)] = 1.0
            return (mask * g,)
        g2 = g if keepdims else np.expand_dims(g, axis)
        out2 = out if keepdims else np.expand_dims(out, axis)
        hit = a.data == out2
        # ties: first index along axis only
        first = hit.cumsum(axis=axis) == 1
        mask = hit & first
        return (mask * g2,)

    return Tensor._from_op(out, (a,), vjp)


# -- shape manipulation -------------------------------------------------------------


def reshape(a, *shape):
    a = as_tensor(a)
    if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
        shape = tuple(shape[0])
    out = a.data.reshape(shape)

    def vjp(g):
        return (g.reshape(a.shape),)

    return Tensor._from_op(out, (a,), vjp)


def transpose(a, *axes):
    a = as_tensor(a)
    if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
        axes = tuple(axes[0])
    if not axes:
        axes = tuple(reversed(range(a.ndim)))
    inv = np.argsort(axes)

    def vjp(g):
        return (g.transpose(inv),)

    return Tensor._from_op(a.data.transpose(axes).copy(), (a,), vjp)


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.ascontiguousarray(p) for p in np.split(g, splits, axis=axis))

    return Tensor._from_op(out, tensors, vjp)


def narrow(a, axis, start, length):
    """Slice `length` entries from `start` along `axis`."""
    a = as_tensor(a)
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)

    def vjp(g):
        full = np.zeros_like(a.data)
        full[idx] = g
        return (full,)

    return Tensor._from_op(a.data[idx].copy(), (a,), vjp)


# -- linear algebra -------------------------------------------------------------------


def matmul(a, b):
    """Matrix product with numpy semantics on the last two axes.

    Rank-2 x rank-2 is the plain matrix product; higher ranks behave like
    np.matmul (stacked matrices with broadcasting on the leading axes).
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(
            f"matmul needs rank >= 2 operands, got {a.shape} @ {b.shape}"
        )
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    out = a.data @ b.data

    def vjp(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        if ga.shape != a.shape:
            ga = _unbroadcast(ga, a.shape)
        if gb.shape != b.shape:
            gb = _unbroadcast(gb, b.shape)
        return ga, gb

    return Tensor._from_op(out, (a, b), vjp)


def linear(x, w, b=None):
    """x @ w (+ b). w is (in, out); b broadcasts over leading axes."""
    out = matmul(x, w)
    return out if b is None else add(out, b)


# -- normalization ----------------------------------------------------------------------


def layer_norm(x, gamma, beta, eps=1e-5):
    """Normalize the last axis to zero mean / unit variance, then affine."""
    mu = tmean(x, axis=-1, keepdims=True)
    xc = sub(x, mu)
    var = tmean(mul(xc, xc), axis=-1, keepdims=True)
    inv = power(add(var, eps), -0.5)
    return add(mul(mul(xc, inv), gamma), beta)


# -- convolution / pooling over the token axis --------------------------------------------


def _conv1d_check(x, w, stride, padding):
    if x.ndim != 3 or w.ndim != 3:
        raise DimensionError(
            f"conv1d expects x (B,L,Cin) and w (k,Cin,Cout), got {x.shape}, {w.shape}"
        )
    if x.shape[2] != w.shape[1]:
        raise DimensionError(
            f"conv1d channel mismatch: input {x.shape[2]} vs kernel {w.shape[1]}"
        )
    k = w.shape[0]
    l_out = (x.shape[1] + 2 * padding - k) // stride + 1
    if l_out < 1:
        raise DimensionError(
            f"conv1d kernel {k} (stride {stride}) too large for length {x.shape[1]}"
        )
    return k, l_out


def conv1d(x, w, stride=1, padding=0):
    """1-D convolution along the middle (token) axis, channels last.

    x: (B, L, Cin), w: (k, Cin, Cout) -> (B, L_out, Cout).
    Computed as k shifted matmuls, so no im2col buffer is retained.
    """
    x, w = as_tensor(x), as_tensor(w)
    k, l_out = _conv1d_check(x, w, stride, padding)
    xp = (
        np.pad(x.data, ((0, 0), (padding, padding), (0, 0)))
        if padding
        else x.data
    )
    out = np.zeros((x.shape[0], l_out, w.shape[2]))
    for j in range(k):
        out += xp[:, j : j + stride * l_out : stride, :] @ w.data[j]

    def vjp(g):
        gx = np.zeros_like(xp)
        gw = np.zeros_like(w.data)
        for j in range(k):
            win = xp[:, j : j + stride * l_out : stride, :]
            gw[j] = np.einsum("blc,blo->co", win, g)
            gx[:, j : j + stride * l_out : stride, :] += g @ w.data[j].T
        if padding:
            gx = gx[:, padding : padding + x.shape[1], :]
        return gx, gw

    return Tensor._from_op(out, (x, w), vjp)


def conv2d(x, w, stride=1, padding=0):
    """2-D convolution, channels last: x (B,H,W,Cin), w (kh,kw,Cin,Cout)."""
    x, w = as_tensor(x), as_tensor(w)
    if x.ndim != 4 or w.ndim != 4:
        raise DimensionError(
            f"conv2d expects x (B,H,W,Cin) and w (kh,kw,Cin,Cout), got {x.shape}, {w.shape}"
        )
    if x.shape[3] != w.shape[2]:
        raise DimensionError(
            f"conv2d channel mismatch: input {x.shape[3]} vs kernel {w.shape[2]}"
        )
    kh, kw = w.shape[0], w.shape[1]
    h_out = (x.shape[1] + 2 * padding - kh) // stride + 1
    w_out = (x.shape[2] + 2 * padding - kw) // stride + 1
    if h_out < 1 or w_out < 1:
        raise DimensionError(f"conv2d kernel {kh}x{kw} too large for {x.shape}")
    xp = (
        np.pad(x.data, ((0, 0), (padding, padding), (padding, padding), (0, 0)))
        if padding
        else x.data
    )
    out = np.zeros((x.shape[0], h_out, w_out, w.shape[3]))
    for u in range(kh):
        for v in range(kw):
            win = xp[:, u : u + stride * h_out : stride, v : v + stride * w_out : stride, :]
            out += win @ w.data[u, v]

    def vjp(g):
        gx = np.zeros_like(xp)
        gw = np.zeros_like(w.data)
        for u in range(kh):
            for v in range(kw):
                sl = (
                    slice(None),
                    slice(u, u + stride * h_out, stride),
                    slice(v, v + stride * w_out, stride),
                    slice(None),
                )
                gw[u, v] = np.einsum("bhwc,bhwo->co", xp[sl], g)
                gx[sl] += g @ w.data[u, v].T
        if padding:
            gx = gx[:, padding : padding + x.shape[1], padding : padding + x.shape[2], :]
        return gx, gw

    return Tensor._from_op(out, (x, w), vjp)


def avg_pool1d(x, window):
    """Non-overlapping mean pooling along the token axis. x: (B, L, C)."""
    x = as_tensor(x)
    b, l, c = x.shape
    if l % window:
        raise DimensionError(f"pool window {window} does not divide length {l}")
    return tmean(reshape(x, (b, l // window, window, c)), axis=2)


def max_pool1d(x, window):
    """Non-overlapping max pooling along the token axis. x: (B, L, C)."""
    x = as_tensor(x)
    b, l, c = x.shape
    if l % window:
        raise DimensionError(f"pool window {window} does not divide length {l}")
    return tmax(reshape(x, (b, l // window, window, c)), axis=2)


# -- regularization ---------------------------------------------------------------------------


def dropout(x, p, rng=None, training=False):
    """Inverted dropout: train mode zeroes entries w.p. p and scales by 1/(1-p).

    Eval mode (training=False) is the identity. A numpy Generator must be
    supplied in train mode so masks are owned by the caller's seed chain.
    """
    x = as_tensor(x)
    if not training or p == 0.0:
        return x
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0,1), got {p}")
    if rng is None:
        raise ValueError("dropout in train mode requires an rng")
    scale = 1.0 / (1.0 - p)
    mask = (rng.random(x.shape) >= p) * scale

    def vjp(g):
        return (g * mask,)

    return Tensor._from_op(x.data * mask, (x,), vjp)
