"""MSE training loop, Adam/SGD optimizers, and the average-accuracy metric.

The average accuracy (AACC) of a batch of recovered bit grids is 1 minus the
mean absolute difference against the ground truth, i.e. 1 - BER, so perfect
recovery scores 1.0 and chance level on balanced bits is 0.5.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, DomainError, NumericError
from .tensor import Tensor, mul, sub, tmean
from .models import hard_decision

# rng stream tags for one training run
_MODEL_STREAM = 10
_SHUFFLE_STREAM = 11
_DROPOUT_STREAM = 12


@dataclass
class RunConfig:
    optimizer: str = "adam"  # adam | sgd
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 640
    epochs: int = 100
    snr_db: float = 10.0
    seed: int = 0
    nb: int | None = None  # minibatch count capping the train-set size

    def __post_init__(self):
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"optimizer must be adam|sgd, got {self.optimizer!r}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.nb is not None and self.nb < 1:
            raise ConfigError(f"nb must be >= 1, got {self.nb}")

    def to_dict(self):
        return {
            "optimizer": self.optimizer,
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "snr_db": self.snr_db,
            "seed": self.seed,
            "nb": "" if self.nb is None else self.nb,
        }


@dataclass
class Metrics:
    epoch: int
    train_loss: float
    train_aacc: float
    test_aacc: float
    wall_time: float


def mse_loss(x_hat, x):
    """Mean squared error over every bit of every signal in the batch."""
    if not isinstance(x_hat, Tensor):
        x_hat = Tensor(x_hat)
    target = np.asarray(x, dtype=np.float64)
    if x_hat.shape != target.shape:
        raise DimensionError(
            f"prediction shape {x_hat.shape} != target shape {target.shape}"
        )
    diff = sub(x_hat, target)
    return tmean(mul(diff, diff))


def aacc(x_tilde, x):
    """Average accuracy: 1 - mean absolute bit difference (== 1 - BER)."""
    a = np.asarray(x_tilde)
    b = np.asarray(x)
    if a.shape != b.shape:
        raise DimensionError(f"bit grids differ in shape: {a.shape} vs {b.shape}")
    if not (np.isin(a, (0, 1)).all() and np.isin(b, (0, 1)).all()):
        raise DomainError("aacc requires binary inputs")
    return 1.0 - float(np.mean(np.abs(a.astype(np.int64) - b.astype(np.int64))))


class SGD:
    """Plain gradient descent, no momentum."""

    def __init__(self, params, lr):
        self.params = list(params)
        self.lr = lr

    def step(self):
        for _, p in self.params:
            if p.grad is not None:
                p.data -= self.lr * p.grad

    def zero_grad(self):
        for _, p in self.params:
            p.grad = None


class Adam:
    """Adam with bias correction (the standard first/second moment update)."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for _, p in self.params]
        self.v = [np.zeros_like(p.data) for _, p in self.params]

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for i, (_, p) in enumerate(self.params):
            g = p.grad
            if g is None:
                continue
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * (g * g)
            m_hat = self.m[i] / (1.0 - b1**self.t)
            v_hat = self.v[i] / (1.0 - b2**self.t)
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self):
        for _, p in self.params:
            p.grad = None


def make_optimizer(params, run_cfg):
    if run_cfg.optimizer == "adam":
        return Adam(params, run_cfg.lr, run_cfg.beta1, run_cfg.beta2, run_cfg.eps)
    return SGD(params, run_cfg.lr)


def evaluate_model(model, ys, xs, batch_size=256):
    """Eval-mode AACC over a split (exact integer bit-error count)."""
    n = ys.shape[0]
    errors = 0
    for lo in range(0, n, batch_size):
        out = model.predict(ys[lo : lo + batch_size])
        errors += int(np.sum(out.x_tilde != xs[lo : lo + batch_size]))
    return 1.0 - errors / (n * xs[0].size)


def train(model, train_ds, test_ds, run_cfg, log=None):
    """Seeded epoch loop; returns (metrics list, best-test-AACC parameter state).

    Minibatches are reshuffled each epoch from the run seed. Train AACC/loss
    are running metrics over the epoch's batches (weights as they evolve);
    test AACC comes from a dedicated eval pass. epochs=0 degenerates to a
    single evaluation-only record (epoch 0).
    """
    ys, xs = train_ds.ys, train_ds.xs
    if run_cfg.nb is not None:
        cap = min(run_cfg.nb * run_cfg.batch_size, ys.shape[0])
        ys, xs = ys[:cap], xs[:cap]
    n = ys.shape[0]
    shuffle_rng = np.random.default_rng([run_cfg.seed, _SHUFFLE_STREAM])
    dropout_rng = np.random.default_rng([run_cfg.seed, _DROPOUT_STREAM])
    opt = make_optimizer(model.parameters(), run_cfg)

    history = []
    best_aacc = -1.0
    best_state = model.state()
    t0 = time.perf_counter()

    if run_cfg.epochs == 0:
        train_aacc = evaluate_model(model, ys, xs)
        test_aacc = evaluate_model(model, test_ds.ys, test_ds.xs)
        loss = 0.0
        for lo in range(0, n, run_cfg.batch_size):
            out = model.forward(model.prepare(ys[lo : lo + run_cfg.batch_size]))
            loss += mse_loss(out, xs[lo : lo + run_cfg.batch_size]).item() * min(
                run_cfg.batch_size, n - lo
            )
        m = Metrics(0, loss / n, train_aacc, test_aacc, time.perf_counter() - t0)
        if log:
            log(_format_metrics(m))
        return [m], best_state

    for epoch in range(1, run_cfg.epochs + 1):
        perm = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        epoch_errors = 0
        for lo in range(0, n, run_cfg.batch_size):
            idx = perm[lo : lo + run_cfg.batch_size]
            xb = xs[idx]
            inp = model.prepare(ys[idx])
            out = model.forward(inp, training=True, rng=dropout_rng)
            loss = mse_loss(out, xb)
            lval = loss.item()
            if not np.isfinite(lval):
                raise NumericError(
                    f"non-finite loss {lval} at epoch {epoch}, batch {lo // run_cfg.batch_size}"
                )
            epoch_loss += lval * len(idx)
            epoch_errors += int(np.sum(hard_decision(out.data) != xb))
            model.zero_grad()
            loss.backward()
            opt.step()
        train_aacc = 1.0 - epoch_errors / (n * xs[0].size)
        test_aacc = evaluate_model(model, test_ds.ys, test_ds.xs)
        if test_aacc > best_aacc:
            best_aacc = test_aacc
            best_state = model.state()
        m = Metrics(epoch, epoch_loss / n, train_aacc, test_aacc, time.perf_counter() - t0)
        history.append(m)
        if log:
            log(_format_metrics(m))
    return history, best_state


def _format_metrics(m):
    return (
        f"epoch {m.epoch:4d}  loss {m.train_loss:.6f}  "
        f"train_aacc {m.train_aacc:.4f}  test_aacc {m.test_aacc:.4f}  "
        f"[{m.wall_time:.1f}s]"
    )
