"""Link-level MIMO-OFDM simulator: TX chain, multipath channel, RX front-end.

One frame is one OFDM symbol: QPSK-modulated bits on N_s subcarriers for each
of N_t transmit antennas (identity precoding, stream t on antenna t), unitary
IFFT, cyclic prefix, per-pair multipath convolution, AWGN, then CP removal and
unitary FFT at the N_r receive antennas. The frequency-domain grid is split
into real/imag planes to form the model input.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, FrameError

# rng stream tags, so sample i is reproducible independent of generation order
_POOL_STREAM = 0
_TRAIN_STREAM = 1
_TEST_STREAM = 2
_PILOT_STREAM = 3

PDP_DECAY = 4.0  # exponential power-delay profile: tap l carries power ~ e^(-l/4)


@dataclass
class FrameConfig:
    """Physical-layer dimensions of one frame."""

    n_s: int = 256  # subcarriers
    n_t: int = 4  # transmit antennas / streams
    n_r: int = 16  # receive antennas
    n_i: int = 1  # information symbols per subcarrier
    cp_len: int = 16  # cyclic prefix samples
    n_taps: int = 8  # channel impulse response length
    qam_bits: int = 2  # bits per complex symbol (QPSK)

    def __post_init__(self):
        for name in ("n_s", "n_t", "n_r", "n_i", "cp_len", "n_taps", "qam_bits"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.n_s & (self.n_s - 1):
            raise ConfigError(f"n_s must be a power of two, got {self.n_s}")
        if self.n_taps > self.cp_len:
            raise ConfigError(
                f"n_taps ({self.n_taps}) must not exceed cp_len ({self.cp_len}); "
                "the CP must absorb all inter-symbol interference"
            )
        if self.qam_bits != 2:
            raise ConfigError(
                "only QPSK (qam_bits=2) is supported; the trailing size-2 bit "
                "axis of X fixes 2 bits per symbol"
            )

    @property
    def frame_len(self):
        return self.n_s + self.cp_len

    @property
    def token_width(self):
        return 2 * self.n_s * self.n_i

    @property
    def bits_per_frame(self):
        return self.n_s * self.n_t * 2

    def to_dict(self):
        return {
            "n_s": self.n_s,
            "n_t": self.n_t,
            "n_r": self.n_r,
            "n_i": self.n_i,
            "cp_len": self.cp_len,
            "n_taps": self.n_taps,
            "qam_bits": self.qam_bits,
        }


@dataclass
class ChannelRealization:
    """One multipath draw: complex taps shaped (n_r, n_t, n_taps)."""

    taps: np.ndarray
    pool_id: int = -1


@dataclass
class Sample:
    """One (received grid, ground-truth bits) pair."""

    y: np.ndarray  # (n_s, n_r, n_i, 2) float32
    x: np.ndarray  # (n_s, n_t, 2) uint8
    snr_db: float
    channel_id: int


@dataclass
class Dataset:
    """A stack of Samples sharing one frame config and channel pool."""

    cfg: FrameConfig
    ys: np.ndarray  # (n, n_s, n_r, n_i, 2) float32
    xs: np.ndarray  # (n, n_s, n_t, 2) uint8
    channel_ids: np.ndarray  # (n,) int64
    snr_db: float
    seed: int
    split: str  # "train" | "test"
    pool_size: int
    pool: np.ndarray | None = field(default=None, repr=False)  # (pool, n_r, n_t, taps)

    def __len__(self):
        return self.ys.shape[0]

    def __getitem__(self, i):
        return Sample(self.ys[i], self.xs[i], self.snr_db, int(self.channel_ids[i]))


# -- modulation ---------------------------------------------------------------


def qam_modulate(bits):
    """Gray-mapped unit-power QPSK: (b0, b1) -> ((1-2*b0) + j(1-2*b1))/sqrt(2).

    bits: (..., 2) with entries in {0, 1} -> complex array of shape (...).
    """
    bits = np.asarray(bits)
    if bits.shape[-1] != 2:
        raise DomainError(f"expected trailing bit-pair axis of size 2, got {bits.shape}")
    if not np.isin(bits, (0, 1)).all():
        raise DomainError("qam_modulate requires binary input")
    b = bits.astype(np.float64)
    return ((1.0 - 2.0 * b[..., 0]) + 1j * (1.0 - 2.0 * b[..., 1])) / np.sqrt(2.0)


# -- OFDM ---------------------------------------------------------------------


def _check_pow2(n):
    if n < 1 or (n & (n - 1)):
        raise ConfigError(f"FFT length must be a power of two, got {n}")


def unitary_fft(x, axis=-1):
    _check_pow2(np.asarray(x).shape[axis])
    return np.fft.fft(x, axis=axis, norm="ortho")


def unitary_ifft(x, axis=-1):
    _check_pow2(np.asarray(x).shape[axis])
    return np.fft.ifft(x, axis=axis, norm="ortho")


def ifft_cp_add(freq, cp_len):
    """Unitary IFFT over the last axis, then prefix the last cp_len samples."""
    time = unitary_ifft(freq, axis=-1)
    return np.concatenate([time[..., -cp_len:], time], axis=-1)


def apply_channel(tx, chan, snr_db, rng=None):
    """Multipath superposition plus calibrated AWGN.

    tx: (n_t, length) complex time-domain signals; chan: ChannelRealization or
    raw taps (n_r, n_t, n_taps). Per receive antenna the transmit signals are
    linearly convolved with their taps and summed (truncated to the frame
    length). Noise variance targets the *nominal* received power of n_t
    unit-power streams through unit-energy taps, so rx power / noise power
    == 10^(snr_db/10); pass snr_db=None for a noiseless channel.
    """
    taps = chan.taps if isinstance(chan, ChannelRealization) else np.asarray(chan)
    tx = np.asarray(tx)
    n_t, length = tx.shape
    n_taps = taps.shape[2]
    if length < n_taps:
        raise FrameError(f"frame length {length} shorter than channel ({n_taps} taps)")
    rx = np.zeros((taps.shape[0], length), dtype=np.complex128)
    for l in range(n_taps):
        rx[:, l:] += taps[:, :, l] @ tx[:, : length - l]
    if snr_db is not None and np.isfinite(snr_db):
        if rng is None:
            raise ValueError("noisy channel requires an rng")
        noise_var = n_t / 10.0 ** (snr_db / 10.0)
        sigma = np.sqrt(noise_var / 2.0)
        rx += sigma * (
            rng.standard_normal(rx.shape) + 1j * rng.standard_normal(rx.shape)
        )
    return rx


def receive_frontend(rx, cfg):
    """CP removal + unitary FFT + real/imag split.

    rx: (n_r, n_s + cp_len) complex -> y: (n_s, n_r, n_i=1, 2) float64, rows
    indexed by subcarrier.
    """
    rx = np.asarray(rx)
    if rx.ndim != 2 or rx.shape != (cfg.n_r, cfg.frame_len):
        raise FrameError(
            f"expected rx shaped ({cfg.n_r}, {cfg.frame_len}), got {rx.shape}"
        )
    grid = unitary_fft(rx[:, cfg.cp_len :], axis=-1).T  # (n_s, n_r)
    y = np.stack([grid.real, grid.imag], axis=-1)  # (n_s, n_r, 2)
    return y[:, :, np.newaxis, :]  # (n_s, n_r, 1, 2)


def channel_frequency_response(taps, n_s):
    """Per-subcarrier channel matrices H: (n_s, n_r, n_t) complex.

    With the unitary FFT convention, Y(k) = H(k) S(k) + noise where
    H(k)[r,t] = sum_l taps[r,t,l] * exp(-2j*pi*k*l/n_s).
    """
    h = np.fft.fft(np.asarray(taps), n=n_s, axis=-1)  # (n_r, n_t, n_s)
    return np.transpose(h, (2, 0, 1))


# -- channel pool & dataset generation -----------------------------------------


def exponential_pdp(n_taps, decay=PDP_DECAY):
    """Normalized exponential power-delay profile (sums to 1)."""
    p = np.exp(-np.arange(n_taps) / decay)
    return p / p.sum()


def generate_channel_pool(cfg, pool_size, seed):
    """Draw pool_size i.i.d. Rayleigh multipath realizations.

    Taps are circularly-symmetric complex Gaussian with the exponential
    power-delay profile, so each (r, t) pair has unit energy in expectation.
    Returns an array shaped (pool_size, n_r, n_t, n_taps).
    """
    if pool_size < 1:
        raise ConfigError(f"pool_size must be >= 1, got {pool_size}")
    rng = np.random.default_rng([seed, _POOL_STREAM])
    scale = np.sqrt(exponential_pdp(cfg.n_taps) / 2.0)
    shape = (pool_size, cfg.n_r, cfg.n_t, cfg.n_taps)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def simulate_frame(bits, taps, snr_db, cfg, rng=None):
    """Run one frame through the full TX -> channel -> RX front-end chain."""
    symbols = qam_modulate(bits)  # (n_s, n_t)
    tx = ifft_cp_add(symbols.T, cfg.cp_len)  # (n_t, n_s + cp)
    rx = apply_channel(tx, taps, snr_db, rng)
    return receive_frontend(rx, cfg)


def _generate_split(cfg, pool, n, snr_db, seed, stream):
    ys = np.empty((n, cfg.n_s, cfg.n_r, cfg.n_i, 2), dtype=np.float32)
    xs = np.empty((n, cfg.n_s, cfg.n_t, 2), dtype=np.uint8)
    ids = np.empty(n, dtype=np.int64)
    for i in range(n):
        rng = np.random.default_rng([seed, stream, i])
        cid = int(rng.integers(pool.shape[0]))
        bits = rng.integers(0, 2, size=(cfg.n_s, cfg.n_t, 2), dtype=np.uint8)
        ys[i] = simulate_frame(bits, pool[cid], snr_db, cfg, rng)
        xs[i] = bits
        ids[i] = cid
    return ys, xs, ids


def generate_dataset(cfg, pool_size, n_train, n_test, snr_db, seed):
    """Build seeded train/test splits over a shared channel pool.

    Each sample draws a uniform pool member and i.i.d. uniform bits, then runs
    the full chain. Per-sample rng streams are derived from (seed, split,
    index), so regeneration is bit-identical and order-independent.
    """
    if n_train < 1 or n_test < 1:
        raise ConfigError("n_train and n_test must be >= 1")
    if cfg.n_i != 1:
        raise ConfigError("dataset generation supports n_i=1 (one symbol per subcarrier)")
    pool = generate_channel_pool(cfg, pool_size, seed)
    train = Dataset(
        cfg,
        *_generate_split(cfg, pool, n_train, snr_db, seed, _TRAIN_STREAM),
        snr_db=snr_db,
        seed=seed,
        split="train",
        pool_size=pool_size,
        pool=pool,
    )
    test = Dataset(
        cfg,
        *_generate_split(cfg, pool, n_test, snr_db, seed, _TEST_STREAM),
        snr_db=snr_db,
        seed=seed,
        split="test",
        pool_size=pool_size,
        pool=pool,
    )
    return train, test, pool


def regenerate_channel_ids(cfg, pool_size, n, seed, split):
    """Recover the per-sample channel assignment of a stored dataset.

    The binary dataset format stores only (y, x); the channel pool and the
    per-sample pool indices are functions of (seed, split, index) and are
    rebuilt on demand, e.g. for the classical receiver.
    """
    stream = _TRAIN_STREAM if split == "train" else _TEST_STREAM
    ids = np.empty(n, dtype=np.int64)
    for i in range(n):
        rng = np.random.default_rng([seed, stream, i])
        ids[i] = int(rng.integers(pool_size))
    return ids


def pilot_rng(seed, index):
    """rng stream for pilot-frame noise, disjoint from data-sample streams."""
    return np.random.default_rng([seed, _PILOT_STREAM, index])
