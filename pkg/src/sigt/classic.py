"""Conventional pilot-based receiver: LS channel estimation, ZF/MMSE detection,
QPSK hard demapping.

Serves both as a non-learned baseline and as the correctness oracle for the
simulator: a noiseless frame with perfect (or noiseless-pilot LS) channel
knowledge must come back bit-exact.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RankError
from . import phy


@dataclass
class ChannelEstimate:
    """Per-subcarrier channel matrices, shaped (n_s, n_r, n_t) complex."""

    h_hat: np.ndarray


def make_pilot_grid(cfg):
    """Time-orthogonal all-ones pilots: pilot symbol t excites antenna t only.

    Returns (n_t, n_s, n_t) complex: pilot_tx[t, k, a] is the value antenna a
    sends on subcarrier k during pilot slot t.
    """
    grid = np.zeros((cfg.n_t, cfg.n_s, cfg.n_t), dtype=np.complex128)
    for t in range(cfg.n_t):
        grid[t, :, t] = 1.0
    return grid


def simulate_pilot_rx(taps, cfg, snr_db, rng=None):
    """Receive the n_t pilot OFDM symbols through one channel realization.

    Returns (n_t, n_s, n_r) complex frequency grids, one per pilot slot.
    """
    pilots = make_pilot_grid(cfg)
    out = np.empty((cfg.n_t, cfg.n_s, cfg.n_r), dtype=np.complex128)
    for t in range(cfg.n_t):
        tx = phy.ifft_cp_add(pilots[t].T, cfg.cp_len)  # (n_t, n_s+cp)
        rx = phy.apply_channel(tx, taps, snr_db, rng)
        y = phy.receive_frontend(rx, cfg)[:, :, 0, :]  # (n_s, n_r, 2)
        out[t] = y[..., 0] + 1j * y[..., 1]
    return out


def ls_estimate(pilot_rx, pilot_tx):
    """Least-squares channel estimate from time-orthogonal pilots.

    pilot_rx: (n_t, n_s, n_r) received grids; pilot_tx: (n_t, n_s) known pilot
    values, where pilot_tx[t, k] is what antenna t sent on subcarrier k during
    its slot. h_hat[k, r, t] = pilot_rx[t, k, r] / pilot_tx[t, k]; exact in the
    noiseless case.
    """
    pilot_rx = np.asarray(pilot_rx)
    pilot_tx = np.asarray(pilot_tx)
    if np.any(pilot_tx == 0):
        raise DomainError("pilot values must be nonzero for LS division")
    # (n_t, n_s, n_r) / (n_t, n_s, 1) -> transpose to (n_s, n_r, n_t)
    h = pilot_rx / pilot_tx[:, :, np.newaxis]
    return ChannelEstimate(np.transpose(h, (1, 2, 0)))


def estimate_from_taps(taps, cfg, snr_db=None, rng=None):
    """LS estimate via simulated pilot frames; snr_db=None gives the exact CSI."""
    pilot_rx = simulate_pilot_rx(taps, cfg, snr_db, rng)
    pilot_tx = np.ones((cfg.n_t, cfg.n_s), dtype=np.complex128)
    return ls_estimate(pilot_rx, pilot_tx)


def detect(y, h, mode="zf", noise_var=0.0):
    """Linear MIMO detection per subcarrier.

    y: (n_s, n_r) received vectors, h: (n_s, n_r, n_t) channel matrices.
    ZF solves (H^H H) x = H^H y; MMSE regularizes with noise_var * I.
    Returns (n_s, n_t) symbol estimates.
    """
    y = np.asarray(y)
    h = np.asarray(h)
    if y.ndim == 1:
        y = y[np.newaxis, :]
        h = h[np.newaxis, :, :]
    if mode not in ("zf", "mmse"):
        raise ValueError(f"unknown detector mode {mode!r}")
    hh = np.conj(np.swapaxes(h, 1, 2))  # (n_s, n_t, n_r)
    gram = hh @ h  # (n_s, n_t, n_t)
    if mode == "mmse":
        gram = gram + noise_var * np.eye(h.shape[2])
    rhs = (hh @ y[:, :, np.newaxis])[:, :, 0]
    try:
        return np.linalg.solve(gram, rhs[:, :, np.newaxis])[:, :, 0]
    except np.linalg.LinAlgError:
        for k in range(gram.shape[0]):
            try:
                np.linalg.solve(gram[k], rhs[k])
            except np.linalg.LinAlgError:
                raise RankError(
                    f"singular H^H H at subcarrier {k} (mode={mode})"
                ) from None
        raise


def qam_demodulate(symbols):
    """Minimum-distance QPSK hard decision, inverse of the Gray mapping.

    Sign-based: bit0 = 1 iff Re < 0, bit1 = 1 iff Im < 0; exact zeros (on-axis
    ties) resolve to bit 0. symbols (...,) complex -> bits (..., 2) uint8.
    """
    s = np.asarray(symbols)
    if not np.isfinite(s).all():
        raise DomainError("cannot demodulate non-finite symbols")
    return np.stack(
        [(s.real < 0).astype(np.uint8), (s.imag < 0).astype(np.uint8)], axis=-1
    )


def receive_frame(y, h, mode="zf", noise_var=0.0):
    """Detect + demodulate one frequency-domain frame.

    y: (n_s, n_r, n_i=1, 2) real split grid (a Sample.y); h: (n_s, n_r, n_t).
    Returns hard bits shaped (n_s, n_t, 2).
    """
    yc = np.asarray(y, dtype=np.float64)
    yc = yc[:, :, 0, 0] + 1j * yc[:, :, 0, 1]
    return qam_demodulate(detect(yc, h, mode=mode, noise_var=noise_var))


def evaluate(dataset, csi="perfect", detector="zf", pilot_snr_db="match"):
    """Run the classical receiver over a Dataset; returns (aacc, ber).

    csi: "perfect" uses the true per-subcarrier response from the stored pool;
    "ls" estimates it from simulated pilot frames (pilot_snr_db="match" reuses
    the dataset SNR, None makes the pilots noiseless). Detection noise_var for
    MMSE follows the dataset SNR.
    """
    if dataset.pool is None:
        raise ValueError("dataset has no channel pool attached")
    cfg = dataset.cfg
    snr = dataset.snr_db
    noise_var = 0.0
    if snr is not None and np.isfinite(snr):
        noise_var = cfg.n_t / 10.0 ** (snr / 10.0)
    if pilot_snr_db == "match":
        pilot_snr_db = snr
    h_cache = {}
    errors = 0
    total = 0
    for i in range(len(dataset)):
        cid = int(dataset.channel_ids[i])
        if cid not in h_cache:
            taps = dataset.pool[cid]
            if csi == "perfect":
                h_cache[cid] = phy.channel_frequency_response(taps, cfg.n_s)
            elif csi == "ls":
                rng = phy.pilot_rng(dataset.seed, cid)
                h_cache[cid] = estimate_from_taps(taps, cfg, pilot_snr_db, rng).h_hat
            else:
                raise ValueError(f"unknown csi mode {csi!r}")
        bits = receive_frame(
            dataset.ys[i], h_cache[cid], mode=detector, noise_var=noise_var
        )
        errors += int(np.sum(bits != dataset.xs[i]))
        total += bits.size
    ber = errors / total
    return 1.0 - ber, ber
