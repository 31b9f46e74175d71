"""Dataset serialization: the "SIGT" binary container, CSV export, manifests.

Binary layout (all little-endian):
    magic "SIGT" | version u16 | n_s,n_t,n_r,n_i,cp_len,n_taps,qam_bits as u32
    | sample count u64 | snr_db f64 | seed u64
    then per sample: y as float32[n_s*n_r*n_i*2], x as packed bits
    (ceil(n_s*n_t*2 / 8) bytes, numpy bit order).

The channel pool and per-sample pool indices are not stored; they are pure
functions of (seed, split, index) plus the pool size recorded in the manifest,
and are regenerated on load when needed.
"""

import csv
import struct

import numpy as np

from .errors import DataError
from .phy import Dataset, FrameConfig, generate_channel_pool, regenerate_channel_ids

MAGIC = b"SIGT"
VERSION = 1
_HEADER = struct.Struct("<4sH7IQdQ")


def write_dataset(path, ds):
    """Write one split to the binary container."""
    n = len(ds)
    cfg = ds.cfg
    with open(path, "wb") as f:
        f.write(
            _HEADER.pack(
                MAGIC,
                VERSION,
                cfg.n_s,
                cfg.n_t,
                cfg.n_r,
                cfg.n_i,
                cfg.cp_len,
                cfg.n_taps,
                cfg.qam_bits,
                n,
                float(ds.snr_db),
                int(ds.seed),
            )
        )
        for i in range(n):
            f.write(ds.ys[i].astype("<f4").tobytes())
            f.write(np.packbits(ds.xs[i].reshape(-1)).tobytes())


def read_dataset(path, split="train", pool_size=None, with_pool=False):
    """Read one split back; optionally rebuild the channel pool/ids.

    split and pool_size come from the manifest (the binary header does not
    carry them); without pool_size the returned Dataset has no channel
    metadata, which is fine for training but not for the classical receiver.
    """
    with open(path, "rb") as f:
        head = f.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise DataError(f"{path}: truncated header")
        (magic, version, n_s, n_t, n_r, n_i, cp_len, n_taps, qam_bits, n, snr_db, seed) = (
            _HEADER.unpack(head)
        )
        if magic != MAGIC:
            raise DataError(f"{path}: not a dataset file (bad magic {magic!r})")
        if version != VERSION:
            raise DataError(f"{path}: unsupported dataset version {version}")
        cfg = FrameConfig(n_s, n_t, n_r, n_i, cp_len, n_taps, qam_bits)
        y_count = n_s * n_r * n_i * 2
        x_bits = n_s * n_t * 2
        x_bytes = (x_bits + 7) // 8
        ys = np.empty((n, n_s, n_r, n_i, 2), dtype=np.float32)
        xs = np.empty((n, n_s, n_t, 2), dtype=np.uint8)
        for i in range(n):
            raw = f.read(y_count * 4)
            if len(raw) != y_count * 4:
                raise DataError(f"{path}: truncated at sample {i}")
            ys[i] = np.frombuffer(raw, dtype="<f4").reshape(n_s, n_r, n_i, 2)
            raw = f.read(x_bytes)
            if len(raw) != x_bytes:
                raise DataError(f"{path}: truncated at sample {i}")
            xs[i] = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), count=x_bits).reshape(
                n_s, n_t, 2
            )
    ids = np.full(n, -1, dtype=np.int64)
    pool = None
    if pool_size:
        ids = regenerate_channel_ids(cfg, pool_size, n, seed, split)
        if with_pool:
            pool = generate_channel_pool(cfg, pool_size, seed)
    return Dataset(
        cfg, ys, xs, ids, snr_db, int(seed), split, int(pool_size or 0), pool
    )


def export_csv(path, ds):
    """Flat CSV export: one row per sample (y values then bits)."""
    cfg = ds.cfg
    y_cols = [f"y{i}" for i in range(cfg.n_s * cfg.n_r * cfg.n_i * 2)]
    x_cols = [f"x{i}" for i in range(cfg.bits_per_frame)]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["sample", "channel_id", *y_cols, *x_cols])
        for i in range(len(ds)):
            row = [i, int(ds.channel_ids[i])]
            row += [f"{v:.9g}" for v in ds.ys[i].reshape(-1)]
            row += [int(v) for v in ds.xs[i].reshape(-1)]
            w.writerow(row)


def write_manifest(path, entries):
    """Human-readable key = value manifest (same syntax as config files)."""
    with open(path, "w") as f:
        f.write("# dataset manifest\n")
        for k, v in entries.items():
            f.write(f"{k} = {v}\n")


def read_manifest(path):
    entries = {}
    with open(path) as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path}: malformed manifest line {line!r}")
            k, v = line.split("=", 1)
            entries[k.strip()] = v.strip()
    return entries
