"""Model checkpoint container ("SGTC"): kind tag, config blob, named params.

Layout (little-endian):
    magic "SGTC" | version u16 | kind: u16 length + utf-8 bytes
    | config blob: u32 length + utf-8 "key=value\\n" lines
    | param count u32, then per parameter:
        name u16 length + utf-8 | rank u32 | shape u32*rank | float64 payload
"""

import struct

import numpy as np

from .errors import DataError

MAGIC = b"SGTC"
VERSION = 1


def _pack_str(s, width="H"):
    raw = s.encode("utf-8")
    return struct.pack(f"<{width}", len(raw)) + raw


def save_checkpoint(path, kind, config, params):
    """params: dict or iterable of (name, ndarray); config: flat dict."""
    if isinstance(params, dict):
        params = list(params.items())
    blob = "".join(f"{k}={v}\n" for k, v in config.items()).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<H", VERSION))
        f.write(_pack_str(kind))
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(struct.pack("<I", len(params)))
        for name, arr in params:
            arr = np.asarray(arr, dtype=np.float64)
            f.write(_pack_str(name))
            f.write(struct.pack("<I", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.astype("<f8").tobytes())


def load_checkpoint(path):
    """Returns (kind, config dict of strings, params dict name -> ndarray)."""
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != MAGIC:
        raise DataError(f"{path}: not a checkpoint file (bad magic {data[:4]!r})")
    off = 4
    (version,) = struct.unpack_from("<H", data, off)
    off += 2
    if version != VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")

    def read_str(off, width="H"):
        (n,) = struct.unpack_from(f"<{width}", data, off)
        off += struct.calcsize(width)
        return data[off : off + n].decode("utf-8"), off + n

    kind, off = read_str(off)
    (blob_len,) = struct.unpack_from("<I", data, off)
    off += 4
    config = {}
    for line in data[off : off + blob_len].decode("utf-8").splitlines():
        if line:
            k, v = line.split("=", 1)
            config[k] = v
    off += blob_len
    (count,) = struct.unpack_from("<I", data, off)
    off += 4
    params = {}
    for _ in range(count):
        name, off = read_str(off)
        (rank,) = struct.unpack_from("<I", data, off)
        off += 4
        shape = struct.unpack_from(f"<{rank}I", data, off)
        off += 4 * rank
        n = int(np.prod(shape)) if rank else 1
        arr = np.frombuffer(data, dtype="<f8", count=n, offset=off).reshape(shape)
        params[name] = arr.astype(np.float64)
        off += 8 * n
    if off != len(data):
        raise DataError(f"{path}: {len(data) - off} trailing bytes")
    return kind, config, params
