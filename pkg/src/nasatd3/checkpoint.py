"""Binary checkpoint format.

Layout (all integers little-endian uint32)::

    b"NASA" | version | { name_len | name (utf-8) | rank | dims... | float32 data }*

Records run until end of file. Non-numeric metadata (config, RNG states) is
stored as float32 tensors of byte values under ``meta.*`` names.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch

MAGIC = b"NASA"
VERSION = 1


class CheckpointError(ValueError):
    pass


def _as_float32(t):
    if isinstance(t, torch.Tensor):
        t = t.detach().cpu().numpy()
    return np.require(np.asarray(t, dtype="<f4"), requirements="C")


def encode_bytes(blob):
    return np.frombuffer(blob, dtype=np.uint8).astype("<f4")


def decode_bytes(arr):
    return np.asarray(arr, dtype=np.float32).astype(np.uint8).tobytes()


def encode_json(obj):
    return encode_bytes(json.dumps(obj, sort_keys=True).encode("utf-8"))


def decode_json(arr):
    return json.loads(decode_bytes(arr).decode("utf-8"))


def save(path, tensors):
    """Write ``name -> array`` to ``path``; tensors are stored as float32."""
    parts = [MAGIC, struct.pack("<I", VERSION)]
    for name, t in tensors.items():
        arr = _as_float32(t)
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<I", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(b"".join(parts))
    tmp.replace(path)


def load(path):
    """Read a checkpoint into an ordered ``name -> float32 ndarray`` dict."""
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise CheckpointError(f"{path}: truncated header at byte offset {len(data)}")
    if data[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {data[:4]!r} at byte offset 0")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version} (expected {VERSION})")
    out = {}
    pos = 8

    def need(n, what):
        if pos + n > len(data):
            raise CheckpointError(f"{path}: truncated {what} at byte offset {pos}")

    while pos < len(data):
        need(4, "name length")
        (n,) = struct.unpack_from("<I", data, pos)
        pos += 4
        need(n, "name")
        try:
            name = data[pos:pos + n].decode("utf-8")
        except UnicodeDecodeError:
            raise CheckpointError(f"{path}: invalid tensor name at byte offset {pos}") from None
        pos += n
        need(4, "rank")
        (rank,) = struct.unpack_from("<I", data, pos)
        pos += 4
        need(4 * rank, "dims")
        dims = struct.unpack_from(f"<{rank}I", data, pos)
        pos += 4 * rank
        count = int(np.prod(dims, dtype=np.int64)) if rank else 1
        need(4 * count, f"data of {name!r}")
        out[name] = np.frombuffer(data, dtype="<f4", count=count, offset=pos).reshape(dims).copy()
        pos += 4 * count
    return out


def describe(path):
    """One line per tensor: name, shape and element count."""
    lines = []
    for name, arr in load(path).items():
        lines.append(f"{name}\t{tuple(arr.shape)}\t{arr.size}")
    return lines
