"""Shared binary tensor container primitives.

Layout conventions used by both checkpoint (XLAB) and stimulus (XSTM)
files: little-endian scalars, a 4-byte magic, u32 format version, a
u32-length-prefixed UTF-8 JSON descriptor, then tensor blocks written as
(u32 rank, u32 dims..., raw little-endian float32 data).
"""

import json
import struct

import numpy as np

from .errors import FormatError


def write_u32(fh, value: int):
    fh.write(struct.pack("<I", value))


def read_u32(fh, what: str) -> int:
    raw = fh.read(4)
    if len(raw) != 4:
        raise FormatError(f"truncated file while reading {what}")
    return struct.unpack("<I", raw)[0]


def write_preamble(fh, magic: bytes, version: int, descriptor: dict):
    assert len(magic) == 4
    fh.write(magic)
    write_u32(fh, version)
    blob = json.dumps(descriptor, sort_keys=True).encode("utf-8")
    write_u32(fh, len(blob))
    fh.write(blob)


def read_preamble(fh, magic: bytes, version: int) -> dict:
    got = fh.read(4)
    if got != magic:
        raise FormatError(f"bad magic {got!r}, expected {magic!r}")
    got_version = read_u32(fh, "format version")
    if got_version != version:
        raise FormatError(f"unsupported format version {got_version}, expected {version}")
    length = read_u32(fh, "descriptor length")
    blob = fh.read(length)
    if len(blob) != length:
        raise FormatError("truncated file while reading descriptor")
    try:
        return json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"corrupt descriptor: {exc}") from exc


def write_tensor(fh, arr: np.ndarray):
    if arr.dtype != np.float32:
        raise FormatError(f"tensor container stores float32, got {arr.dtype}")
    write_u32(fh, arr.ndim)
    for dim in arr.shape:
        write_u32(fh, dim)
    fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def read_tensor(fh) -> np.ndarray:
    rank = read_u32(fh, "tensor rank")
    shape = tuple(read_u32(fh, "tensor dim") for _ in range(rank))
    count = int(np.prod(shape)) if shape else 1
    raw = fh.read(count * 4)
    if len(raw) != count * 4:
        raise FormatError("truncated file while reading tensor data")
    return np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float32, copy=True)
