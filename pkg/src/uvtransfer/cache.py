"""SMAP files: a sampling map on disk, loadable without any parsing.

Layout, all little-endian::

    offset  size        field
    0       4           magic b"SMAP"
    4       4           u32 version (1)
    8       4           u32 width
    12      4           u32 height
    16      16          provenance digest
    32      9 * W * H   per pixel, row-major (row 0 at v = 0): f32 u, f32 v, u8 mask
    end-8   8           blake2b-64 checksum of every preceding byte

Uncovered pixels store (-1, -1) with mask 0.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from .errors import CacheCorruptError, StaleCacheError
from .mapping import UNMAPPED, SamplingMap

MAGIC = b"SMAP"
VERSION = 1
HEADER = struct.Struct("<4sIII16s")
HEADER_SIZE = HEADER.size  # 32
CHECKSUM_SIZE = 8
PIXEL_DTYPE = np.dtype([("u", "<f4"), ("v", "<f4"), ("mask", "u1")])  # packed, 9 bytes


def file_size(width: int, height: int) -> int:
    return HEADER_SIZE + width * height * PIXEL_DTYPE.itemsize + CHECKSUM_SIZE


def _checksum(data) -> bytes:
    return hashlib.blake2b(data, digest_size=CHECKSUM_SIZE).digest()


def to_bytes(smap: SamplingMap) -> bytes:
    payload = np.empty((smap.height, smap.width), dtype=PIXEL_DTYPE)
    payload["u"] = np.where(smap.mask, smap.src_uv[..., 0], UNMAPPED)
    payload["v"] = np.where(smap.mask, smap.src_uv[..., 1], UNMAPPED)
    payload["mask"] = smap.mask
    body = HEADER.pack(MAGIC, VERSION, smap.width, smap.height, smap.digest) + payload.tobytes()
    return body + _checksum(body)


def from_bytes(blob: bytes, expected: bytes | None = None) -> SamplingMap:
    """Decode and verify an SMAP blob.

    Integrity is checked before anything is constructed; a digest that differs
    from ``expected`` raises :class:`StaleCacheError`.
    """
    if len(blob) < HEADER_SIZE + CHECKSUM_SIZE:
        raise CacheCorruptError("file too short for an SMAP header")
    magic, version, width, height, digest = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CacheCorruptError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CacheCorruptError(f"unsupported SMAP version {version}")
    if len(blob) != file_size(width, height):
        raise CacheCorruptError(f"size {len(blob)} does not match a {width}x{height} map")
    body, stored = blob[:-CHECKSUM_SIZE], blob[-CHECKSUM_SIZE:]
    if _checksum(body) != stored:
        raise CacheCorruptError("checksum mismatch")
    if expected is not None and digest != expected:
        raise StaleCacheError("map was built from different inputs or parameters")
    payload = np.frombuffer(body, dtype=PIXEL_DTYPE, offset=HEADER_SIZE).reshape(height, width)
    mask = payload["mask"]
    if mask.max(initial=0) > 1:
        raise CacheCorruptError("mask byte other than 0 or 1")
    src_uv = np.stack([payload["u"], payload["v"]], axis=-1).astype(np.float32)
    return SamplingMap(width, height, src_uv, mask.astype(bool), digest)


def save_map(smap: SamplingMap, path) -> None:
    Path(path).write_bytes(to_bytes(smap))


def load_map(path, expected: bytes | None = None) -> SamplingMap:
    return from_bytes(Path(path).read_bytes(), expected)
