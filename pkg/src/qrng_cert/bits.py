"""Bit strings, LSB-first packing and the on-disk bit containers.

Every packed payload in this package is little-endian with the least
significant bit first inside each byte: bit ``i`` of a stream lives in byte
``i // 8`` at position ``i % 8``.

Bit container layout (``.bits`` files, used for extractor output)::

    offset  size  field
    0       8     magic  b"QRNGBITS"
    8       2     format version (u16, currently 1)
    10      2     reserved, zero
    12      4     header length H (u32): bytes of UTF-8 JSON that follow
    16      H     JSON metadata (tool version, config hash, label)
    16+H    8     number of bits N (u64)
    24+H    ...   ceil(N/8) payload bytes

Extractor seed files are the raw packed bits preceded by a u64 bit count.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError

BITS_MAGIC = b"QRNGBITS"
BITS_VERSION = 1


def as_bits(bits) -> np.ndarray:
    """Validate a 0/1 sequence and return it as a uint8 array."""
    arr = np.asarray(bits)
    if arr.dtype == bool:
        return arr.astype(np.uint8)
    arr = arr.astype(np.uint8, copy=False)
    if arr.size and arr.max() > 1:
        raise ValueError("bit values must be 0 or 1")
    return arr


def pack_bits(bits) -> bytes:
    return np.packbits(as_bits(bits), bitorder="little").tobytes()


def unpack_bits(data: bytes, nbits: int) -> np.ndarray:
    if len(data) * 8 < nbits:
        raise FormatError(f"payload holds {len(data) * 8} bits, expected {nbits}")
    raw = np.frombuffer(data, dtype=np.uint8)
    return np.unpackbits(raw, count=nbits, bitorder="little")


def pack_words(bits) -> np.ndarray:
    """Pack bits LSB-first into uint64 words (bit ``i`` is bit ``i % 64`` of word ``i // 64``)."""
    bits = as_bits(bits)
    nwords = (bits.size + 63) // 64
    buf = np.zeros(nwords * 8, dtype=np.uint8)
    packed = np.packbits(bits, bitorder="little")
    buf[: packed.size] = packed
    return buf.view("<u8").astype(np.uint64)


def bits_per_outcome(d: int) -> int:
    """Bits used to serialize one outcome of a ``d``-outcome measurement."""
    if d < 2 or d & (d - 1):
        raise ValueError(f"outcome serialization needs a power-of-two dimension, got d={d}")
    return d.bit_length() - 1


def outcomes_to_bits(outcomes, d: int) -> np.ndarray:
    """Serialize symbols in ``{0..d-1}`` to ``log2 d`` bits each, low bit first."""
    k = bits_per_outcome(d)
    z = np.asarray(outcomes, dtype=np.uint8)
    if z.size and z.max() >= d:
        raise ValueError("outcome out of range for dimension")
    if k == 1:
        return z.copy()
    shifts = np.arange(k, dtype=np.uint8)
    return ((z[:, None] >> shifts) & 1).astype(np.uint8).reshape(-1)


def bits_to_outcomes(bits, d: int) -> np.ndarray:
    k = bits_per_outcome(d)
    bits = as_bits(bits)
    if bits.size % k:
        raise FormatError("bit count is not a multiple of the symbol width")
    if k == 1:
        return bits.copy()
    weights = (1 << np.arange(k)).astype(np.uint8)
    return (bits.reshape(-1, k) * weights).sum(axis=1).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class BitString:
    """A packed bit string with explicit length."""

    data: bytes
    nbits: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.nbits < 0 or len(self.data) != (self.nbits + 7) // 8:
            raise FormatError("payload length does not match bit count")

    @classmethod
    def from_bits(cls, bits, meta=None) -> BitString:
        bits = as_bits(bits)
        return cls(pack_bits(bits), int(bits.size), dict(meta or {}))

    def to_array(self) -> np.ndarray:
        return unpack_bits(self.data, self.nbits)

    def __len__(self):
        return self.nbits

    def __eq__(self, other):
        return isinstance(other, BitString) and (self.nbits, self.data) == (other.nbits, other.data)


def write_bit_container(path, bits: BitString) -> None:
    meta = json.dumps(bits.meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(BITS_MAGIC + struct.pack("<HHI", BITS_VERSION, 0, len(meta)))
        fh.write(meta)
        fh.write(struct.pack("<Q", bits.nbits))
        fh.write(bits.data)


def read_bit_container(path) -> BitString:
    blob = Path(path).read_bytes()
    if len(blob) < 16 or blob[:8] != BITS_MAGIC:
        raise FormatError(f"{path}: not a bit container")
    version, _, hlen = struct.unpack_from("<HHI", blob, 8)
    if version != BITS_VERSION:
        raise FormatError(f"{path}: unsupported bit container version {version}")
    try:
        meta = json.loads(blob[16 : 16 + hlen].decode("utf-8"))
    except ValueError as exc:
        raise FormatError(f"{path}: corrupt metadata") from exc
    if len(blob) < 24 + hlen:
        raise FormatError(f"{path}: truncated")
    (nbits,) = struct.unpack_from("<Q", blob, 16 + hlen)
    data = blob[24 + hlen :]
    if len(data) != (nbits + 7) // 8:
        raise FormatError(f"{path}: payload size mismatch")
    return BitString(data, nbits, meta)


def write_seed_file(path, bits) -> None:
    bits = as_bits(bits)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", bits.size))
        fh.write(pack_bits(bits))


def read_seed_file(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if len(blob) < 8:
        raise FormatError(f"{path}: missing length prefix")
    (nbits,) = struct.unpack_from("<Q", blob, 0)
    if len(blob) - 8 != (nbits + 7) // 8:
        raise FormatError(f"{path}: seed payload size mismatch")
    return unpack_bits(blob[8:], nbits)
