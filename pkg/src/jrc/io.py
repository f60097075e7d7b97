"""Packet container files, epsilon manifests and message padding.

Packet file layout (all integers little-endian)::

    magic      4s   b"JRC1"
    version    u8   1
    flags      u8   bit0 final_state present, bit1 seed withheld,
                    bit2 permutation table (subset mask follows)
    N          u8
    W_s        u8
    S          u8
    phase      u8
    packet id  u8   state-bit position of this packet
    seed       u64  zero when withheld
    L          u32  bits per packet
    msg bits   u64  true message length before padding
    [final_state u64]          if flags bit0
    [subset mask u64]          if flags bit2
    payload    ceil(L/8) bytes, LSB-first
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bitcore import PacketIndexSet, pack_bits, unpack_bits

MAGIC = b"JRC1"
VERSION = 1
FLAG_FINAL_STATE = 0x01
FLAG_SEED_WITHHELD = 0x02
FLAG_PERMUTATION = 0x04
_KNOWN_FLAGS = FLAG_FINAL_STATE | FLAG_SEED_WITHHELD | FLAG_PERMUTATION

_HEADER = struct.Struct("<4sBBBBBBBQIQ")
_U64 = struct.Struct("<Q")


class FormatError(ValueError):
    pass


@dataclass(frozen=True)
class PacketFile:
    N: int
    W_s: int
    S: int
    phase: int
    packet_id: int
    seed: int
    L: int
    message_bits: int
    bits: np.ndarray = field(repr=False)
    final_state: int | None = None
    seed_withheld: bool = False
    permutation_subset: tuple[int, ...] | None = None

    @property
    def flags(self) -> int:
        f = 0
        if self.final_state is not None:
            f |= FLAG_FINAL_STATE
        if self.seed_withheld:
            f |= FLAG_SEED_WITHHELD
        if self.permutation_subset is not None:
            f |= FLAG_PERMUTATION
        return f

    def shared_fields(self) -> tuple:
        """Header fields every packet of one encoding must agree on."""
        return (self.N, self.W_s, self.S, self.seed, self.L, self.message_bits,
                self.final_state, self.seed_withheld, self.permutation_subset)

    def to_bytes(self) -> bytes:
        if self.bits.size != self.L:
            raise FormatError(f"payload has {self.bits.size} bits but L = {self.L}")
        head = _HEADER.pack(
            MAGIC, VERSION, self.flags, self.N, self.W_s, self.S, self.phase, self.packet_id,
            0 if self.seed_withheld else self.seed, self.L, self.message_bits,
        )
        parts = [head]
        if self.final_state is not None:
            parts.append(_U64.pack(self.final_state))
        if self.permutation_subset is not None:
            mask = 0
            for p in self.permutation_subset:
                mask |= 1 << p
            parts.append(_U64.pack(mask))
        parts.append(pack_bits(self.bits))
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "PacketFile":
        if len(data) < _HEADER.size:
            raise FormatError("file too short for a packet header")
        magic, version, flags, N, W_s, S, phase, pid, seed, L, msg_bits = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"unsupported version {version}")
        if flags & ~_KNOWN_FLAGS:
            raise FormatError(f"unknown flag bits {flags:#04x}")
        off = _HEADER.size
        final_state = None
        subset = None
        if flags & FLAG_FINAL_STATE:
            if len(data) < off + 8:
                raise FormatError("truncated final_state")
            (final_state,) = _U64.unpack_from(data, off)
            off += 8
        if flags & FLAG_PERMUTATION:
            if len(data) < off + 8:
                raise FormatError("truncated permutation subset")
            (mask,) = _U64.unpack_from(data, off)
            off += 8
            subset = tuple(i for i in range(64) if (mask >> i) & 1)
        payload = data[off:]
        if len(payload) != (L + 7) // 8:
            raise FormatError(f"payload of {len(payload)} bytes inconsistent with L = {L}")
        if pid >= W_s:
            raise FormatError(f"packet id {pid} outside state width {W_s}")
        return cls(N, W_s, S, phase, pid, seed, L, msg_bits, unpack_bits(payload, L),
                   final_state, bool(flags & FLAG_SEED_WITHHELD), subset)

    def write(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def read(cls, path) -> "PacketFile":
        return cls.from_bytes(Path(path).read_bytes())


def pad_message(data: bytes, N: int) -> tuple[np.ndarray, int, int]:
    """Message bits zero-padded to a multiple of N; returns ``(bits, L, true_bit_length)``."""
    nbits = 8 * len(data)
    L = -(-nbits // N)
    bits = np.zeros(N * L, dtype=np.uint8)
    bits[:nbits] = unpack_bits(data, nbits)
    return bits, L, nbits


def unpad_message(bits: np.ndarray, message_bits: int) -> bytes:
    return pack_bits(np.asarray(bits, dtype=np.uint8)[:message_bits])


def read_manifest(path) -> list[tuple[Path, float]]:
    """Parse ``<packet file> <eps>`` lines; relative paths resolve against the manifest."""
    path = Path(path)
    entries = []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.rsplit(None, 1)
        if len(parts) != 2:
            raise FormatError(f"{path}:{lineno}: expected '<file> <eps>'")
        name, eps_txt = parts
        try:
            eps = float(eps_txt)
        except ValueError:
            raise FormatError(f"{path}:{lineno}: bad eps {eps_txt!r}") from None
        if not 0.0 <= eps <= 0.5:
            raise FormatError(f"{path}:{lineno}: eps {eps} outside [0, 0.5]")
        p = Path(name)
        entries.append((p if p.is_absolute() else path.parent / p, eps))
    return entries


def write_manifest(path, entries) -> None:
    lines = [f"{Path(p).name if Path(p).parent == Path(path).parent else p} {eps:g}" for p, eps in entries]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def subset_from_mask(mask: int) -> PacketIndexSet:
    return PacketIndexSet(tuple(i for i in range(64) if (mask >> i) & 1))
