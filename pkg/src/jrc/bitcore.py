"""Bit sequences, state words and the packet-position/syndrome conventions.

Conventions used throughout the package:

* bit ``i`` of an integer word is its ``i``-th least-significant bit (0-based);
* a :class:`BitSeq` stores one bit per ``uint8`` element, index 0 first;
* packing to bytes is LSB-first within each byte, the last byte zero-padded.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MIN_WIDTH = 4
MAX_WIDTH = 64


class BitFormatError(ValueError):
    """Raised when packed bytes cannot hold the declared number of bits."""


def width_mask(width: int) -> int:
    check_width(width)
    return (1 << width) - 1


def check_width(width: int) -> None:
    if not MIN_WIDTH <= width <= MAX_WIDTH:
        raise ValueError(f"state width must be in [{MIN_WIDTH}, {MAX_WIDTH}], got {width}")


@dataclass(frozen=True)
class BitSeq:
    """An immutable sequence of bits backed by a read-only ``uint8`` array."""

    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.bits, dtype=np.uint8).reshape(-1)
        if arr.size and arr.max() > 1:
            raise ValueError("BitSeq elements must be 0 or 1")
        arr = arr.copy() if arr is self.bits else arr
        arr.flags.writeable = False
        object.__setattr__(self, "bits", arr)

    @classmethod
    def zeros(cls, length: int) -> "BitSeq":
        return cls(np.zeros(length, dtype=np.uint8))

    @classmethod
    def from_bytes(cls, data: bytes, length: int | None = None) -> "BitSeq":
        return cls(unpack_bits(data, 8 * len(data) if length is None else length))

    @property
    def length(self) -> int:
        return int(self.bits.size)

    def __len__(self) -> int:
        return self.length

    def get(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(f"bit index {i} out of range for length {self.length}")
        return int(self.bits[i])

    def pack(self) -> bytes:
        return pack_bits(self.bits)

    def __eq__(self, other):
        if not isinstance(other, BitSeq):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.length, self.pack()))


def pack_bits(bits) -> bytes:
    """Pack a 0/1 array LSB-first into bytes; the final partial byte is zero-padded."""
    arr = np.asarray(bits, dtype=np.uint8).reshape(-1)
    return np.packbits(arr, bitorder="little").tobytes()


def unpack_bits(data: bytes, length: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`. ``length`` is the number of meaningful bits."""
    if length < 0:
        raise BitFormatError("negative bit length")
    if length > 8 * len(data):
        raise BitFormatError(f"declared length {length} exceeds payload of {len(data)} bytes")
    raw = np.frombuffer(bytes(data), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:length].copy()


@dataclass(frozen=True)
class StateWord:
    value: int
    width: int = MAX_WIDTH

    def __post_init__(self):
        check_width(self.width)
        if not 0 <= self.value <= width_mask(self.width):
            raise ValueError(f"value {self.value:#x} does not fit in {self.width} bits")

    def bit(self, i: int) -> int:
        if not 0 <= i < self.width:
            raise IndexError(f"bit {i} outside state width {self.width}")
        return (self.value >> i) & 1

    def __xor__(self, other: "StateWord") -> "StateWord":
        if self.width != other.width:
            raise ValueError("width mismatch")
        return StateWord(self.value ^ other.value, self.width)


@dataclass(frozen=True)
class PacketIndexSet:
    """Sorted, distinct state-bit positions of the received packets."""

    which: tuple[int, ...]

    def __post_init__(self):
        which = tuple(int(w) for w in self.which)
        if not which:
            raise ValueError("a packet index set needs at least one position")
        if any(b <= a for a, b in zip(which, which[1:])):
            raise ValueError(f"packet positions must be strictly increasing: {which}")
        if which[0] < 0:
            raise ValueError("packet positions must be non-negative")
        object.__setattr__(self, "which", which)

    @classmethod
    def of(cls, positions: Iterable[int]) -> "PacketIndexSet":
        return cls(tuple(sorted(set(int(p) for p in positions))))

    @property
    def M(self) -> int:
        return len(self.which)

    def __len__(self) -> int:
        return len(self.which)

    def __iter__(self):
        return iter(self.which)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.which, dtype=np.int64)


@dataclass(frozen=True)
class Syndrome:
    value: int
    M: int


def extract(state: StateWord, which: PacketIndexSet) -> Syndrome:
    """Gather ``state`` bits at ``which`` positions; syndrome bit j is state bit which[j]."""
    if which.which[-1] >= state.width:
        raise ValueError(
            f"packet position {which.which[-1]} outside state width {state.width}"
        )
    return Syndrome(extract_int(state.value, which.which), which.M)


def extract_int(value: int, which: Sequence[int]) -> int:
    out = 0
    for j, pos in enumerate(which):
        out |= ((value >> pos) & 1) << j
    return out


def extract_array(values: np.ndarray, which: Sequence[int]) -> np.ndarray:
    """Vectorized :func:`extract_int` over a ``uint64`` array."""
    values = np.asarray(values, dtype=np.uint64)
    out = np.zeros(values.shape, dtype=np.uint64)
    for j, pos in enumerate(which):
        out |= ((values >> np.uint64(pos)) & np.uint64(1)) << np.uint64(j)
    return out


def cyclic_shift_right(state: StateWord) -> StateWord:
    return StateWord(rotr_int(state.value, state.width), state.width)


def rotr_int(value: int, width: int) -> int:
    return (value >> 1) | ((value & 1) << (width - 1))


def rotr_array(values: np.ndarray, width: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.uint64)
    return (values >> np.uint64(1)) | ((values & np.uint64(1)) << np.uint64(width - 1))
