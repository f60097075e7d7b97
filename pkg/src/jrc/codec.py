"""Transition tables and the encoder.

Tables are generated with SplitMix64 used as a counter-based generator: entry
``x`` of phase ``s`` is ``splitmix64(key + (((s << 32) | x) + 1) * GOLDEN)``
truncated to the state width. The same construction keyed on a separate
domain drives the Fisher-Yates shuffle of permutation tables, so tables are
identical on every platform for the same inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .bitcore import (
    BitSeq,
    PacketIndexSet,
    check_width,
    extract_array,
    width_mask,
)

MAX_BLOCK_BITS = 16
GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1
_DOMAIN_RANDOM = 0x0
_DOMAIN_PERMUTATION = 0x5045524D55544531  # "PERMUTE1"


def _mix64(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def splitmix64(key: int, counters) -> np.ndarray:
    """SplitMix64 output number ``counter + 1`` of the stream started at ``key``."""
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key & _MASK64) + (counters + np.uint64(1)) * np.uint64(GOLDEN)
    return _mix64(z)


def _domain_key(seed: int, domain: int) -> int:
    return int(_mix64(np.array([(seed ^ domain) & _MASK64], dtype=np.uint64))[0])


def split_block(N: int, S: int) -> tuple[int, ...]:
    """Equal split of N bits over S phases; leftover bits go to the first phases."""
    if S < 1 or S > N:
        raise ValueError(f"need 1 <= S <= N, got S={S}, N={N}")
    base, extra = divmod(N, S)
    return tuple(base + (1 if s < extra else 0) for s in range(S))


@dataclass(frozen=True)
class CodecParams:
    N: int
    L: int
    W_s: int = 64
    S: int = 1
    N_s: tuple[int, ...] | None = None
    seed: int = 0
    initial_state: int = 0

    def __post_init__(self):
        check_width(self.W_s)
        if self.N < 1:
            raise ValueError("N must be positive")
        if self.L < 0:
            raise ValueError("L must be non-negative")
        N_s = split_block(self.N, self.S) if self.N_s is None else tuple(int(n) for n in self.N_s)
        if len(N_s) != self.S or sum(N_s) != self.N:
            raise ValueError(f"phase block sizes {N_s} must have S={self.S} entries summing to N={self.N}")
        if any(not 1 <= n <= MAX_BLOCK_BITS for n in N_s):
            raise ValueError(f"phase block sizes must lie in [1, {MAX_BLOCK_BITS}]: {N_s}")
        if not 0 <= self.initial_state <= width_mask(self.W_s):
            raise ValueError("initial_state does not fit in the state width")
        object.__setattr__(self, "N_s", N_s)
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)

    @property
    def message_bits(self) -> int:
        return self.N * self.L

    @property
    def positions(self) -> int:
        """Number of decoding positions (substeps): L * S."""
        return self.L * self.S

    def fingerprint(self) -> tuple:
        return (self.N, self.L, self.W_s, self.S, self.N_s, self.seed, self.initial_state)


@dataclass(frozen=True)
class TransitionTable:
    f: tuple[np.ndarray, ...] = field(repr=False)
    W_s: int
    seed: int
    mode: str = "random"
    subset: PacketIndexSet | None = None

    @property
    def S(self) -> int:
        return len(self.f)

    def block_bits(self, s: int) -> int:
        return int(self.f[s].size).bit_length() - 1

    def flat(self) -> tuple[np.ndarray, np.ndarray]:
        """All phases concatenated plus offsets, as consumed by the kernels."""
        sizes = [t.size for t in self.f]
        off = np.zeros(len(sizes) + 1, dtype=np.int64)
        off[1:] = np.cumsum(sizes)
        return np.concatenate(self.f).astype(np.uint64), off


def _random_entries(seed: int, phase: int, nbits: int, W_s: int) -> np.ndarray:
    key = _domain_key(seed, _DOMAIN_RANDOM)
    counters = (np.uint64(phase) << np.uint64(32)) | np.arange(1 << nbits, dtype=np.uint64)
    return splitmix64(key, counters) & np.uint64(width_mask(W_s))


def _seeded_permutation(seed: int, phase: int, n: int) -> np.ndarray:
    key = _domain_key(seed, _DOMAIN_PERMUTATION)
    counters = (np.uint64(phase) << np.uint64(32)) | np.arange(n, dtype=np.uint64)
    draws = [int(r) for r in splitmix64(key, counters)]
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = (draws[i] * (i + 1)) >> 64
        perm[i], perm[j] = perm[j], perm[i]
    return np.asarray(perm, dtype=np.uint64)


def _deposit(values: np.ndarray, positions: Sequence[int]) -> np.ndarray:
    out = np.zeros(values.shape, dtype=np.uint64)
    for j, pos in enumerate(positions):
        out |= ((values >> np.uint64(j)) & np.uint64(1)) << np.uint64(pos)
    return out


def build_transition_table(
    seed: int, params: CodecParams, mode: str = "random", subset: PacketIndexSet | None = None
) -> TransitionTable:
    """Deterministic table per phase.

    ``mode="permutation"`` makes ``x -> extract(f[x], subset)`` a bijection in
    every phase; the remaining bits of each entry stay pseudorandom.
    """
    seed = int(seed) & _MASK64
    tables = []
    if mode == "random":
        subset = None
    elif mode == "permutation":
        if subset is None:
            raise ValueError("permutation mode needs a packet subset")
        if subset.which[-1] >= params.W_s:
            raise ValueError("permutation subset exceeds the state width")
    else:
        raise ValueError(f"unknown table mode {mode!r}")
    for s, nbits in enumerate(params.N_s):
        f = _random_entries(seed, s, nbits, params.W_s)
        if mode == "permutation":
            if subset.M != nbits:
                raise ValueError(
                    f"permutation subset has {subset.M} packets but phase {s} uses {nbits}-bit blocks"
                )
            keep = np.uint64(width_mask(params.W_s)) & ~_deposit(
                np.full(1, (1 << nbits) - 1, dtype=np.uint64), subset.which
            )[0]
            f = (f & keep) | _deposit(_seeded_permutation(seed, s, 1 << nbits), subset.which)
        f.flags.writeable = False
        tables.append(f)
    return TransitionTable(tuple(tables), params.W_s, seed, mode, subset)


@dataclass(frozen=True)
class EncodedPacketSet:
    """Encoder output: ``bits[s, i, k]`` is bit k of packet i in phase group s."""

    bits: np.ndarray = field(repr=False)
    final_state: int
    params: CodecParams

    def packet(self, i: int, phase: int = 0) -> BitSeq:
        return BitSeq(self.bits[phase, i])


def message_to_blocks(message: BitSeq | np.ndarray, params: CodecParams) -> np.ndarray:
    """Split the message into per-substep blocks, bit j of a block = j-th message bit."""
    bits = message.bits if isinstance(message, BitSeq) else np.asarray(message, dtype=np.uint8)
    if bits.size != params.message_bits:
        raise ValueError(
            f"message has {bits.size} bits, expected N*L = {params.message_bits}"
        )
    rows = bits.reshape(params.L, params.N).astype(np.int64)
    xs = np.empty((params.L, params.S), dtype=np.int64)
    off = 0
    for s, nbits in enumerate(params.N_s):
        xs[:, s] = rows[:, off:off + nbits] @ (1 << np.arange(nbits, dtype=np.int64))
        off += nbits
    return xs.reshape(-1)


def blocks_to_message(xs: np.ndarray, params: CodecParams, positions: int | None = None) -> np.ndarray:
    """Inverse of :func:`message_to_blocks`; a short ``xs`` yields a message prefix."""
    xs = np.asarray(xs, dtype=np.int64)
    P = xs.size if positions is None else positions
    out = np.zeros(params.message_bits, dtype=np.uint8)
    starts = np.concatenate([[0], np.cumsum(params.N_s)[:-1]])
    for p in range(min(P, xs.size)):
        k, s = divmod(p, params.S)
        base = k * params.N + starts[s]
        nbits = params.N_s[s]
        out[base:base + nbits] = (xs[p] >> np.arange(nbits)) & 1
    return out


def encode(message: BitSeq | np.ndarray, params: CodecParams, table: TransitionTable) -> EncodedPacketSet:
    if table.S != params.S or table.W_s != params.W_s:
        raise ValueError("transition table does not match codec parameters")
    for s, nbits in enumerate(params.N_s):
        if table.f[s].size != 1 << nbits:
            raise ValueError(f"table phase {s} has the wrong block size")
    xs = message_to_blocks(message, params)
    f_flat, f_off = table.flat()
    states, final = kernels.encode_states(
        xs, params.S, f_flat, f_off, params.W_s, np.uint64(params.initial_state)
    )
    shifts = np.arange(params.W_s, dtype=np.uint64)
    grid = states.reshape(params.L, params.S).T  # (S, L)
    bits = ((grid[:, None, :] >> shifts[None, :, None]) & np.uint64(1)).astype(np.uint8)
    bits.flags.writeable = False
    return EncodedPacketSet(bits, int(final), params)


@dataclass(frozen=True)
class ReceivedPackets:
    """Packets as seen by a decoder, grouped by interleaving phase.

    ``which[s]`` holds the ascending state-bit positions of the phase-s packets
    that arrived, ``bits[s]`` the matching ``(M_s, L)`` bit rows and ``eps[s]``
    their a-posteriori flip probabilities.
    """

    which: tuple[tuple[int, ...], ...]
    bits: tuple[np.ndarray, ...] = field(repr=False)
    eps: tuple[np.ndarray, ...]
    L: int

    @property
    def S(self) -> int:
        return len(self.which)

    @property
    def M(self) -> int:
        return sum(len(w) for w in self.which)

    def data(self, s: int = 0) -> np.ndarray:
        """Column view: ``data[k]`` is the M_s-bit word of bit k across phase-s packets."""
        rows = self.bits[s]
        out = np.zeros(self.L, dtype=np.uint64)
        for j in range(rows.shape[0]):
            out |= rows[j].astype(np.uint64) << np.uint64(j)
        return out

    def data_positions(self) -> np.ndarray:
        """Syndrome data in decoding order: position p = k * S + s."""
        cols = np.stack([self.data(s) for s in range(self.S)], axis=1) if self.S else np.zeros((self.L, 0))
        return np.ascontiguousarray(cols.reshape(-1), dtype=np.uint64)

    def all_eps(self) -> np.ndarray:
        return np.concatenate(self.eps) if self.eps else np.zeros(0)


def _normalize_selection(selection, S: int) -> dict[int, PacketIndexSet]:
    if isinstance(selection, PacketIndexSet):
        if S != 1:
            raise ValueError("interleaved packet sets need a per-phase selection")
        return {0: selection}
    if isinstance(selection, Mapping):
        return {int(s): (w if isinstance(w, PacketIndexSet) else PacketIndexSet.of(w)) for s, w in selection.items()}
    return {0: PacketIndexSet.of(selection)}


def emit_packet_subset(packets: EncodedPacketSet, which) -> ReceivedPackets:
    """Select received packets; ``which`` is a PacketIndexSet or a phase->positions map."""
    params = packets.params
    chosen = _normalize_selection(which, params.S)
    whiches, rows, eps = [], [], []
    for s in range(params.S):
        sel = chosen.get(s)
        if sel is None:
            whiches.append(())
            rows.append(np.zeros((0, params.L), dtype=np.uint8))
            eps.append(np.zeros(0))
            continue
        if sel.which[-1] >= params.W_s:
            raise ValueError(f"unknown packet id {sel.which[-1]} (only {params.W_s} per phase)")
        whiches.append(sel.which)
        rows.append(packets.bits[s, list(sel.which)].copy())
        eps.append(np.zeros(sel.M))
    extra = set(chosen) - set(range(params.S))
    if extra:
        raise ValueError(f"unknown phases {sorted(extra)}")
    return ReceivedPackets(tuple(whiches), tuple(rows), tuple(eps), params.L)


@dataclass(frozen=True)
class PhaseLayout:
    """Flat per-phase arrays shared by all decoding kernels."""

    S: int
    W_s: int
    f_flat: np.ndarray
    f_off: np.ndarray
    which_flat: np.ndarray
    w_off: np.ndarray
    ef_flat: np.ndarray

    @classmethod
    def build(cls, table: TransitionTable, whiches: Sequence[Sequence[int]]) -> "PhaseLayout":
        if len(whiches) != table.S:
            raise ValueError("need one packet selection per phase")
        f_flat, f_off = table.flat()
        w_sizes = [len(w) for w in whiches]
        w_off = np.zeros(table.S + 1, dtype=np.int64)
        w_off[1:] = np.cumsum(w_sizes)
        which_flat = np.asarray([p for w in whiches for p in w], dtype=np.int64)
        if which_flat.size and which_flat.max() >= table.W_s:
            raise ValueError("packet position outside the state width")
        ef = [extract_array(table.f[s], whiches[s]) for s in range(table.S)]
        return cls(table.S, table.W_s, f_flat, f_off, which_flat, w_off, np.concatenate(ef))

    def M_s(self, s: int) -> int:
        return int(self.w_off[s + 1] - self.w_off[s])

    def ef(self, s: int) -> np.ndarray:
        return self.ef_flat[self.f_off[s]:self.f_off[s + 1]]
