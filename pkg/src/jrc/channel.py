"""Binary symmetric channel and packet-loss simulation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .bitcore import BitSeq, PacketIndexSet
from .codec import EncodedPacketSet, ReceivedPackets, emit_packet_subset


def check_eps(eps: float) -> float:
    eps = float(eps)
    if not 0.0 <= eps <= 0.5:
        raise ValueError(f"bit-flip probability must lie in [0, 0.5], got {eps}")
    return eps


@dataclass(frozen=True)
class NoiseProfile:
    eps: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "eps", tuple(check_eps(e) for e in self.eps))

    @property
    def M(self) -> int:
        return len(self.eps)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.eps, dtype=np.float64)


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream identified by ``(seed, stream)``."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(self.stream,)))

    def child(self, i: int) -> "RngStream":
        return RngStream(self.seed, self.stream * 1_000_003 + i + 1)


def _gen(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def apply_bsc(bits: BitSeq | np.ndarray, eps: float, rng) -> BitSeq | np.ndarray:
    """Flip each bit independently with probability ``eps``.

    Returns the same kind of object it was given (BitSeq or uint8 array).
    """
    eps = check_eps(eps)
    arr = bits.bits if isinstance(bits, BitSeq) else np.asarray(bits, dtype=np.uint8)
    gen = _gen(rng)
    flips = (gen.random(arr.shape) < eps).astype(np.uint8)
    out = arr ^ flips
    return BitSeq(out) if isinstance(bits, BitSeq) else out


def drop_packets(packets: EncodedPacketSet | ReceivedPackets, keep) -> ReceivedPackets:
    """Keep only the listed packets; noise labels of kept packets are preserved.

    ``keep`` is a PacketIndexSet / iterable of positions for single-phase sets,
    or a mapping ``phase -> positions``. An empty selection yields an empty set.
    """
    if isinstance(packets, EncodedPacketSet):
        if _is_empty(keep):
            return emit_packet_subset(packets, {})
        return emit_packet_subset(packets, keep)
    sel = keep if isinstance(keep, dict) else {0: keep}
    whiches, rows, eps = [], [], []
    for s in range(packets.S):
        wanted = set() if _is_empty(sel.get(s, ())) else set(_positions(sel.get(s, ())))
        unknown = wanted - set(packets.which[s])
        if unknown:
            raise ValueError(f"unknown packet ids {sorted(unknown)} in phase {s}")
        idx = [j for j, w in enumerate(packets.which[s]) if w in wanted]
        whiches.append(tuple(packets.which[s][j] for j in idx))
        rows.append(packets.bits[s][idx])
        eps.append(packets.eps[s][idx])
    return ReceivedPackets(tuple(whiches), tuple(rows), tuple(eps), packets.L)


def _is_empty(keep) -> bool:
    if isinstance(keep, PacketIndexSet):
        return False
    if isinstance(keep, dict):
        return all(_is_empty(v) for v in keep.values())
    return len(list(keep)) == 0


def _positions(keep) -> Iterable[int]:
    return keep.which if isinstance(keep, PacketIndexSet) else keep


def corrupt(received: ReceivedPackets, eps: Sequence[float] | Sequence[Sequence[float]], rng) -> ReceivedPackets:
    """Pass every received packet through its own BSC and record its eps label.

    ``eps`` is one value per packet (flattened in phase order) or one sequence
    per phase. Packet j of phase s uses stream ``(s, j)`` of ``rng``.
    """
    flat = [float(e) for group in eps for e in (group if np.ndim(group) else [group])]
    if len(flat) != received.M:
        raise ValueError(f"need {received.M} eps values, got {len(flat)}")
    gen = _gen(rng)
    seeds = gen.integers(0, 2**63, size=max(received.M, 1))
    rows, labels, i = [], [], 0
    for s in range(received.S):
        m = len(received.which[s])
        phase_rows = received.bits[s].copy()
        phase_eps = np.empty(m)
        for j in range(m):
            phase_eps[j] = check_eps(flat[i])
            phase_rows[j] = apply_bsc(phase_rows[j], flat[i], np.random.default_rng(int(seeds[i])))
            i += 1
        rows.append(phase_rows)
        labels.append(phase_eps)
    return ReceivedPackets(received.which, tuple(rows), tuple(labels), received.L)
