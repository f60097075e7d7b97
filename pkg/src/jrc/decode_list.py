"""Decoders for undamaged packets: straightforward lookup and full candidate lists."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .codec import CodecParams, PhaseLayout, ReceivedPackets, TransitionTable, blocks_to_message

DEFAULT_MAX_M = 24
DEFAULT_LIST_CAP = 1 << 20


class DecodeError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (position {position})")
        self.position = position


class InconsistentData(DecodeError):
    """No candidate agrees with the received bits: damaged packets or wrong parameters."""


class AmbiguousCandidates(DecodeError):
    """More than one candidate fits; straightforward decoding does not apply."""


class TableTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class PartitionTable:
    """For every phase and syndrome z, the blocks x with extract(f[x]) == z.

    Stored flat: ``order`` lists x grouped by syndrome (ascending x inside a
    group), ``start[z]:start[z+1]`` delimits the group of z.
    """

    layout: PhaseLayout = field(repr=False)
    whiches: tuple[tuple[int, ...], ...]
    order_flat: np.ndarray = field(repr=False)
    start_flat: np.ndarray = field(repr=False)
    s_off: np.ndarray = field(repr=False)

    @property
    def S(self) -> int:
        return self.layout.S

    def _start(self, s: int) -> np.ndarray:
        return self.start_flat[self.s_off[s]:self.s_off[s + 1]]

    def candidates(self, z: int, s: int = 0) -> np.ndarray:
        start = self._start(s)
        base = self.layout.f_off[s]
        return self.order_flat[base + start[z]: base + start[z + 1]]

    def sizes(self, s: int = 0) -> np.ndarray:
        return np.diff(self._start(s))

    def is_injective(self) -> bool:
        return all(self.sizes(s).max(initial=0) <= 1 for s in range(self.S))


def build_partition_table(
    table: TransitionTable, which: Sequence[Sequence[int]] | Sequence[int], max_M: int = DEFAULT_MAX_M
) -> PartitionTable:
    whiches = _per_phase(which, table.S)
    for s, w in enumerate(whiches):
        if len(w) > max_M:
            raise TableTooLarge(
                f"phase {s} has {len(w)} packets; partition tables are capped at M={max_M}. "
                "Use interleaving or the sequential decoder with a capped table."
            )
    layout = PhaseLayout.build(table, whiches)
    orders, starts = [], []
    for s, w in enumerate(whiches):
        ef = layout.ef(s).astype(np.int64)
        orders.append(np.argsort(ef, kind="stable").astype(np.int64))
        counts = np.bincount(ef, minlength=1 << len(w))
        start = np.zeros((1 << len(w)) + 1, dtype=np.int64)
        start[1:] = np.cumsum(counts)
        starts.append(start)
    s_off = np.zeros(table.S + 1, dtype=np.int64)
    s_off[1:] = np.cumsum([st.size for st in starts])
    return PartitionTable(layout, whiches, np.concatenate(orders), np.concatenate(starts), s_off)


def _per_phase(which, S: int) -> tuple[tuple[int, ...], ...]:
    which = list(which)
    if which and not np.ndim(which[0]) and not isinstance(which[0], (tuple, list)):
        if S != 1:
            raise ValueError("interleaved tables need one packet selection per phase")
        return (tuple(int(w) for w in which),)
    if len(which) != S:
        raise ValueError(f"need {S} per-phase selections, got {len(which)}")
    return tuple(tuple(int(w) for w in ws) for ws in which)


def _check_received(received: ReceivedPackets, whiches, params: CodecParams):
    if received.which != whiches:
        raise ValueError("received packets do not match the table's packet selection")
    if received.L != params.L or received.S != params.S:
        raise ValueError("received packets do not match the codec parameters")


@dataclass
class ListDecodeResult:
    messages: list[np.ndarray]
    blocks: list[np.ndarray]
    success: bool
    position: int
    steps: int
    width: float
    final_state_checked: bool
    survivors: int

    @property
    def message(self) -> np.ndarray | None:
        return self.messages[0] if self.messages else None

    @property
    def ambiguous(self) -> bool:
        return len(self.messages) > 1


def decode_straightforward(
    received: ReceivedPackets, params: CodecParams, ptable: PartitionTable, final_state: int | None = None
) -> np.ndarray:
    """One table lookup per position; returns the message bits.

    Raises :class:`InconsistentData` on an empty candidate list and
    :class:`AmbiguousCandidates` when a list holds more than one block.
    """
    _check_received(received, ptable.whiches, params)
    lay = ptable.layout
    xs, status, p, st = kernels.straightforward(
        received.data_positions(), params.S, params.W_s, np.uint64(params.initial_state),
        lay.f_flat, lay.f_off, lay.which_flat, lay.w_off, ptable.order_flat, ptable.start_flat, ptable.s_off,
    )
    if status == kernels.EMPTY:
        raise InconsistentData("no block agrees with the received packets", int(p))
    if status == kernels.AMBIGUOUS:
        raise AmbiguousCandidates("several blocks agree with the received packets", int(p))
    if final_state is not None and int(st) != final_state:
        raise InconsistentData("decoded path does not end in the final state", int(p))
    return blocks_to_message(xs, params)


def decode_list(
    received: ReceivedPackets,
    params: CodecParams,
    ptable: PartitionTable,
    final_state: int | None = None,
    cap: int = DEFAULT_LIST_CAP,
    max_results: int | None = None,
) -> ListDecodeResult:
    """Keep every prefix consistent with all packets, position by position.

    Surviving candidates at the end are filtered by ``final_state`` when it is
    known. A level growing past ``cap`` stops the search and reports the
    position reached.
    """
    _check_received(received, ptable.whiches, params)
    lay = ptable.layout
    P = params.positions
    status, p, st, par, xv, lvl, n = kernels.list_decode(
        received.data_positions(), params.S, params.W_s, np.uint64(params.initial_state),
        lay.f_flat, lay.f_off, lay.which_flat, lay.w_off, ptable.order_flat, ptable.start_flat, ptable.s_off,
        int(cap),
    )
    steps = int(n) - 1
    width = steps / P if P else 1.0
    if status != kernels.OK:
        # partial: the deepest complete level still holds consistent prefixes
        level = int(p)
        ids = np.arange(lvl[level], lvl[level + 1])
        blocks = [kernels.traceback(par, xv, int(i), P) for i in ids[:1]]
        msgs = [blocks_to_message(b, params) for b in blocks]
        return ListDecodeResult(msgs, blocks, False, level, steps, width, False, 0)
    ids = np.arange(lvl[P], lvl[P + 1])
    checked = final_state is not None
    if checked:
        ids = ids[st[ids] == np.uint64(final_state)]
    survivors = int(ids.size)
    if max_results is not None:
        ids = ids[:max_results]
    blocks = [kernels.traceback(par, xv, int(i), P) for i in ids]
    msgs = [blocks_to_message(b, params) for b in blocks]
    return ListDecodeResult(msgs, blocks, survivors > 0, P, steps, width, checked, survivors)
