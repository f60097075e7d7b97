"""Sequential (best-first) decoding of damaged packets.

A node's weight is the sum over its blocks of

    W(E) = M - N + sum_i lg P_i(E_i),   P_i(0) = 1 - eps_i,  P_i(1) = eps_i

where E is the error vector between the candidate's packet bits and the
received ones. Packets with eps_i = 0 act as hard constraints (weight -inf).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .bitcore import extract_int, rotr_int
from .channel import NoiseProfile
from .codec import CodecParams, PhaseLayout, ReceivedPackets, TransitionTable, blocks_to_message
from .decode_list import TableTooLarge, _per_phase

DEFAULT_TABLE_CAP = 20
DEFAULT_WIDTH_BUDGET = 256


@dataclass(frozen=True)
class ErrorVector:
    value: int
    M: int

    def __post_init__(self):
        if not 0 <= self.value < (1 << self.M) or self.M < 0:
            raise ValueError("error vector does not fit its width")


def _lg_terms(eps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    eps = np.asarray(eps, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.log2(1.0 - eps), np.log2(eps)


def block_weight(E: ErrorVector | int, profile: NoiseProfile | Sequence[float], N: int) -> float:
    """Weight of one block; ``-inf`` when a packet with eps = 0 disagrees."""
    eps = profile.eps if isinstance(profile, NoiseProfile) else tuple(profile)
    value = E.value if isinstance(E, ErrorVector) else int(E)
    M = len(eps)
    total = float(M - N)
    for i, e in enumerate(eps):
        p = e if (value >> i) & 1 else 1.0 - e
        if p == 0.0:
            return -np.inf
        total += np.log2(p)
    return total


def error_vector(state: int, x: int, data_k: int, table: TransitionTable, which: Sequence[int], phase: int = 0) -> ErrorVector:
    """Disagreement between candidate block ``x`` from ``state`` and received column ``data_k``."""
    value = extract_int(int(state) ^ int(table.f[phase][x]), which) ^ int(data_k)
    return ErrorVector(value, len(which))


@dataclass(frozen=True)
class SortedCandidateTable:
    """Per phase and syndrome, all blocks sorted by descending block weight.

    When a phase has more packets than ``M_table``, only its ``M_table`` least
    damaged packets order the lists; ``perm[s]`` gives the decoding order of the
    received packets (table packets first).
    """

    layout: PhaseLayout = field(repr=False)
    whiches: tuple[tuple[int, ...], ...]
    perm: tuple[np.ndarray, ...]
    eps: tuple[np.ndarray, ...]
    table_flat: np.ndarray = field(repr=False)
    t_off: np.ndarray = field(repr=False)
    t_mask: np.ndarray
    M_table: tuple[int, ...]
    N_s: tuple[int, ...]
    base_w: np.ndarray
    delta_flat: np.ndarray

    @property
    def exact(self) -> bool:
        return all(mt == len(w) for mt, w in zip(self.M_table, self.whiches))

    def candidates(self, z: int, s: int = 0) -> np.ndarray:
        """Sorted list for table syndrome ``z`` (over the table packets, decoding order)."""
        nx = 1 << self.N_s[s]
        base = self.t_off[s] + z * nx
        return self.table_flat[base:base + nx]


def build_sorted_table(
    table: TransitionTable,
    which,
    profile: NoiseProfile | Sequence[float] | Sequence[Sequence[float]],
    M_table_cap: int = DEFAULT_TABLE_CAP,
    max_cells: int = 1 << 28,
) -> SortedCandidateTable:
    whiches = _per_phase(which, table.S)
    eps_all = profile.as_array() if isinstance(profile, NoiseProfile) else np.asarray(
        [e for g in profile for e in (g if np.ndim(g) else [g])], dtype=np.float64
    )
    if eps_all.size != sum(len(w) for w in whiches):
        raise ValueError("noise profile length does not match the packet selection")
    if M_table_cap > DEFAULT_TABLE_CAP + 4:
        raise TableTooLarge(f"M_table cap {M_table_cap} is beyond what can be materialized")
    perms, eps_ph, ordered, cursor = [], [], [], 0
    for w in whiches:
        e = eps_all[cursor:cursor + len(w)]
        cursor += len(w)
        if len(w) > M_table_cap:
            perm = np.argsort(e, kind="stable")
        else:
            perm = np.arange(len(w))
        perms.append(perm)
        eps_ph.append(e[perm])
        ordered.append(tuple(w[i] for i in perm))
    layout = PhaseLayout.build(table, ordered)
    tables, masks, m_tab, n_s = [], [], [], []
    base_w = np.empty(table.S)
    deltas = []
    for s, w in enumerate(ordered):
        nbits = table.block_bits(s)
        mt = min(len(w), M_table_cap)
        if (1 << (mt + nbits)) > max_cells:
            raise TableTooLarge(f"sorted table for phase {s} would need 2^{mt + nbits} cells")
        lg0, lg1 = _lg_terms(eps_ph[s])
        base_w[s] = (len(w) - nbits) + float(lg0.sum())
        deltas.append(lg1 - lg0)
        # order by the weight restricted to the table packets
        E = np.arange(1 << mt, dtype=np.int64)
        bits = (E[:, None] >> np.arange(mt)) & 1
        with np.errstate(invalid="ignore"):
            wvec = np.where(bits == 1, lg1[:mt], lg0[:mt]).sum(axis=1) if mt else np.zeros(1)
        ef = layout.ef(s).astype(np.int64) & ((1 << mt) - 1)
        keys = wvec[E[:, None] ^ ef[None, :]]
        dtype = np.uint16 if nbits <= 16 else np.int32
        tables.append(np.argsort(-keys, axis=1, kind="stable").astype(dtype).reshape(-1))
        masks.append((1 << mt) - 1)
        m_tab.append(mt)
        n_s.append(nbits)
    t_off = np.zeros(table.S + 1, dtype=np.int64)
    t_off[1:] = np.cumsum([t.size for t in tables])
    return SortedCandidateTable(
        layout=layout,
        whiches=whiches,
        perm=tuple(perms),
        eps=tuple(eps_ph),
        table_flat=np.concatenate(tables),
        t_off=t_off,
        t_mask=np.asarray(masks, dtype=np.uint64),
        M_table=tuple(m_tab),
        N_s=tuple(n_s),
        base_w=base_w,
        delta_flat=np.concatenate(deltas) if deltas else np.zeros(0),
    )


@dataclass(frozen=True)
class DecodeBudget:
    max_nodes: int

    @classmethod
    def from_width(cls, width: float, positions: int) -> "DecodeBudget":
        return cls(max(int(width * max(positions, 1)), max(positions, 1)))

    def width_cap(self, positions: int) -> float:
        return self.max_nodes / max(positions, 1)


@dataclass
class SeqDecodeResult:
    success: bool
    status: int
    message: np.ndarray | None
    blocks: np.ndarray
    nodes: int
    width: float
    position: int
    weight: float
    partial: np.ndarray = field(repr=False)
    trace: dict | None = field(default=None, repr=False)

    @property
    def exhausted(self) -> bool:
        return self.status == kernels.EXHAUSTED


def _reordered_data(received: ReceivedPackets, stable: SortedCandidateTable) -> np.ndarray:
    cols = []
    for s in range(received.S):
        rows = received.bits[s][stable.perm[s]]
        d = np.zeros(received.L, dtype=np.uint64)
        for j in range(rows.shape[0]):
            d |= rows[j].astype(np.uint64) << np.uint64(j)
        cols.append(d)
    if not cols:
        return np.zeros(0, dtype=np.uint64)
    return np.ascontiguousarray(np.stack(cols, axis=1).reshape(-1))


def decode_sequential(
    received: ReceivedPackets,
    params: CodecParams,
    stable: SortedCandidateTable,
    budget: DecodeBudget | None = None,
    final_state: int | None = None,
    keep_trace: bool = False,
) -> SeqDecodeResult:
    """Best-first search for the heaviest full-length path.

    Succeeds on the first popped node at the last position (whose state equals
    ``final_state`` when given). On failure the result carries the prefix of
    the deepest node considered.
    """
    if received.which != stable.whiches:
        raise ValueError("received packets do not match the sorted table's selection")
    if received.L != params.L or received.S != params.S:
        raise ValueError("received packets do not match the codec parameters")
    P = params.positions
    budget = budget or DecodeBudget.from_width(DEFAULT_WIDTH_BUDGET, P)
    if budget.max_nodes < 1:
        raise ValueError("budget must allow at least one node")
    lay = stable.layout
    out = kernels.seq_decode(
        _reordered_data(received, stable), params.S, params.W_s, np.uint64(params.initial_state),
        np.uint64(0 if final_state is None else final_state), final_state is not None,
        lay.f_flat, lay.f_off, lay.which_flat, lay.w_off, lay.ef_flat,
        stable.table_flat, stable.t_off, stable.t_mask, stable.exact,
        stable.base_w, stable.delta_flat, int(budget.max_nodes),
    )
    status, term, popped, deepest, n, st, pos, W, par, xv, order = out
    status, term, popped, deepest = int(status), int(term), int(popped), int(deepest)
    width = popped / P if P else 1.0
    trace = None
    if keep_trace:
        trace = {"order": order[:popped].copy(), "pos": pos[:n].copy(), "W": W[:n].copy(),
                 "par": par[:n].copy(), "x": xv[:n].copy(), "state": st[:n].copy()}
    if status == kernels.OK:
        blocks = kernels.traceback(par, xv, term, P)
        msg = blocks_to_message(blocks, params)
        return SeqDecodeResult(True, status, msg, blocks, popped, width, P, float(W[term]), msg, trace)
    blocks = kernels.traceback(par, xv, deepest, P)
    partial = blocks_to_message(blocks, params, positions=blocks.size)
    return SeqDecodeResult(False, status, None, blocks, popped, width, int(pos[deepest]),
                           float(W[deepest]), partial, trace)


def path_weight(received: ReceivedPackets, params: CodecParams, table: TransitionTable, blocks: np.ndarray) -> float:
    """Cumulative weight of a given block sequence, evaluated block by block with :func:`block_weight`."""
    datas = [received.data(s) for s in range(params.S)]
    st = params.initial_state
    total = 0.0
    for p, x in enumerate(np.asarray(blocks).tolist()):
        k, s = divmod(p, params.S)
        E = error_vector(st, x, int(datas[s][k]), table, received.which[s], phase=s)
        total += block_weight(E, received.eps[s].tolist(), params.N_s[s])
        st = rotr_int(st ^ int(table.f[s][x]), params.W_s)
    return total
