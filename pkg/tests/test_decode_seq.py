import heapq

import numpy as np
import pytest

from jrc import kernels
from jrc.analysis import solve_pareto_c
from jrc.bitcore import PacketIndexSet, extract_int, rotr_int
from jrc.channel import corrupt
from jrc.codec import CodecParams, build_transition_table, emit_packet_subset, encode
from jrc.decode_list import build_partition_table, decode_list
from jrc.decode_seq import (
    DecodeBudget,
    ErrorVector,
    block_weight,
    build_sorted_table,
    decode_sequential,
    error_vector,
    path_weight,
)

from conftest import make_instance


def test_block_weight_example():
    assert block_weight(ErrorVector(0, 2), [0.05, 0.04], 1) == pytest.approx(0.8671, abs=1e-4)
    assert block_weight(0b01, [0.05, 0.04], 1) == pytest.approx(1 + np.log2(0.05) + np.log2(0.96))
    assert block_weight(0b1, [0.0], 1) == -np.inf
    assert block_weight(0b0, [0.0, 0.0], 1) == 1.0


def test_error_vector_zero_on_true_path(rng):
    params, table, bits, packets, which, received = make_instance(rng, N=5, M=7, L=30)
    data = received.data(0)
    state = 0
    from jrc.codec import message_to_blocks
    for k, x in enumerate(message_to_blocks(bits, params)):
        assert error_vector(state, x, int(data[k]), table, which.which).value == 0
        state = rotr_int(state ^ int(table.f[0][x]), 64)


@pytest.mark.parametrize("M", [3, 6, 9])
def test_sorted_table_invariants(M):
    rng = np.random.default_rng(M)
    N = 4
    params = CodecParams(N=N, L=1)
    table = build_transition_table(11, params)
    which = PacketIndexSet.of(rng.choice(64, M, replace=False))
    eps = rng.uniform(0.0, 0.3, M)
    eps[0] = 0.0
    st = build_sorted_table(table, which, eps)
    assert st.exact
    for z in range(1 << M):
        cand = st.candidates(z).astype(int)
        assert sorted(cand) == list(range(1 << N))
        w = [block_weight(z ^ extract_int(int(table.f[0][x]), which.which), eps, N) for x in cand]
        assert all(a >= b - 1e-12 for a, b in zip(w, w[1:]))


def naive_best_first(received, params, table, max_pops=100_000):
    """Best-first search pushing every child; returns popped paths and a tie flag."""
    which = received.which[0]
    eps = received.eps[0].tolist()
    data = received.data(0)
    P = params.positions
    heap = [(-0.0, 0, 0, 0, ())]
    counter = 1
    popped, tie = [], False
    while heap and len(popped) < max_pops:
        negw, negp, _, state, path = heapq.heappop(heap)
        if heap and heap[0][1] == negp and abs(heap[0][0] - negw) < 1e-9:
            tie = True
            break
        if path:
            popped.append(path)
        if len(path) == P:
            return popped, tie
        for x in range(1 << params.N):
            E = extract_int(state ^ int(table.f[0][x]), which) ^ int(data[len(path)])
            w = -negw + block_weight(E, eps, params.N)
            if w > -np.inf:
                nxt = rotr_int(state ^ int(table.f[0][x]), params.W_s)
                heapq.heappush(heap, (-w, negp - 1, counter, nxt, path + (x,)))
                counter += 1
    return popped, tie


def test_pop_sequence_matches_naive_oracle():
    rng = np.random.default_rng(99)
    compared = 0
    for _ in range(40):
        params, table, bits, packets, which, received = make_instance(rng, N=2, M=8, L=12)
        eps = rng.uniform(0.05, 0.35, 8)
        noisy = corrupt(received, eps, rng)
        expect, tie = naive_best_first(noisy, params, table)
        if tie:
            continue
        res = decode_sequential(noisy, params, build_sorted_table(table, which, eps),
                                DecodeBudget(10_000), keep_trace=True)
        tr = res.trace
        got = []
        for node in tr["order"]:
            path, n = [], int(node)
            while n > 0:
                path.append(int(tr["x"][n]))
                n = int(tr["par"][n])
            got.append(tuple(reversed(path)))
        assert got == expect
        compared += 1
    assert compared >= 20


def test_zero_noise_sequential_equals_list():
    rng = np.random.default_rng(5)
    for i in range(100):
        N = int(rng.integers(2, 9))
        params, table, bits, packets, which, received = make_instance(rng, N=N, M=N + 1, L=40)
        final = packets.final_state if i % 2 else None
        lst = decode_list(received, params, build_partition_table(table, which), final_state=final)
        seq = decode_sequential(received, params, build_sorted_table(table, which, np.zeros(N + 1)),
                                DecodeBudget(10**6), final_state=final)
        assert seq.success
        assert any(np.array_equal(seq.message, m) for m in lst.messages)
        if lst.survivors == 1:
            assert np.array_equal(seq.message, lst.message)


def test_noisy_decode_and_path_weight(rng):
    ok = 0
    for _ in range(10):
        params, table, bits, packets, which, received = make_instance(rng, N=6, M=7, L=300)
        eps = [0.0] * 5 + [0.05, 0.04]
        noisy = corrupt(received, eps, rng)
        res = decode_sequential(noisy, params, build_sorted_table(table, which, eps),
                                DecodeBudget.from_width(512, params.positions), final_state=packets.final_state)
        if res.success:
            ok += np.array_equal(res.message, bits)
            assert res.weight == pytest.approx(path_weight(noisy, params, table, res.blocks), abs=1e-9)
    assert ok >= 8


def test_budget_exhaustion_reports_prefix(rng):
    params, table, bits, packets, which, received = make_instance(rng, N=8, M=10, L=400)
    eps = [0.0] * 7 + [0.1, 0.1, 0.1]
    noisy = corrupt(received, eps, rng)
    assert solve_pareto_c(eps, 8).regime == "finite_c"
    res = decode_sequential(noisy, params, build_sorted_table(table, which, eps), DecodeBudget(params.positions))
    assert not res.success and res.status == kernels.BUDGET
    assert res.nodes == params.positions
    assert 0 < res.position < params.positions
    assert res.blocks.size == res.position


def test_exhausted_on_contradictory_clean_packets(rng):
    params, table, bits, packets, which, received = make_instance(rng, N=2, M=8, L=50)
    rows = received.bits[0].copy()
    rows[:, 10] ^= 1  # every clean packet contradicts the encoder at step 10
    bad = type(received)(received.which, (rows,), received.eps, received.L)
    res = decode_sequential(bad, params, build_sorted_table(table, which, np.zeros(8)))
    assert res.exhausted and res.position <= 10


def test_interleaved_sequential(rng):
    params = CodecParams(N=8, L=200, S=2)
    table = build_transition_table(8, params)
    bits = rng.integers(0, 2, params.message_bits).astype(np.uint8)
    packets = encode(bits, params, table)
    received = emit_packet_subset(packets, {0: rng.choice(64, 5, replace=False), 1: rng.choice(64, 5, replace=False)})
    eps = [[0.0, 0.0, 0.0, 0.02, 0.03], [0.0, 0.0, 0.0, 0.0, 0.04]]
    noisy = corrupt(received, eps, rng)
    res = decode_sequential(noisy, params, build_sorted_table(table, received.which, eps),
                            final_state=packets.final_state)
    assert res.success and np.array_equal(res.message, bits)


def test_capped_table_still_decodes(rng):
    params, table, bits, packets, which, received = make_instance(rng, N=4, M=10, L=200)
    eps = [0.0, 0.0, 0.0, 0.1, 0.2, 0.2, 0.2, 0.3, 0.3, 0.3]
    noisy = corrupt(received, eps, rng)
    st = build_sorted_table(table, which, eps, M_table_cap=6)
    assert not st.exact and st.M_table == (6,)
    res = decode_sequential(noisy, params, st, final_state=packets.final_state)
    assert res.success and np.array_equal(res.message, bits)


def test_backends_agree_on_sequential(rng):
    params, table, bits, packets, which, received = make_instance(rng, N=5, M=6, L=150)
    eps = [0.0] * 4 + [0.05, 0.1]
    noisy = corrupt(received, eps, rng)
    st = build_sorted_table(table, which, eps)
    from jrc.decode_seq import _reordered_data
    lay = st.layout
    args = (_reordered_data(noisy, st), 1, 64, np.uint64(0), np.uint64(packets.final_state), True,
            lay.f_flat, lay.f_off, lay.which_flat, lay.w_off, lay.ef_flat, st.table_flat, st.t_off,
            st.t_mask, st.exact, st.base_w, st.delta_flat, 50_000)
    a = kernels.jit_kernels.seq_decode(*args)
    b = kernels.fallback_kernels.seq_decode(*args)
    assert [int(v) for v in a[:5]] == [int(v) for v in b[:5]]
    n = int(a[4])
    for x, y in zip(a[5:10], b[5:10]):
        assert np.array_equal(np.asarray(x)[:n], np.asarray(y)[:n])
    assert np.array_equal(a[10][: int(a[2])], b[10][: int(b[2])])
