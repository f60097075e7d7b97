"""Compare the numba kernels with the numpy/Python fallback on typical workloads.

    python3 benchmarks/bench_kernels.py [--L 2000] [--repeat 3]

Both backends are imported side by side, so no environment flag is needed.
The first numba call (compilation or cache load) is excluded from timings.
"""
import argparse
import time

import numpy as np

from jrc import kernels
from jrc.bitcore import PacketIndexSet
from jrc.channel import corrupt
from jrc.codec import CodecParams, build_transition_table, emit_packet_subset, encode, message_to_blocks
from jrc.decode_list import build_partition_table
from jrc.decode_seq import _reordered_data, build_sorted_table


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(L, seed=0):
    rng = np.random.default_rng(seed)
    params = CodecParams(N=8, L=L)
    table = build_transition_table(seed, params)
    bits = rng.integers(0, 2, params.message_bits).astype(np.uint8)
    packets = encode(bits, params, table)
    which = PacketIndexSet.of(rng.choice(64, 9, replace=False))
    clean = emit_packet_subset(packets, which)
    f_flat, f_off = table.flat()
    xs = message_to_blocks(bits, params)

    pt = build_partition_table(table, which)
    lay = pt.layout
    list_args = (clean.data_positions(), 1, 64, np.uint64(0), lay.f_flat, lay.f_off, lay.which_flat,
                 lay.w_off, pt.order_flat, pt.start_flat, pt.s_off, 1 << 22)

    eps = [0.0] * 7 + [0.05, 0.04]
    noisy = corrupt(clean, eps, rng)
    st = build_sorted_table(table, which, eps)
    sl = st.layout
    seq_args = (_reordered_data(noisy, st), 1, 64, np.uint64(0), np.uint64(packets.final_state), True,
                sl.f_flat, sl.f_off, sl.which_flat, sl.w_off, sl.ef_flat, st.table_flat, st.t_off,
                st.t_mask, st.exact, st.base_w, st.delta_flat, 512 * L)
    return {
        "encode_states": ("encode_states", (xs, 1, f_flat, f_off, 64, np.uint64(0))),
        "list_decode (M=N+1)": ("list_decode", list_args),
        "seq_decode (2 noisy)": ("seq_decode", seq_args),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=int, default=2000, help="encoding steps per workload")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    print(f"L={args.L}, best of {args.repeat}")
    print(f"{'kernel':24s} {'numba [ms]':>12s} {'fallback [ms]':>14s} {'speedup':>9s}")
    for label, (name, call_args) in workloads(args.L).items():
        jit_fn = getattr(kernels.jit_kernels, name)
        py_fn = getattr(kernels.fallback_kernels, name)
        jit_fn(*call_args)  # compile / load cache
        t_jit = best_of(lambda: jit_fn(*call_args), args.repeat)
        t_py = best_of(lambda: py_fn(*call_args), args.repeat)
        print(f"{label:24s} {1e3 * t_jit:12.2f} {1e3 * t_py:14.2f} {t_py / t_jit:8.1f}x")


if __name__ == "__main__":
    main()
