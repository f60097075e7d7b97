import numpy as np
import pytest

from jrc.bitcore import PacketIndexSet
from jrc.codec import CodecParams, build_transition_table, emit_packet_subset, encode


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_instance(rng, N=8, L=200, M=9, W_s=64, S=1, seed=None, which=None):
    """Random message, table and received packet selection (spread over the state)."""
    params = CodecParams(N=N, L=L, W_s=W_s, S=S)
    table = build_transition_table(int(rng.integers(2**62)) if seed is None else seed, params)
    bits = rng.integers(0, 2, params.message_bits).astype(np.uint8)
    packets = encode(bits, params, table)
    if which is None:
        which = PacketIndexSet.of(rng.choice(W_s, size=M, replace=False))
    received = emit_packet_subset(packets, which)
    return params, table, bits, packets, which, received


# --- acceptance report ------------------------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
