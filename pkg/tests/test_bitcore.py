import numpy as np
import pytest
from hypothesis import given, strategies as st

from jrc.bitcore import (
    BitFormatError,
    BitSeq,
    PacketIndexSet,
    StateWord,
    cyclic_shift_right,
    extract,
    extract_array,
    extract_int,
    pack_bits,
    rotr_array,
    rotr_int,
    unpack_bits,
)


def test_extract_examples():
    s = StateWord(0b10110, 5)
    assert extract(s, PacketIndexSet((1, 3, 4))).value == 0b101
    assert extract(s, PacketIndexSet((0,))).value == 0
    assert extract(StateWord(0b11111, 5), PacketIndexSet((0, 2, 4))).value == 0b111


def test_extract_rejects_out_of_width():
    with pytest.raises(ValueError):
        extract(StateWord(1, 5), PacketIndexSet((5,)))


@pytest.mark.parametrize("W", range(4, 11))
def test_extract_xor_linear_exhaustive(W):
    # every pair of states for a few selections (exhaustive over states)
    values = np.arange(1 << W, dtype=np.uint64)
    for which in [(0,), (1, 3), tuple(range(0, W, 2)), tuple(range(W))]:
        ex = extract_array(values, which)
        lhs = extract_array(values[:, None] ^ values[None, :], which)
        assert np.array_equal(lhs, ex[:, None] ^ ex[None, :])


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1),
       st.lists(st.integers(0, 63), min_size=1, max_size=20, unique=True))
def test_extract_xor_linear_64(a, b, which):
    which = sorted(which)
    assert extract_int(a ^ b, which) == extract_int(a, which) ^ extract_int(b, which)


def test_rotation_examples():
    assert cyclic_shift_right(StateWord(0b00001, 5)).value == 0b10000
    assert cyclic_shift_right(StateWord(0b10110, 5)).value == 0b01011


@pytest.mark.parametrize("W", range(4, 17))
def test_rotation_order_exhaustive(W):
    v = np.arange(1 << W, dtype=np.uint64)
    r = v
    for _ in range(W):
        r = rotr_array(r, W)
    assert np.array_equal(r, v)
    # a single rotation is a bijection on the state space
    assert np.unique(rotr_array(v, W)).size == v.size


@given(st.integers(0, 2**64 - 1))
def test_rotr_int_matches_array(v):
    assert rotr_int(v, 64) == int(rotr_array(np.array([v], dtype=np.uint64), 64)[0])


@given(st.lists(st.integers(0, 1), max_size=200))
def test_pack_roundtrip(bits):
    data = pack_bits(bits)
    assert len(data) == (len(bits) + 7) // 8
    assert unpack_bits(data, len(bits)).tolist() == bits


def test_pack_lsb_first():
    assert pack_bits([1, 0, 0, 0, 0, 0, 0, 0, 0, 1]) == bytes([1, 2])


def test_unpack_length_checks():
    with pytest.raises(BitFormatError):
        unpack_bits(b"\x00", 9)
    with pytest.raises(BitFormatError):
        unpack_bits(b"", -1)


def test_bitseq_immutable_and_get():
    b = BitSeq.from_bytes(b"\x05", 3)
    assert [b.get(i) for i in range(3)] == [1, 0, 1]
    with pytest.raises(IndexError):
        b.get(3)
    with pytest.raises(ValueError):
        b.bits[0] = 0
    with pytest.raises(ValueError):
        BitSeq(np.array([0, 2]))


def test_state_and_index_validation():
    with pytest.raises(ValueError):
        StateWord(32, 5)
    with pytest.raises(ValueError):
        StateWord(0, 3)
    with pytest.raises(ValueError):
        PacketIndexSet((3, 1))
    with pytest.raises(ValueError):
        PacketIndexSet(())
    assert PacketIndexSet.of([4, 1, 1]).which == (1, 4)
    assert (StateWord(5, 8) ^ StateWord(3, 8)).value == 6
