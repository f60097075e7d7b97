import numpy as np
import pytest

from jrc.bitcore import BitSeq, PacketIndexSet
from jrc.channel import NoiseProfile, RngStream, apply_bsc, corrupt, drop_packets

from conftest import make_instance


def test_bsc_identity_at_zero(rng):
    bits = rng.integers(0, 2, 1000).astype(np.uint8)
    assert np.array_equal(apply_bsc(bits, 0.0, rng), bits)


@pytest.mark.parametrize("eps", [0.05, 0.2, 0.5])
def test_bsc_flip_rate_concentration(eps):
    n = 200_000
    flips = apply_bsc(np.zeros(n, dtype=np.uint8), eps, np.random.default_rng(3)).sum()
    sd = np.sqrt(n * eps * (1 - eps))
    assert abs(flips - n * eps) < 5 * sd


def test_bsc_reproducible_and_type_preserving():
    b = BitSeq(np.zeros(64, dtype=np.uint8))
    x = apply_bsc(b, 0.3, RngStream(7, 1))
    y = apply_bsc(b, 0.3, RngStream(7, 1))
    assert isinstance(x, BitSeq) and x == y
    assert apply_bsc(b, 0.3, RngStream(7, 2)) != x


def test_bsc_rejects_bad_eps():
    for bad in (-0.1, 0.6):
        with pytest.raises(ValueError):
            apply_bsc(np.zeros(4, dtype=np.uint8), bad, 0)
    with pytest.raises(ValueError):
        NoiseProfile((0.1, 0.7))


def test_corrupt_labels_and_rates(rng):
    params, table, bits, packets, which, received = make_instance(rng, L=5000, M=3)
    noisy = corrupt(received, [0.0, 0.1, 0.3], rng)
    assert noisy.eps[0].tolist() == [0.0, 0.1, 0.3]
    rates = (noisy.bits[0] != received.bits[0]).mean(axis=1)
    assert rates[0] == 0.0
    assert abs(rates[1] - 0.1) < 0.02 and abs(rates[2] - 0.3) < 0.03
    with pytest.raises(ValueError):
        corrupt(received, [0.1], rng)


def test_drop_packets(rng):
    params, table, bits, packets, which, received = make_instance(rng, M=4)
    keep = which.which[1:3]
    sub = drop_packets(received, keep)
    assert sub.which == (tuple(keep),)
    assert np.array_equal(sub.bits[0], received.bits[0][1:3])
    assert drop_packets(received, []).M == 0
    assert drop_packets(packets, []).M == 0
    assert drop_packets(packets, PacketIndexSet((0, 1))).M == 2
    with pytest.raises(ValueError):
        drop_packets(received, [next(i for i in range(64) if i not in which.which)])
