import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from risssk.channel_model import ChannelSet
from risssk.rng import RngStream
from risssk.ssk_transceiver import (encode_bits, effective_channel, hamming_bits, hamming_table,
                                    ml_detect, ml_detect_batch, symbol_for_antenna, transmit)

from conftest import crandn


def _channels(rng, n_rx=3, n_tx=4, n_ris=5, g_zero=False):
    h, f = crandn(rng, n_rx, n_tx), crandn(rng, n_ris, n_tx)
    g = np.zeros((n_rx, n_ris), complex) if g_zero else crandn(rng, n_rx, n_ris)
    return ChannelSet.from_small_scale(h, f, g, (1.0, 1.0, 1.0))


class TestMapping:
    @pytest.mark.parametrize("bits,n_tx,antenna", [([0, 0], 4, 1), ([1, 1], 4, 4), ([1, 0, 0], 8, 5)])
    def test_natural(self, bits, n_tx, antenna):
        assert encode_bits(bits, n_tx).antenna_index == antenna

    @given(st.sampled_from([2, 4, 8, 16]), st.data())
    def test_roundtrip(self, n_tx, data):
        k = data.draw(st.integers(1, n_tx))
        for mapping in ("natural", "gray"):
            sym = symbol_for_antenna(k, n_tx, mapping)
            assert encode_bits(sym.bits, n_tx, mapping).antenna_index == k

    def test_vector(self):
        np.testing.assert_array_equal(encode_bits([1, 0]).vector(4), [0, 0, 1, 0])

    @pytest.mark.parametrize("bits", [[0, 2], [], [1, 0, 1]])
    def test_bad_bits(self, bits):
        with pytest.raises(ValueError):
            encode_bits(bits, 4)

    def test_hamming(self):
        assert hamming_bits(2, 2, 4) == 0
        assert hamming_bits(1, 2, 4) == 1
        assert hamming_bits(1, 4, 4) == 2
        assert hamming_table(4).sum() == 16

    @given(st.sampled_from(["natural", "gray"]), st.integers(1, 8), st.integers(1, 8), st.integers(1, 8))
    def test_hamming_metric(self, mapping, i, j, k):
        d = lambda x, y: hamming_bits(x, y, 8, mapping)
        assert d(i, j) == d(j, i)
        assert (d(i, j) == 0) == (i == j)
        assert d(i, k) <= d(i, j) + d(j, k)


class TestChannel:
    def test_zero_g(self, rng):
        ch = _channels(rng, g_zero=True)
        np.testing.assert_array_equal(effective_channel(ch, np.exp(1j * rng.random(5))), ch.h_direct)

    def test_all_ones(self, rng):
        ch = _channels(rng)
        np.testing.assert_allclose(effective_channel(ch, np.ones(5)), ch.h_direct + ch.g_ris_rx @ ch.f_tx_ris)

    def test_per_column(self, rng):
        ch = _channels(rng)
        v = np.exp(2j * np.pi * rng.random(5))
        h_eff = effective_channel(ch, v)
        for n in range(4):
            col = ch.h_direct[:, n] + ch.g_ris_rx @ np.diag(v) @ ch.f_tx_ris[:, n]
            np.testing.assert_allclose(h_eff[:, n], col, atol=1e-12)

    def test_linear_in_each_factor(self, rng):
        h1, h2 = crandn(rng, 3, 4), crandn(rng, 3, 4)
        f1, f2 = crandn(rng, 5, 4), crandn(rng, 5, 4)
        g1, g2 = crandn(rng, 3, 5), crandn(rng, 3, 5)
        v = np.exp(2j * np.pi * rng.random(5))
        a, b = 0.7 - 0.2j, -1.3

        def eff(h, f, g):
            return effective_channel(ChannelSet.from_small_scale(h, f, g, (1, 1, 1)), v)

        def reflected(f, g):
            return eff(np.zeros((3, 4)), f, g)

        np.testing.assert_allclose(eff(a * h1 + b * h2, f1, g1) - reflected(f1, g1),
                                   a * h1 + b * h2, atol=1e-12)
        np.testing.assert_allclose(reflected(a * f1 + b * f2, g1),
                                   a * reflected(f1, g1) + b * reflected(f2, g1), atol=1e-12)
        np.testing.assert_allclose(reflected(f1, a * g1 + b * g2),
                                   a * reflected(f1, g1) + b * reflected(f1, g2), atol=1e-12)

    def test_wrong_length(self, rng):
        with pytest.raises(ValueError):
            effective_channel(_channels(rng), np.ones(4))


class TestTransmitDetect:
    def test_noiseless(self, rng):
        h = crandn(rng, 3, 4)
        y = transmit(symbol_for_antenna(3, 4), h, 0.0, RngStream(0))
        np.testing.assert_array_equal(y, h[:, 2])

    def test_noise_variance(self):
        h = np.zeros((100_000, 2), complex)
        y = transmit(symbol_for_antenna(1, 2), h, 0.5, RngStream(1))
        assert np.var(y) == pytest.approx(0.5, rel=0.02)

    def test_reproducible(self, rng):
        h = crandn(rng, 3, 4)
        a = transmit(symbol_for_antenna(1, 4), h, 1.0, RngStream(3))
        b = transmit(symbol_for_antenna(1, 4), h, 1.0, RngStream(3))
        np.testing.assert_array_equal(a, b)

    def test_noiseless_detection(self, rng):
        h = crandn(rng, 3, 4)
        for k in range(1, 5):
            assert ml_detect(h[:, k - 1], h).antenna_index == k

    def test_translation_invariance(self, rng):
        h, y, shift = crandn(rng, 3, 4), crandn(rng, 3), crandn(rng, 3)
        assert ml_detect(y + shift, h + shift[:, None]) == ml_detect(y, h)

    def test_tie_goes_to_lowest(self):
        h = np.array([[1.0, -1.0, 5.0, 7.0]], dtype=complex)
        assert ml_detect(np.array([0.0]), h).antenna_index == 1

    @given(st.integers(0, 2 ** 32 - 1))
    def test_matches_bruteforce(self, seed):
        rng = np.random.default_rng(seed)
        h = crandn(rng, 3, 8)
        y = crandn(rng, 3)
        metrics = [np.linalg.norm(y - h[:, j]) ** 2 for j in range(8)]
        expected = min(range(8), key=lambda j: (metrics[j], j)) + 1
        assert ml_detect(y, h).antenna_index == expected
        assert ml_detect_batch(y[None, :], h)[0] + 1 == expected
