import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm

from risssk.channel_model import ChannelSet
from risssk.error_metrics import (abep_union_bound, cpep, min_pairwise_delta, pairwise_delta,
                                  q_function)
from risssk.phase_optimizer import build_pair_data
from risssk.ssk_transceiver import effective_channel

from conftest import crandn


class TestQ:
    def test_zero(self):
        assert q_function(0.0) == 0.5

    def test_symmetry(self):
        assert q_function(-1.7) + q_function(1.7) == pytest.approx(1.0, abs=1e-15)

    def test_reference(self):
        assert q_function(1.0) == pytest.approx(0.1586553, abs=1e-7)
        assert q_function(1.0) == pytest.approx(norm.sf(1.0), rel=1e-12)

    def test_vectorized(self):
        np.testing.assert_allclose(q_function(np.array([0.0, 1.0])), [0.5, norm.sf(1.0)])


class TestDelta:
    def test_duplicate_columns(self):
        assert pairwise_delta(np.ones((3, 2)), 1, 2) == 0

    def test_hand(self):
        assert pairwise_delta(np.array([[1.0, 2.0], [0.0, 0.0]]), 1, 2) == pytest.approx(1.0)

    def test_same_index(self):
        with pytest.raises(ValueError):
            pairwise_delta(np.ones((2, 2)), 1, 1)

    @given(st.integers(0, 2 ** 32 - 1))
    def test_matches_quadratic_form(self, seed):
        rng = np.random.default_rng(seed)
        ch = ChannelSet.from_small_scale(crandn(rng, 3, 4), crandn(rng, 6, 4), crandn(rng, 3, 6), (1, 1, 1))
        v = np.exp(2j * np.pi * rng.random(6))
        h_eff = effective_channel(ch, v)
        for pd in build_pair_data(ch):
            want = pairwise_delta(h_eff, *pd.pair)
            assert pd.quadratic(v) == pytest.approx(want, rel=1e-9)


class TestCpep:
    def test_zero_delta(self):
        assert cpep(0.0, 1.0) == 0.5

    def test_reference(self):
        assert cpep(2.0 * 0.7, 0.7) == pytest.approx(0.1586553, abs=1e-7)

    def test_bad_n0(self):
        with pytest.raises(ValueError):
            cpep(1.0, 0.0)

    @given(st.floats(0.01, 50), st.floats(0.01, 50), st.floats(0.05, 5))
    def test_monotone(self, d1, d2, n0):
        if d1 < d2 * (1 - 1e-9):
            assert cpep(d1, n0) > cpep(d2, n0)
            assert cpep(1.0, d1) < cpep(1.0, d2)

    def test_statistic_simulation(self):
        rng = np.random.default_rng(4)
        d = crandn(rng, 4)
        d *= math.sqrt(1.3) / np.linalg.norm(d)
        n0 = 0.8
        n = crandn(rng, 10 ** 6, 4) * math.sqrt(n0)
        t = 2 * np.real(n.conj() @ d) - 1.3
        p_hat = np.mean(t > 0)
        p = cpep(1.3, n0)
        assert abs(p_hat - p) <= 3 * math.sqrt(p * (1 - p) / 10 ** 6)


class TestUnionBound:
    def test_two_antennas(self):
        h = np.array([[1.0, -1.0]], dtype=complex)
        rep = abep_union_bound(h, 0.5)
        assert rep.abep_bound == pytest.approx(cpep(4.0, 0.5))
        assert len(rep.pairs) == 2

    def test_equal_deltas(self):
        # Scaled simplex-like columns in C^4 with all pairwise distances d = 2.
        h = np.eye(4, dtype=complex)
        rep = abep_union_bound(h, 0.9)
        assert rep.abep_bound == pytest.approx(2.0 * cpep(2.0, 0.9))

    def test_literal_double_sum(self, rng):
        h = crandn(rng, 3, 8)
        total = 0.0
        for i, j in itertools.permutations(range(8), 2):
            weight = bin(i ^ j).count("1")
            total += weight * q_function(math.sqrt(np.linalg.norm(h[:, i] - h[:, j]) ** 2 / (2 * 0.6)))
        assert abep_union_bound(h, 0.6).abep_bound == pytest.approx(total / (8 * 3), rel=1e-12)

    def test_vanishes_without_noise(self, rng):
        assert abep_union_bound(crandn(rng, 2, 4), 1e-9).abep_bound < 1e-30

    def test_global_rotation_invariance(self, rng):
        h = crandn(rng, 3, 4)
        rotated = h * np.exp(1.1j)
        assert abep_union_bound(rotated, 0.7).abep_bound == pytest.approx(abep_union_bound(h, 0.7).abep_bound, rel=1e-12)

    def test_pair_terms(self, rng):
        rep = abep_union_bound(crandn(rng, 2, 4), 1.0)
        for p in rep.pairs:
            assert p.mu_t == -p.delta and p.sigma_t2 == pytest.approx(2 * p.delta)


class TestMinDelta:
    def test_duplicates(self):
        h = np.array([[1, 2, 1, 5]], dtype=complex)
        assert min_pairwise_delta(h) == (0.0, (1, 3))

    def test_scaled_orthonormal(self):
        assert min_pairwise_delta(2.5 * np.eye(4))[0] == pytest.approx(2 * 2.5 ** 2)

    @given(st.integers(0, 2 ** 32 - 1))
    def test_enumeration(self, seed):
        h = crandn(np.random.default_rng(seed), 4, 4)
        vals = {(i + 1, j + 1): np.linalg.norm(h[:, i] - h[:, j]) ** 2
                for i, j in itertools.combinations(range(4), 2)}
        best = min(vals, key=lambda k: (vals[k], k))
        got, pair = min_pairwise_delta(h)
        assert pair == best and got == pytest.approx(vals[best])
