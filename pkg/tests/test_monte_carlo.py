import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from risssk.channel_model import SystemConfig
from risssk.error_metrics import cpep
from risssk.monte_carlo import (BLOCK_SYMBOLS, BerEstimate, n0_to_snr, shard_blocks,
                                simulate_ber, simulate_errors, snr_to_n0, sweep_snr)
from risssk.phase_optimizer import optimize
from risssk.rng import NOISE, RngStream

from conftest import crandn


def two_antenna(d):
    # Orthogonal equal-norm columns with squared distance d.
    return np.eye(2, dtype=complex) * math.sqrt(d / 2)


class TestBerEstimate:
    def test_counts(self):
        est = BerEstimate.from_counts(25, 1000, 3)
        assert est.ber == 0.025
        assert est.ci_halfwidth == pytest.approx(1.96 * math.sqrt(0.025 * 0.975 / 1000))

    @pytest.mark.parametrize("errors,bits", [(-1, 10), (11, 10), (0, 0)])
    def test_invalid(self, errors, bits):
        with pytest.raises(ValueError):
            BerEstimate.from_counts(errors, bits, 0)

    def test_merge(self):
        a = BerEstimate.from_counts(3, 100, 1).merge(BerEstimate.from_counts(5, 300, 1))
        assert (a.bit_errors, a.bits_total) == (8, 400)


class TestSimulate:
    def test_noiseless(self, rng):
        est = simulate_ber(crandn(rng, 2, 4), 1e-12, 20_000, RngStream(0))
        assert est.bit_errors == 0 and est.ber == 0.0

    def test_two_antenna_analytic(self):
        d, n0 = 3.0, 0.9
        est = simulate_ber(two_antenna(d), n0, 300_000, RngStream(5))
        p = cpep(d, n0)
        assert abs(est.ber - p) <= 3 * math.sqrt(p * (1 - p) / est.bits_total)

    def test_z_scores(self):
        d, n0 = 2.0, 1.0
        p = cpep(d, n0)
        n = 10_000
        z = [(simulate_ber(two_antenna(d), n0, n, RngStream(s)).ber - p) / math.sqrt(p * (1 - p) / n)
             for s in range(200)]
        assert np.mean(np.abs(z) <= 3) >= 0.99

    def test_deterministic(self, rng):
        h = crandn(rng, 2, 4)
        assert simulate_ber(h, 1.0, 5000, RngStream(9)) == simulate_ber(h, 1.0, 5000, RngStream(9))

    @given(st.integers(1, 3 * BLOCK_SYMBOLS + 17), st.integers(1, 6))
    def test_sharding(self, n_symbols, workers):
        h = crandn(np.random.default_rng(n_symbols), 2, 4)
        whole = simulate_errors(h, [0.5, 2.0], n_symbols, RngStream(4))
        parts = sum(simulate_errors(h, [0.5, 2.0], n_symbols, RngStream(4),
                                    shard_blocks(n_symbols, w, workers)) for w in range(workers))
        np.testing.assert_array_equal(whole, parts)

    def test_ci_sqrt_scaling(self):
        h = two_antenna(1.0)
        ci = {n: simulate_ber(h, 1.0, n, RngStream(2)).ci_halfwidth for n in (50_000, 100_000, 200_000)}
        assert ci[100_000] / ci[50_000] == pytest.approx(1 / math.sqrt(2), rel=0.05)
        assert ci[200_000] / ci[50_000] == pytest.approx(0.5, rel=0.05)

    def test_common_noise_across_snr(self, rng):
        # More noise never turns a wrong decision into fewer errors on average;
        # with shared draws the counts are monotone for this easy channel.
        h = crandn(rng, 4, 4) * 3
        errs = simulate_errors(h, [snr_to_n0(s) for s in (-5, 0, 5, 10)], 30_000, RngStream(1))
        assert np.all(np.diff(errs) <= 0)

    @pytest.mark.parametrize("kwargs", [{"n_symbols": 0}, {"n0": 0.0}])
    def test_invalid(self, kwargs):
        args = {"h_eff": np.eye(2), "n0": 1.0, "n_symbols": 10, "rng_stream": RngStream(0)}
        args.update(kwargs)
        with pytest.raises(ValueError):
            simulate_ber(**args)

    def test_snr_conversion(self):
        assert snr_to_n0(10.0) == pytest.approx(0.1)
        assert n0_to_snr(0.01) == pytest.approx(20.0)


class TestSweep:
    def test_single_point_matches_direct(self):
        cfg = SystemConfig(n_ris=4, q_bits=1)
        table = sweep_snr(cfg, lambda ch, r: None, [3.0], 5000, 1, seed=8, scheme="no_ris")
        assert len(table.rows) == 1
        from risssk.channel_model import realize_channels
        from risssk.rng import CHANNEL
        ch = realize_channels(cfg, RngStream(8).child(CHANNEL, 0))
        est = simulate_ber(ch.h_direct, snr_to_n0(3.0), 5000, RngStream(8).child(NOISE, 0))
        assert table.rows[0].ber == est.ber and table.rows[0].ci_halfwidth == est.ci_halfwidth

    def test_optimized_trend_and_bound(self):
        cfg = SystemConfig(n_ris=8, q_bits=2)
        table = sweep_snr(cfg, lambda ch, r: optimize(ch, 2).u_final.entries,
                          [-15.0, -10.0, -5.0, 0.0], 20_000, 2, seed=1, scheme="optimized")
        pooled = {rec["snr_db"]: rec for rec in table.averaged()}
        snrs = sorted(pooled)
        for a, b in zip(snrs, snrs[1:]):
            assert pooled[b]["ber"] <= pooled[a]["ber"] + pooled[a]["ci_halfwidth"] + pooled[b]["ci_halfwidth"]
        for row in table.rows:
            assert row.abep_bound >= row.ber - 3 * row.ci_halfwidth

    def test_fixed_channels_reused(self, rng):
        from risssk.channel_model import ChannelSet
        ch = ChannelSet.from_small_scale(crandn(rng, 2, 2), crandn(rng, 3, 2), crandn(rng, 2, 3), (1, 1, 1))
        table = sweep_snr(ch, lambda c, r: np.ones(3), [0.0], 1000, 3, seed=0)
        assert len({r.min_delta for r in table.rows}) == 1

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            sweep_snr(SystemConfig(n_ris=2), lambda c, r: None, [], 10, 1, 0)
