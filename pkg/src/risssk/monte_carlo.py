"""Seeded Monte Carlo BER estimation for the SSK link.

Symbols are simulated in fixed blocks of :data:`BLOCK_SYMBOLS`. Block ``b``
of a run on stream ``s`` draws its antenna indices and unit-variance noise
from ``s.child(b)``, so any split of the block range across workers gives the
same error count as one pass. The noise is scaled by ``sqrt(n0)`` after it
is drawn, which makes every SNR point (and every scheme with the same
antenna counts) see the same random numbers.

SNR convention: ``snr_db = 10 log10(1 / n0)`` with unit transmit energy and
the direct-link normalized channels of :mod:`risssk.channel_model`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .error_metrics import abep_union_bound, min_pairwise_delta
from .rng import CHANNEL, NOISE, RngStream
from .ssk_transceiver import bits_per_symbol, effective_channel, hamming_table, ml_detect_batch

BLOCK_SYMBOLS = 8192
Z95 = 1.96


def snr_to_n0(snr_db: float) -> float:
    return 10.0 ** (-float(snr_db) / 10.0)


def n0_to_snr(n0: float) -> float:
    return -10.0 * math.log10(n0)


@dataclass(frozen=True)
class BerEstimate:
    bit_errors: int
    bits_total: int
    ber: float
    ci_halfwidth: float
    seed: int

    @classmethod
    def from_counts(cls, bit_errors: int, bits_total: int, seed: int) -> "BerEstimate":
        if bits_total < 1:
            raise ValueError("bits_total must be positive")
        if not 0 <= bit_errors <= bits_total:
            raise ValueError("bit_errors outside [0, bits_total]")
        p = bit_errors / bits_total
        return cls(int(bit_errors), int(bits_total), p,
                   Z95 * math.sqrt(p * (1.0 - p) / bits_total), int(seed))

    def merge(self, other: "BerEstimate") -> "BerEstimate":
        return BerEstimate.from_counts(self.bit_errors + other.bit_errors,
                                       self.bits_total + other.bits_total, self.seed)


def n_blocks(n_symbols: int) -> int:
    return -(-n_symbols // BLOCK_SYMBOLS)


def _block_errors(h_eff, n0s, weights, size: int, stream: RngStream) -> np.ndarray:
    n_rx, n_tx = h_eff.shape
    gen = stream.generator()
    sent = gen.integers(0, n_tx, size)
    z = gen.standard_normal((size, n_rx, 2))
    noise = (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)
    clean = h_eff.T[sent]                                     # size x N_r
    out = np.empty(len(n0s), dtype=np.int64)
    for i, n0 in enumerate(n0s):
        detected = ml_detect_batch(clean + math.sqrt(n0) * noise, h_eff)
        out[i] = int(weights[sent, detected].sum())
    return out


def simulate_errors(h_eff, n0s, n_symbols: int, stream: RngStream,
                    blocks: Iterable[int] | None = None) -> np.ndarray:
    """Bit-error counts for each noise level in ``n0s`` over the given blocks.

    ``blocks`` defaults to every block of an ``n_symbols`` run; pass a
    sub-range to compute one shard.
    """
    h_eff = np.asarray(h_eff, dtype=complex)
    n_tx = h_eff.shape[1]
    weights = hamming_table(n_tx)
    n0s = [float(n) for n in np.atleast_1d(n0s)]
    if any(not n > 0 for n in n0s):
        raise ValueError("noise levels must be positive")
    total = n_blocks(n_symbols)
    errors = np.zeros(len(n0s), dtype=np.int64)
    for b in (range(total) if blocks is None else blocks):
        if not 0 <= b < total:
            raise ValueError(f"block {b} outside [0, {total})")
        size = min(BLOCK_SYMBOLS, n_symbols - b * BLOCK_SYMBOLS)
        errors += _block_errors(h_eff, n0s, weights, size, stream.child(b))
    return errors


def simulate_ber(h_eff, n0: float, n_symbols: int, rng_stream: RngStream) -> BerEstimate:
    """Monte Carlo BER of ML-detected SSK over the fixed channel ``h_eff``."""
    if n_symbols < 1:
        raise ValueError(f"n_symbols must be >= 1, got {n_symbols}")
    if not n0 > 0:
        raise ValueError(f"n0 must be positive, got {n0}")
    h_eff = np.asarray(h_eff, dtype=complex)
    errors = int(simulate_errors(h_eff, [n0], n_symbols, rng_stream)[0])
    return BerEstimate.from_counts(errors, n_symbols * bits_per_symbol(h_eff.shape[1]),
                                   rng_stream.seed)


def shard_blocks(n_symbols: int, shard: int, n_shards: int) -> range:
    """Contiguous block range of one shard."""
    if not 0 <= shard < n_shards:
        raise ValueError(f"shard {shard} outside [0, {n_shards})")
    total = n_blocks(n_symbols)
    lo = shard * total // n_shards
    hi = (shard + 1) * total // n_shards
    return range(lo, hi)


# ---------------------------------------------------------------------------
# SNR sweeps
# ---------------------------------------------------------------------------

ROW_FIELDS = ("scheme", "snr_db", "realization", "ber", "ci_halfwidth", "abep_bound", "min_delta")


@dataclass(frozen=True)
class SweepRow:
    scheme: str
    snr_db: float
    realization: int
    ber: float
    ci_halfwidth: float
    abep_bound: float
    min_delta: float
    bit_errors: int = field(default=0, compare=False)
    bits_total: int = field(default=0, compare=False)


@dataclass
class SweepTable:
    rows: list[SweepRow] = field(default_factory=list)

    def schemes(self) -> list[str]:
        return list(dict.fromkeys(r.scheme for r in self.rows))

    def averaged(self) -> list[dict]:
        """Per (scheme, snr) pooled BER and mean bound over realizations."""
        groups: dict[tuple[str, float], list[SweepRow]] = {}
        for r in self.rows:
            groups.setdefault((r.scheme, r.snr_db), []).append(r)
        out = []
        for (scheme, snr), rows in groups.items():
            errors = sum(r.bit_errors for r in rows)
            bits = sum(r.bits_total for r in rows)
            if bits:
                est = BerEstimate.from_counts(errors, bits, 0)
                ber, ci = est.ber, est.ci_halfwidth
            else:
                # Counts unknown (e.g. every row read back with ber 0 or 1).
                ber, ci = float(np.mean([r.ber for r in rows])), 0.0
            out.append({"scheme": scheme, "snr_db": snr, "realizations": len(rows),
                         "bit_errors": errors, "bits_total": bits, "ber": ber,
                         "ci_halfwidth": ci,
                         "abep_bound": float(np.mean([r.abep_bound for r in rows])),
                         "min_delta": float(np.mean([r.min_delta for r in rows]))})
        return out


# A phase source maps (channels, realization) to a reflection vector, or
# None for a link without the RIS.
PhaseSource = Callable[[object, int], "np.ndarray | None"]


def sweep_realization(channels, v, snr_grid_db, n_symbols: int, stream: RngStream,
                      scheme: str, realization: int) -> list[SweepRow]:
    """Rows for one channel realization and one phase vector."""
    h_eff = channels.h_direct if v is None else effective_channel(channels, v)
    n_tx = h_eff.shape[1]
    n0s = [snr_to_n0(s) for s in snr_grid_db]
    errors = simulate_errors(h_eff, n0s, n_symbols, stream)
    bits = n_symbols * bits_per_symbol(n_tx)
    min_delta = min_pairwise_delta(h_eff)[0]
    rows = []
    for snr, n0, err in zip(snr_grid_db, n0s, errors):
        est = BerEstimate.from_counts(int(err), bits, stream.seed)
        rows.append(SweepRow(scheme, float(snr), realization, est.ber, est.ci_halfwidth,
                             abep_union_bound(h_eff, n0).abep_bound, min_delta,
                             est.bit_errors, est.bits_total))
    return rows


def sweep_snr(channels_or_config, phase_source: PhaseSource, snr_grid_db, n_symbols: int,
              realizations: int, seed: int, scheme: str = "scheme") -> SweepTable:
    """BER and union bound over an SNR grid for several channel realizations.

    ``channels_or_config`` is a fixed ChannelSet (reused for every
    realization) or a SystemConfig, in which case realization ``r`` draws its
    channels from stream ``(seed, CHANNEL, r)``. Noise for realization ``r``
    comes from ``(seed, NOISE, r)``.
    """
    from .channel_model import SystemConfig, realize_channels

    grid = [float(s) for s in snr_grid_db]
    if not grid:
        raise ValueError("empty SNR grid")
    if realizations < 1:
        raise ValueError("realizations must be >= 1")
    root = RngStream(seed)
    table = SweepTable()
    for r in range(realizations):
        if isinstance(channels_or_config, SystemConfig):
            channels = realize_channels(channels_or_config, root.child(CHANNEL, r))
        else:
            channels = channels_or_config
        v = phase_source(channels, r)
        table.rows.extend(sweep_realization(channels, v, grid, n_symbols,
                                            root.child(NOISE, r), scheme, r))
    return table
