"""Pairwise distances, conditional pairwise error probability and the ABEP union bound.

All quantities are conditional on one effective channel ``h_eff`` (N_r x N_t).
Antenna numbers are 1-based, as in :mod:`risssk.ssk_transceiver`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .ssk_transceiver import bits_per_symbol, hamming_table


def q_function(x):
    """Gaussian right-tail probability P[N(0, 1) > x]."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class PairwiseError:
    pair: tuple[int, int]
    delta: float
    mu_t: float
    sigma_t2: float
    cpep: float


@dataclass(frozen=True)
class AbepReport:
    pairs: list[PairwiseError] = field(repr=False)
    abep_bound: float
    min_delta: float


def pairwise_delta(h_eff, i: int, j: int) -> float:
    """Squared distance between effective-channel columns i and j."""
    if i == j:
        raise ValueError("pairwise distance needs two distinct antennas")
    h_eff = np.asarray(h_eff)
    d = h_eff[:, i - 1] - h_eff[:, j - 1]
    return float(np.real(np.vdot(d, d)))


def pairwise_delta_matrix(h_eff) -> np.ndarray:
    """N_t x N_t matrix of squared column distances (0-based)."""
    h_eff = np.asarray(h_eff)
    diff = h_eff[:, :, None] - h_eff[:, None, :]
    return np.sum(diff.real ** 2 + diff.imag ** 2, axis=0)


def cpep(delta, n0: float):
    if not n0 > 0:
        raise ValueError(f"noise level must be positive, got {n0}")
    delta = np.asarray(delta, dtype=float)
    if np.any(delta < 0):
        raise ValueError("delta must be nonnegative")
    return q_function(np.sqrt(delta / (2.0 * n0)))


def abep_union_bound(h_eff, n0: float, n_tx: int | None = None,
                     mapping: str = "natural") -> AbepReport:
    h_eff = np.asarray(h_eff)
    n_tx = h_eff.shape[1] if n_tx is None else n_tx
    if h_eff.shape[1] != n_tx:
        raise ValueError(f"h_eff has {h_eff.shape[1]} columns, expected {n_tx}")
    nbits = bits_per_symbol(n_tx)
    deltas = pairwise_delta_matrix(h_eff)
    probs = cpep(deltas, n0)
    weights = hamming_table(n_tx, mapping)
    # The literal double sum over ordered pairs; diagonal weights are zero.
    bound = float(np.sum(probs * weights) / (n_tx * nbits))
    pairs = [
        PairwiseError((i + 1, j + 1), float(deltas[i, j]), -float(deltas[i, j]),
                      2.0 * n0 * float(deltas[i, j]), float(probs[i, j]))
        for i, j in itertools.permutations(range(n_tx), 2)
    ]
    return AbepReport(pairs, bound, min(p.delta for p in pairs))


def min_pairwise_delta(h_eff) -> tuple[float, tuple[int, int]]:
    """Smallest squared column distance and its (lexicographically first) pair."""
    h_eff = np.asarray(h_eff)
    n_tx = h_eff.shape[1]
    if n_tx < 2:
        raise ValueError("need at least two antennas")
    deltas = pairwise_delta_matrix(h_eff)
    iu, ju = np.triu_indices(n_tx, k=1)
    k = int(np.argmin(deltas[iu, ju]))
    return float(deltas[iu[k], ju[k]]), (int(iu[k]) + 1, int(ju[k]) + 1)
