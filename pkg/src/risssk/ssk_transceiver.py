"""Space shift keying: bit mapping, effective channel and ML detection.

Antenna numbers in this module are 1-based (antenna 1 is column 0 of the
channel). Bit labels use natural binary, MSB first, unless ``mapping="gray"``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .rng import as_generator

MAPPINGS = ("natural", "gray")


def bits_per_symbol(n_tx: int) -> int:
    if n_tx < 2 or n_tx & (n_tx - 1):
        raise ValueError(f"n_tx must be a power of two >= 2, got {n_tx}")
    return n_tx.bit_length() - 1


def _label(index0: int, mapping: str) -> int:
    if mapping == "natural":
        return index0
    if mapping == "gray":
        return index0 ^ (index0 >> 1)
    raise ValueError(f"unknown mapping {mapping!r}")


def _unlabel(label: int, mapping: str) -> int:
    if mapping == "natural":
        return label
    if mapping == "gray":
        index0 = 0
        while label:
            index0 ^= label
            label >>= 1
        return index0
    raise ValueError(f"unknown mapping {mapping!r}")


@dataclass(frozen=True)
class SskSymbol:
    antenna_index: int
    bits: tuple[int, ...]

    def vector(self, n_tx: int) -> np.ndarray:
        """Standard basis column e_{antenna_index}."""
        e = np.zeros(n_tx)
        e[self.antenna_index - 1] = 1.0
        return e


def encode_bits(bits, n_tx: int | None = None, mapping: str = "natural") -> SskSymbol:
    bits = tuple(int(b) for b in bits)
    if any(b not in (0, 1) for b in bits):
        raise ValueError(f"bits must be 0/1, got {bits}")
    if not bits:
        raise ValueError("empty bit vector")
    if n_tx is not None and len(bits) != bits_per_symbol(n_tx):
        raise ValueError(f"expected {bits_per_symbol(n_tx)} bits for n_tx={n_tx}, got {len(bits)}")
    label = 0
    for b in bits:
        label = (label << 1) | b
    return SskSymbol(_unlabel(label, mapping) + 1, bits)


def symbol_for_antenna(antenna_index: int, n_tx: int, mapping: str = "natural") -> SskSymbol:
    if not 1 <= antenna_index <= n_tx:
        raise ValueError(f"antenna index {antenna_index} outside [1, {n_tx}]")
    nbits = bits_per_symbol(n_tx)
    label = _label(antenna_index - 1, mapping)
    bits = tuple((label >> (nbits - 1 - k)) & 1 for k in range(nbits))
    return SskSymbol(antenna_index, bits)


def effective_channel(channels, v) -> np.ndarray:
    """H + G diag(v) F."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    if v.shape[0] != channels.n_ris:
        raise ValueError(f"phase vector length {v.shape[0]} != RIS size {channels.n_ris}")
    return channels.h_direct + (channels.g_ris_rx * v) @ channels.f_tx_ris


def transmit(symbol: SskSymbol, h_eff, n0: float, rng) -> np.ndarray:
    if n0 < 0:
        raise ValueError(f"noise level must be nonnegative, got {n0}")
    h_eff = np.asarray(h_eff)
    y = h_eff[:, symbol.antenna_index - 1].astype(complex)
    if n0 > 0:
        z = as_generator(rng).standard_normal((h_eff.shape[0], 2))
        y = y + np.sqrt(n0 / 2) * (z[:, 0] + 1j * z[:, 1])
    return y


def ml_detect(y, h_eff, mapping: str = "natural") -> SskSymbol:
    h_eff = np.asarray(h_eff)
    metric = np.sum(np.abs(np.asarray(y)[:, None] - h_eff) ** 2, axis=0)
    # np.argmin returns the first minimum: ties go to the lowest antenna.
    return symbol_for_antenna(int(np.argmin(metric)) + 1, h_eff.shape[1], mapping)


def ml_detect_batch(y, h_eff) -> np.ndarray:
    """0-based detected columns for received rows ``y`` of shape (n, N_r)."""
    h_eff = np.asarray(h_eff)
    # ||y - h_j||^2 = ||y||^2 - 2 Re<y, h_j> + ||h_j||^2; ||y||^2 is common.
    metric = np.sum(np.abs(h_eff) ** 2, axis=0) - 2 * np.real(y @ h_eff.conj())
    return np.argmin(metric, axis=1)


def hamming_bits(i: int, j: int, n_tx: int | None = None, mapping: str = "natural") -> int:
    if min(i, j) < 1 or (n_tx is not None and max(i, j) > n_tx):
        raise ValueError(f"antenna indices ({i}, {j}) out of range")
    return bin(_label(i - 1, mapping) ^ _label(j - 1, mapping)).count("1")


@lru_cache(maxsize=None)
def _hamming_table(n_tx: int, mapping: str) -> np.ndarray:
    idx = range(1, n_tx + 1)
    table = np.array([[hamming_bits(i, j, n_tx, mapping) for j in idx] for i in idx])
    table.setflags(write=False)
    return table


def hamming_table(n_tx: int, mapping: str = "natural") -> np.ndarray:
    """N_t x N_t table of bit distances between 0-based columns."""
    bits_per_symbol(n_tx)
    return _hamming_table(n_tx, mapping)
