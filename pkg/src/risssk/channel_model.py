"""Scenario geometry, path loss and small-scale fading for the RIS-SSK link.

The direct Tx-Rx link is Rayleigh; the Tx-RIS and RIS-Rx links are Rician
with a rank-one line-of-sight component built from half-wavelength uniform
linear arrays. All arrays lie along the x axis, so broadside is the y axis
and the steering angle of a link is ``asin(dx / d)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .rng import CHANNEL, RngStream, as_generator

# Stand-in for Q -> infinity: a 4096-point phase alphabet.
CONTINUOUS_Q = 12
CONTINUOUS = "continuous"


class ConfigError(ValueError):
    """Invalid scenario parameter; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class SystemConfig:
    n_tx: int = 4
    n_rx: int = 4
    n_ris: int = 64
    q_bits: int | str = 3
    rician_k: float = 3.0
    alpha_direct: float = 2.8
    alpha_tx_ris: float = 2.2
    alpha_ris_rx: float = 2.2
    pos_tx: tuple[float, float] = (0.0, 10.0)
    pos_ris: tuple[float, float] = (40.0, 4.0)
    pos_rx: tuple[float, float] = (40.0, 0.0)
    noise_n0: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("pos_tx", "pos_ris", "pos_rx"):
            pos = getattr(self, name)
            try:
                pos = tuple(float(x) for x in pos)
            except (TypeError, ValueError):
                raise ConfigError(name, "expected an [x, y] pair") from None
            if len(pos) != 2:
                raise ConfigError(name, "expected an [x, y] pair")
            object.__setattr__(self, name, pos)
        for name in ("n_tx", "n_rx", "n_ris"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigError(name, f"expected an integer, got {value!r}")
        if self.n_tx < 2 or self.n_tx & (self.n_tx - 1):
            raise ConfigError("n_tx", f"must be a power of two >= 2, got {self.n_tx}")
        if self.n_rx < 1:
            raise ConfigError("n_rx", f"must be >= 1, got {self.n_rx}")
        if self.n_ris < 1:
            raise ConfigError("n_ris", f"must be >= 1, got {self.n_ris}")
        if self.q_bits != CONTINUOUS:
            if isinstance(self.q_bits, bool) or not isinstance(self.q_bits, (int, np.integer)):
                raise ConfigError("q_bits", f"expected an integer or {CONTINUOUS!r}")
            if self.q_bits < 1:
                raise ConfigError("q_bits", f"must be >= 1, got {self.q_bits}")
        if not self.rician_k >= 0:
            raise ConfigError("rician_k", f"must be >= 0, got {self.rician_k}")
        if not self.noise_n0 >= 0:
            raise ConfigError("noise_n0", f"must be >= 0, got {self.noise_n0}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")
        for a, b, name in (
            (self.pos_tx, self.pos_rx, "pos_rx"),
            (self.pos_tx, self.pos_ris, "pos_ris"),
            (self.pos_ris, self.pos_rx, "pos_rx"),
        ):
            if euclidean_distance(a, b) <= 0:
                raise ConfigError(name, "coincides with another node")

    @property
    def effective_q(self) -> int:
        """Alphabet size exponent used by the optimizer."""
        return CONTINUOUS_Q if self.q_bits == CONTINUOUS else int(self.q_bits)

    def replace(self, **changes) -> "SystemConfig":
        data = asdict(self)
        data.update(changes)
        return SystemConfig(**data)

    def to_dict(self) -> dict:
        data = asdict(self)
        for name in ("pos_tx", "pos_ris", "pos_rx"):
            data[name] = list(data[name])
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "SystemConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown field")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError("config", str(exc)) from None

    @classmethod
    def from_json(cls, path) -> "SystemConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "top-level JSON value must be an object")
        return cls.from_dict(data)


@dataclass(frozen=True)
class ChannelSet:
    """Path-loss scaled channels plus their small-scale factors.

    ``h_direct`` is N_r x N_t, ``f_tx_ris`` is L x N_t, ``g_ris_rx`` is N_r x L.
    """

    h_direct: np.ndarray
    f_tx_ris: np.ndarray
    g_ris_rx: np.ndarray
    h0: np.ndarray = field(repr=False)
    f0: np.ndarray = field(repr=False)
    g0: np.ndarray = field(repr=False)
    gains: tuple[float, float, float] = (1.0, 1.0, 1.0)

    @classmethod
    def from_small_scale(cls, h0, f0, g0, gains) -> "ChannelSet":
        gd, gf, gg = (float(g) for g in gains)
        return cls(gd * h0, gf * f0, gg * g0, h0, f0, g0, (gd, gf, gg))

    @property
    def n_tx(self) -> int:
        return self.h_direct.shape[1]

    @property
    def n_rx(self) -> int:
        return self.h_direct.shape[0]

    @property
    def n_ris(self) -> int:
        return self.f_tx_ris.shape[0]

    def without_ris(self) -> "ChannelSet":
        """Same direct link with the reflected path removed."""
        zero = np.zeros_like(self.g_ris_rx)
        return ChannelSet(self.h_direct, self.f_tx_ris, zero, self.h0, self.f0, zero,
                          (self.gains[0], self.gains[1], 0.0))


def euclidean_distance(p, q) -> float:
    return math.hypot(float(q[0]) - float(p[0]), float(q[1]) - float(p[1]))


def path_loss(distance: float, exponent: float) -> float:
    """Amplitude gain ``d ** (-exponent / 2)`` with a 1 m reference distance."""
    if not distance > 0:
        raise ValueError(f"distance must be positive, got {distance}")
    return float(distance) ** (-float(exponent) / 2.0)


def gen_rayleigh(rows: int, cols: int, rng) -> np.ndarray:
    """i.i.d. CN(0, 1) entries."""
    gen = as_generator(rng)
    z = gen.standard_normal((rows, cols, 2))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def gen_rician(rows: int, cols: int, kappa: float, los_matrix, rng) -> np.ndarray:
    if kappa < 0:
        raise ValueError(f"Rician factor must be nonnegative, got {kappa}")
    los = np.asarray(los_matrix, dtype=complex)
    if los.shape != (rows, cols):
        raise ValueError(f"LoS matrix shape {los.shape} != {(rows, cols)}")
    nlos = gen_rayleigh(rows, cols, rng)
    if math.isinf(kappa):
        return los.copy()
    return math.sqrt(kappa / (1 + kappa)) * los + math.sqrt(1 / (1 + kappa)) * nlos


def ula_response(n: int, sin_angle: float) -> np.ndarray:
    """Half-wavelength ULA response, first element at phase zero."""
    return np.exp(1j * np.pi * np.arange(n) * sin_angle)


def steering_sine(src, dst) -> float:
    """Sine of the angle from broadside of the ray leaving ``src`` toward ``dst``."""
    return (float(dst[0]) - float(src[0])) / euclidean_distance(src, dst)


def los_steering_matrix(rows: int, cols: int, sin_rx: float = 0.0, sin_tx: float = 0.0) -> np.ndarray:
    """Rank-one LoS matrix ``a_rx a_tx^T``; every entry has unit modulus."""
    return np.outer(ula_response(rows, sin_rx), ula_response(cols, sin_tx))


def link_gains(config: SystemConfig, normalize: bool = True) -> tuple[float, float, float]:
    """Amplitude gains for (Tx-Rx, Tx-RIS, RIS-Rx).

    With ``normalize`` the whole received signal is divided by the direct-link
    gain, applied once to the direct link and once to the RIS-Rx hop, so the
    direct channel has unit average power while the reflected-to-direct power
    ratio stays physical.
    """
    gd = path_loss(euclidean_distance(config.pos_tx, config.pos_rx), config.alpha_direct)
    gf = path_loss(euclidean_distance(config.pos_tx, config.pos_ris), config.alpha_tx_ris)
    gg = path_loss(euclidean_distance(config.pos_ris, config.pos_rx), config.alpha_ris_rx)
    if normalize:
        return 1.0, gf, gg / gd
    return gd, gf, gg


def realize_channels(config: SystemConfig, stream: RngStream | None = None,
                     normalize: bool = True) -> ChannelSet:
    """Draw one channel realization; defaults to stream ``(seed, CHANNEL, 0)``."""
    if stream is None:
        stream = RngStream(config.seed).child(CHANNEL, 0)
    h_rng, f_rng, g_rng = (stream.child(i).generator() for i in range(3))

    f_los = los_steering_matrix(
        config.n_ris, config.n_tx,
        sin_rx=steering_sine(config.pos_ris, config.pos_tx),
        sin_tx=steering_sine(config.pos_tx, config.pos_ris),
    )
    g_los = los_steering_matrix(
        config.n_rx, config.n_ris,
        sin_rx=steering_sine(config.pos_rx, config.pos_ris),
        sin_tx=steering_sine(config.pos_ris, config.pos_rx),
    )
    h0 = gen_rayleigh(config.n_rx, config.n_tx, h_rng)
    f0 = gen_rician(config.n_ris, config.n_tx, config.rician_k, f_los, f_rng)
    g0 = gen_rician(config.n_rx, config.n_ris, config.rician_k, g_los, g_rng)
    return ChannelSet.from_small_scale(h0, f0, g0, link_gains(config, normalize))
