"""Discrete RIS-assisted space shift keying: channels, phase design and BER."""

__version__ = "0.1.0"

from .channel_model import ChannelSet, ConfigError, SystemConfig, realize_channels
from .error_metrics import abep_union_bound, cpep, min_pairwise_delta, pairwise_delta, q_function
from .monte_carlo import BerEstimate, simulate_ber, sweep_snr
from .phase_optimizer import (DiscretePhaseVector, OptimizeOptions, OptimizeResult,
                              exhaustive_oracle, optimize, project_discrete,
                              random_phase_baseline)
from .rng import RngStream
from .ssk_transceiver import effective_channel, encode_bits, ml_detect

__all__ = [
    "BerEstimate", "ChannelSet", "ConfigError", "DiscretePhaseVector", "OptimizeOptions",
    "OptimizeResult", "RngStream", "SystemConfig", "abep_union_bound", "cpep",
    "effective_channel", "encode_bits", "exhaustive_oracle", "min_pairwise_delta",
    "ml_detect", "optimize", "pairwise_delta", "project_discrete", "q_function",
    "random_phase_baseline", "realize_channels", "simulate_ber", "sweep_snr",
]
