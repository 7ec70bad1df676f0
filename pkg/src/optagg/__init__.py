"""Simulation of all-optical channel aggregation by coherent spectral superposition.

Two low-order data channels on phase-locked carriers are superimposed in a
sinusoidally driven Mach-Zehnder modulator; the RF phase sets the angle of
the vector sum, so BPSK pairs become QPSK or PAM-4 and QPSK pairs QAM-16.
"""

from .aggregator import AggregationPlan, aggregate, calibrate_cw, phase_to_relative, predict_format
from .errors import ConfigError, OptaggError
from .kernels import BACKEND as KERNEL_BACKEND
from .receiver_dsp import RxConfig, compute_evm, compute_q_factor, receive, recover_symbols
from .signal_core import ComplexEnvelope, FilterSpec, apply_filter, spectrum
from .transmitter import FORMATS, PulseShape, TxConfig, build_parent_channels, get_format

__version__ = "0.1.0"

__all__ = [
    "AggregationPlan", "ComplexEnvelope", "ConfigError", "FORMATS", "FilterSpec", "KERNEL_BACKEND",
    "OptaggError", "PulseShape", "RxConfig", "TxConfig", "aggregate", "apply_filter",
    "build_parent_channels", "calibrate_cw", "compute_evm", "compute_q_factor", "get_format",
    "phase_to_relative", "predict_format", "receive", "recover_symbols", "spectrum",
]
