"""Waveshaper weighting, dispersion-module decorrelation and EDFA/ASE noise."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.fft as sfft
from scipy.constants import c as SPEED_OF_LIGHT

from .errors import CalibrationError
from .signal_core import ComplexEnvelope, FilterSpec, apply_filter

# 3 nm around 1550 nm.
DEFAULT_ASE_BPF_HZ = 375e9


@dataclass(frozen=True)
class WeightPlan:
    """Scale every bin with ``lo <= offset <= hi`` by ``alpha`` (amplitude)."""

    alpha: float
    applied_band_hz: tuple

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        lo, hi = self.applied_band_hz
        if not lo < hi:
            raise ValueError("applied_band_hz must be (lo, hi) with lo < hi")


def apply_weight(x: ComplexEnvelope, w: WeightPlan) -> ComplexEnvelope:
    if w.alpha == 1:
        return x.with_samples(x.samples)
    lo, hi = w.applied_band_hz
    f = x.freqs_hz
    gain = np.where((f >= lo) & (f <= hi), w.alpha, 1.0)
    return x.with_samples(sfft.ifft(sfft.fft(x.samples) * gain))


@dataclass(frozen=True)
class DispersionSpec:
    d_ps_per_nm: float
    ref_wavelength_nm: float = 1550.0

    def __post_init__(self):
        if abs(self.d_ps_per_nm) > 10000:
            raise ValueError("|d_ps_per_nm| must not exceed 10000")

    @property
    def beta_s2(self) -> float:
        """Curvature of the spectral phase: H(f) = exp(i*pi*beta*f^2)."""
        d_si = self.d_ps_per_nm * 1e-3  # ps/nm -> s/m
        lam = self.ref_wavelength_nm * 1e-9
        return d_si * lam**2 / SPEED_OF_LIGHT


def group_delay_difference(d: DispersionSpec, delta_f_hz: float) -> float:
    """Arrival time of a channel relative to one ``delta_f_hz`` higher in frequency.

    Equals ``D * lambda^2 * delta_f / c``; negative D (normal dispersion)
    makes the lower-frequency channel arrive first.
    """
    return d.beta_s2 * delta_f_hz


def apply_dispersion(x: ComplexEnvelope, d: DispersionSpec) -> ComplexEnvelope:
    """All-pass quadratic spectral phase; constant and linear terms are dropped."""
    if d.d_ps_per_nm == 0:
        return x.with_samples(x.samples)
    f = x.freqs_hz
    h = np.exp(1j * np.pi * d.beta_s2 * f**2)
    return x.with_samples(sfft.ifft(sfft.fft(x.samples) * h))


@dataclass(frozen=True)
class AseNoiseSpec:
    """Band-limited complex white Gaussian noise.

    Either ``noise_psd`` (amplitude spectral density, sqrt(mW/Hz)) or
    ``target_parent_evm_pct`` must be given.  The target mode needs a
    :class:`NoiseReference` describing the receiver it is calibrated for.
    """

    target_parent_evm_pct: Optional[float] = None
    noise_psd: Optional[float] = None
    bpf_bandwidth_hz: float = DEFAULT_ASE_BPF_HZ
    seed: int = 0

    def __post_init__(self):
        if (self.target_parent_evm_pct is None) == (self.noise_psd is None):
            raise ValueError("set exactly one of target_parent_evm_pct / noise_psd")
        if self.target_parent_evm_pct is not None and not self.target_parent_evm_pct > 0:
            raise ValueError("target_parent_evm_pct must be positive")
        if self.noise_psd is not None and self.noise_psd < 0:
            raise ValueError("noise_psd must be non-negative")
        if not self.bpf_bandwidth_hz > 0:
            raise ValueError("bpf_bandwidth_hz must be positive")


@dataclass(frozen=True)
class NoiseReference:
    """What the calibration assumes about the reference receiver.

    ``symbol_energy`` is the mean |sample|^2 of the clean parent channel at
    the symbol centres; ``rx_bandwidth_hz`` the full width of the receiver's
    brickwall noise filter; ``floor_evm_pct`` the noiseless EVM of the chain.
    """

    symbol_energy: float
    rx_bandwidth_hz: float
    floor_evm_pct: float = 0.0


def calibrated_psd(target_evm_pct: float, ref: NoiseReference) -> float:
    """Noise amplitude density giving ``target_evm_pct`` after power normalisation.

    The receiver normalises to unit mean power, so with in-band noise
    variance s2 the measured EVM is sqrt(s2 / (Es + s2)).  Solving for s2 and
    dividing by the receiver's noise bandwidth gives the two-sided PSD.
    """
    e = target_evm_pct / 100
    floor = ref.floor_evm_pct / 100
    if not e < 1:
        raise CalibrationError(f"target EVM {target_evm_pct}% is not reachable (must be < 100%)")
    if e <= floor:
        raise CalibrationError(
            f"target EVM {target_evm_pct}% is below the noiseless floor {ref.floor_evm_pct:.4f}%")
    e2 = e**2 - floor**2
    s2 = ref.symbol_energy * e2 / (1 - e2)
    return math.sqrt(s2 / ref.rx_bandwidth_hz)


def noise_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def ase_noise(x: ComplexEnvelope, psd: float, bpf_bandwidth_hz: float, seed: int) -> np.ndarray:
    rng = noise_rng(seed)
    sigma = psd * math.sqrt(x.sample_rate_hz / 2)
    w = sigma * (rng.standard_normal(x.n) + 1j * rng.standard_normal(x.n))
    bpf = FilterSpec("brickwall_bandpass", min(bpf_bandwidth_hz, x.sample_rate_hz))
    return apply_filter(x.with_samples(w), bpf).samples


def apply_ase(x: ComplexEnvelope, n: AseNoiseSpec, reference: Optional[NoiseReference] = None) -> ComplexEnvelope:
    if n.bpf_bandwidth_hz > x.sample_rate_hz:
        raise CalibrationError(
            f"ASE filter {n.bpf_bandwidth_hz:g} Hz is wider than the {x.sample_rate_hz:g} Hz grid")
    if n.noise_psd is not None:
        psd = n.noise_psd
    else:
        if reference is None:
            raise CalibrationError("target_parent_evm_pct mode needs a NoiseReference")
        if reference.rx_bandwidth_hz > n.bpf_bandwidth_hz:
            raise CalibrationError("receiver noise bandwidth exceeds the ASE filter bandwidth")
        psd = calibrated_psd(n.target_parent_evm_pct, reference)
    if psd == 0:
        return x.with_samples(x.samples)
    return x.with_samples(x.samples + ase_noise(x, psd, n.bpf_bandwidth_hz, n.seed))


def measure_relative_delay(a: ComplexEnvelope, b: ComplexEnvelope) -> float:
    """Delay of ``b`` relative to ``a`` from the circular cross-correlation peak.

    Resolution is one sample; positive means ``b`` arrives later.
    """
    if not a.same_grid(b):
        raise ValueError("envelopes must share a grid")
    xc = sfft.ifft(np.conj(sfft.fft(a.samples)) * sfft.fft(b.samples))
    k = int(np.argmax(np.abs(xc)))
    if k > a.n // 2:
        k -= a.n
    return k / a.sample_rate_hz
