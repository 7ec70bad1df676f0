"""Complex-envelope signals and the linear spectral operations built on them.

Every field in the simulator is a uniformly sampled complex envelope referenced
to an absolute optical frequency (``center_freq_hz``).  The sampling window is
periodic, so all filtering is exact circular filtering in the DFT domain.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import AliasingError, GridMismatchError

# Bins below this fraction of the peak bin power count as empty when the
# occupied band of an envelope is estimated.
OCCUPANCY_FLOOR = 1e-24

FILTER_KINDS = ("brickwall_bandpass", "brickwall_lowpass", "raised_cosine", "gaussian_bpf")

# Envelopes are float64 by default; extended (x87 long double) precision is
# carried through every operation when the samples arrive as clongdouble.
EXTENDED = np.clongdouble
PI_EXT = np.longdouble("3.14159265358979323846264338327950288")


def _work_dtype(a) -> type:
    return EXTENDED if np.asarray(a).dtype in (np.clongdouble, np.longdouble) else np.complex128


def unit_phasor(k: int, n: int, dtype=np.complex128) -> np.ndarray:
    """exp(2j*pi*k*i/n) for i in range(n), with the argument reduced exactly."""
    frac = ((k * np.arange(n, dtype=np.int64)) % n)
    if dtype == EXTENDED:
        return np.exp(1j * (2 * PI_EXT * frac.astype(np.longdouble) / n))
    return np.exp(2j * np.pi * frac / n)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ComplexEnvelope:
    """Sampled complex baseband field in units of sqrt(mW)."""

    samples: np.ndarray
    sample_rate_hz: float
    center_freq_hz: float = 193.4e12

    def __post_init__(self):
        s = np.array(self.samples, dtype=_work_dtype(self.samples), copy=True).reshape(-1)
        if s.size < 1:
            raise ValueError("envelope needs at least one sample")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        if not np.all(np.isfinite(s)):
            raise ValueError("envelope samples must be finite")
        object.__setattr__(self, "samples", _readonly(s))
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))
        object.__setattr__(self, "center_freq_hz", float(self.center_freq_hz))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.n / self.sample_rate_hz

    @property
    def bin_spacing_hz(self) -> float:
        return self.sample_rate_hz / self.n

    @property
    def time_s(self) -> np.ndarray:
        return np.arange(self.n) / self.sample_rate_hz

    @property
    def freqs_hz(self) -> np.ndarray:
        """Offset frequency of every DFT bin (numpy ordering)."""
        return np.fft.fftfreq(self.n, d=1.0 / self.sample_rate_hz)

    @property
    def power_mw(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))

    def with_samples(self, samples) -> "ComplexEnvelope":
        return ComplexEnvelope(samples, self.sample_rate_hz, self.center_freq_hz)

    def scaled(self, factor: complex) -> "ComplexEnvelope":
        return self.with_samples(self.samples * factor)

    def same_grid(self, other: "ComplexEnvelope") -> bool:
        return (
            self.n == other.n
            and self.sample_rate_hz == other.sample_rate_hz
            and self.center_freq_hz == other.center_freq_hz
        )

    @property
    def extended(self) -> bool:
        return self.samples.dtype == EXTENDED

    def tone_amplitudes(self) -> np.ndarray:
        """DFT normalised so a CW tone of amplitude a shows up as a in its bin."""
        return sfft.fft(self.samples) / self.n

    def occupied_band_hz(self) -> tuple[float, float]:
        """Lowest and highest offset frequency carrying non-negligible power."""
        p = np.abs(sfft.fft(self.samples).astype(np.complex128)) ** 2
        peak = p.max()
        if peak == 0.0:
            return (0.0, 0.0)
        f = self.freqs_hz[p > OCCUPANCY_FLOOR * peak]
        return (float(f.min()), float(f.max()))

    @classmethod
    def zeros(cls, n: int, sample_rate_hz: float, center_freq_hz: float = 193.4e12,
              dtype=np.complex128):
        return cls(np.zeros(n, dtype=dtype), sample_rate_hz, center_freq_hz)

    @classmethod
    def tone(cls, offset_hz: float, n: int, sample_rate_hz: float,
             amplitude: complex = 1.0, center_freq_hz: float = 193.4e12,
             dtype=np.complex128):
        """CW tone at ``offset_hz``; the offset must sit on a DFT bin."""
        k = _bin_index(offset_hz, n, sample_rate_hz)
        return cls(amplitude * unit_phasor(k, n, dtype), sample_rate_hz, center_freq_hz)


@dataclass(frozen=True, eq=False)
class SpectrumView:
    """Unitary DFT of an envelope: ``sum |bins|^2 == sum |samples|^2``."""

    bins: np.ndarray
    bin_spacing_hz: float
    center_freq_hz: float

    @property
    def n(self) -> int:
        return self.bins.size

    @property
    def offsets_hz(self) -> np.ndarray:
        return np.fft.fftfreq(self.n, d=1.0 / (self.n * self.bin_spacing_hz))

    @property
    def bin_power_mw(self) -> np.ndarray:
        """Average power carried by each bin; sums to the envelope's mean power."""
        return np.abs(self.bins) ** 2 / self.n

    def bin_at(self, offset_hz: float) -> complex:
        k = int(round(offset_hz / self.bin_spacing_hz)) % self.n
        return complex(self.bins[k])

    def to_envelope(self) -> ComplexEnvelope:
        return ComplexEnvelope(sfft.ifft(self.bins, norm="ortho"),
                               self.n * self.bin_spacing_hz, self.center_freq_hz)


def spectrum(x: ComplexEnvelope) -> SpectrumView:
    return SpectrumView(_readonly(sfft.fft(x.samples, norm="ortho")),
                        x.bin_spacing_hz, x.center_freq_hz)


@dataclass(frozen=True)
class FilterSpec:
    """Optical or electrical filter applied in the DFT domain.

    ``bandwidth_hz`` is always the full two-sided passband width.  For
    ``raised_cosine`` it is the -6 dB width and the response extends to
    ``(1 + rolloff) * bandwidth_hz / 2`` from the centre; for ``gaussian_bpf``
    it is the 3 dB power bandwidth.  ``brickwall_lowpass`` ignores
    ``center_offset_hz``.
    """

    kind: str
    bandwidth_hz: float
    center_offset_hz: float = 0.0
    rolloff: float = 0.0

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if not self.bandwidth_hz > 0:
            raise ValueError("bandwidth_hz must be positive")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError("rolloff must lie in [0, 1]")

    def response(self, freqs_hz: np.ndarray) -> np.ndarray:
        center = 0.0 if self.kind == "brickwall_lowpass" else self.center_offset_hz
        d = np.abs(freqs_hz - center)
        half = self.bandwidth_hz / 2
        if self.kind in ("brickwall_bandpass", "brickwall_lowpass"):
            # Relative slack keeps band edges that land exactly on a bin inside.
            return (d <= half * (1 + 1e-12)).astype(float)
        if self.kind == "raised_cosine":
            return raised_cosine_spectrum(d, 1.0 / self.bandwidth_hz, self.rolloff)
        return np.exp(-0.5 * math.log(2.0) * (d / half) ** 2)


def raised_cosine_spectrum(f: np.ndarray, symbol_period_s: float, rolloff: float) -> np.ndarray:
    """Raised-cosine amplitude response normalised to 1 in the passband.

    The value at the Nyquist edge is 1/2 for every roll-off, including zero, so
    the folded spectrum is exactly flat on a discrete grid.
    """
    f = np.abs(np.asarray(f, dtype=float))
    T = symbol_period_s
    f1 = (1 - rolloff) / (2 * T)
    f2 = (1 + rolloff) / (2 * T)
    h = np.zeros_like(f)
    tol = 1e-9 / T
    if rolloff == 0.0:
        h[f < f1 - tol] = 1.0
        h[np.abs(f - f1) <= tol] = 0.5
        return h
    h[f <= f1] = 1.0
    band = (f > f1) & (f < f2)
    h[band] = 0.5 * (1 + np.cos(np.pi * T / rolloff * (f[band] - f1)))
    return h


def _bin_index(offset_hz: float, n: int, sample_rate_hz: float) -> int:
    k = offset_hz * n / sample_rate_hz
    kr = round(k)
    if abs(k - kr) > 1e-6:
        raise GridMismatchError(
            f"offset {offset_hz:g} Hz is not a multiple of the bin spacing "
            f"{sample_rate_hz / n:g} Hz; the periodic window would be discontinuous")
    return int(kr)


def check_grid(a: ComplexEnvelope, b: ComplexEnvelope) -> None:
    if not a.same_grid(b):
        raise GridMismatchError(
            f"grid mismatch: (n={a.n}, fs={a.sample_rate_hz:g}, fc={a.center_freq_hz:g}) vs "
            f"(n={b.n}, fs={b.sample_rate_hz:g}, fc={b.center_freq_hz:g})")


def combine(a: ComplexEnvelope, b: ComplexEnvelope) -> ComplexEnvelope:
    check_grid(a, b)
    return a.with_samples(a.samples + b.samples)


def frequency_shift(x: ComplexEnvelope, delta_hz: float) -> ComplexEnvelope:
    """Move the spectrum by ``delta_hz`` (a whole number of bins)."""
    if delta_hz == 0:
        return x.with_samples(x.samples)
    k = _bin_index(delta_hz, x.n, x.sample_rate_hz)
    lo, hi = x.occupied_band_hz()
    nyq = x.sample_rate_hz / 2
    if max(abs(lo + delta_hz), abs(hi + delta_hz)) >= nyq:
        raise AliasingError(
            f"shift by {delta_hz:g} Hz moves occupied band [{lo:g}, {hi:g}] Hz past Nyquist {nyq:g} Hz")
    return x.with_samples(x.samples * unit_phasor(k, x.n, x.samples.dtype.type))


def apply_filter(x: ComplexEnvelope, f: FilterSpec) -> ComplexEnvelope:
    if f.bandwidth_hz > x.sample_rate_hz:
        raise AliasingError(
            f"filter bandwidth {f.bandwidth_hz:g} Hz exceeds sample rate {x.sample_rate_hz:g} Hz")
    X = sfft.fft(x.samples)
    X *= f.response(x.freqs_hz)
    return x.with_samples(sfft.ifft(X))


def delay(x: ComplexEnvelope, tau_s: float, carrier_phase_tracking: bool = False) -> ComplexEnvelope:
    """Circular delay by ``tau_s``.

    With ``carrier_phase_tracking`` the optical carrier phase rotates by
    ``-2*pi*center_freq_hz*tau_s`` as it would for a real propagation delay.
    """
    if tau_s == 0:
        return x.with_samples(x.samples)
    X = sfft.fft(x.samples)
    X *= np.exp(-2j * np.pi * x.freqs_hz * tau_s)
    y = sfft.ifft(X)
    if carrier_phase_tracking:
        y *= np.exp(-2j * np.pi * math.fmod(x.center_freq_hz * tau_s, 1.0))
    return x.with_samples(y)


def resample(x: ComplexEnvelope, new_rate_hz: float) -> ComplexEnvelope:
    """Exact band-limited resampling of the periodic window.

    The new rate must keep an integer number of samples over the window and
    the occupied band must fit below the new Nyquist frequency.
    """
    m = x.duration_s * new_rate_hz
    mr = int(round(m))
    if abs(m - mr) > 1e-6 or mr < 1:
        raise GridMismatchError(f"rate {new_rate_hz:g} Hz gives a non-integer sample count {m:g}")
    if mr == x.n:
        return x.with_samples(x.samples)
    lo, hi = x.occupied_band_hz()
    if max(abs(lo), abs(hi)) >= new_rate_hz / 2:
        raise AliasingError(f"occupied band [{lo:g}, {hi:g}] Hz does not fit rate {new_rate_hz:g} Hz")
    X = sfft.fft(x.samples)
    f_old = x.freqs_hz
    Y = np.zeros(mr, dtype=X.dtype)
    k_new = np.round(f_old / (new_rate_hz / mr)).astype(np.int64)
    keep = np.abs(f_old) < new_rate_hz / 2
    Y[k_new[keep] % mr] = X[keep]
    return ComplexEnvelope(sfft.ifft(Y) * (mr / x.n), new_rate_hz, x.center_freq_hz)


def _fmt(v: float) -> str:
    return repr(float(v))


def export_spectrum_csv(x: ComplexEnvelope, path) -> None:
    """Write ``offset_hz, power_dbm, phase_rad`` sorted by frequency."""
    sv = spectrum(x)
    f = sv.offsets_hz
    order = np.argsort(f, kind="stable")
    p = sv.bin_power_mw.astype(float)
    dbm = 10 * np.log10(np.maximum(p, 1e-30))
    ph = np.angle(sv.bins.astype(np.complex128))
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["offset_hz", "power_dbm", "phase_rad"])
        for k in order:
            w.writerow([_fmt(f[k]), _fmt(dbm[k]), _fmt(ph[k])])


def export_envelope_csv(x: ComplexEnvelope, path) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "re", "im"])
        for i, v in enumerate(x.samples):
            w.writerow([i, _fmt(v.real), _fmt(v.imag)])


def read_envelope_csv(path, sample_rate_hz: float, center_freq_hz: float = 193.4e12) -> ComplexEnvelope:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return ComplexEnvelope(data[:, 1] + 1j * data[:, 2], sample_rate_hz, center_freq_hz)
