"""Parent-channel generation: symbols, pulse shaping and the two-tone carrier pair."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy import special

from .errors import AliasingError, CalibrationError, GridMismatchError
from .modulators import MzmParams, RfDrive, iq_modulate, mzm_modulate
from .signal_core import (
    ComplexEnvelope,
    FilterSpec,
    apply_filter,
    combine,
    raised_cosine_spectrum,
)


@dataclass(frozen=True, eq=False)
class ModFormat:
    name: str
    points: np.ndarray
    bit_labels: tuple

    @property
    def order(self) -> int:
        return self.points.size

    @property
    def bits_per_symbol(self) -> int:
        return len(self.bit_labels[0])

    @property
    def symmetry(self) -> int:
        """Rotational symmetry order M used by blind phase recovery."""
        return 2 if self.name in ("BPSK", "PAM4") else 4

    @property
    def min_distance(self) -> float:
        d = np.abs(self.points[:, None] - self.points[None, :])
        return float(d[d > 0].min())

    def index_of(self, values) -> np.ndarray:
        d = np.abs(np.asarray(values)[:, None] - self.points[None, :])
        return np.argmin(d, axis=1)

    def __eq__(self, other):
        return isinstance(other, ModFormat) and other.name == self.name

    def __hash__(self):
        return hash(self.name)


def _gray2(levels: int) -> list[str]:
    if levels == 2:
        return ["0", "1"]
    return ["00", "01", "11", "10"]


def _build_formats() -> dict:
    s2, s5, s10 = math.sqrt(2), math.sqrt(5), math.sqrt(10)
    fmts = {}
    fmts["BPSK"] = ModFormat("BPSK", np.array([-1.0 + 0j, 1.0 + 0j]), ("0", "1"))
    qpsk, qlab = [], []
    for bi, i in (("0", 1), ("1", -1)):
        for bq, q in (("0", 1), ("1", -1)):
            qpsk.append((i + 1j * q) / s2)
            qlab.append(bi + bq)
    fmts["QPSK"] = ModFormat("QPSK", np.array(qpsk), tuple(qlab))
    levels = [-3, -1, 1, 3]
    g = _gray2(4)
    fmts["PAM4"] = ModFormat("PAM4", np.array(levels, dtype=complex) / s5, tuple(g))
    pts, lab = [], []
    for gi, i in zip(g, levels):
        for gq, q in zip(g, levels):
            pts.append((i + 1j * q) / s10)
            lab.append(gi + gq)
    fmts["QAM16"] = ModFormat("QAM16", np.array(pts), tuple(lab))
    for f in fmts.values():
        f.points.setflags(write=False)
    return fmts


FORMATS = _build_formats()


def get_format(name) -> ModFormat:
    if isinstance(name, ModFormat):
        return name
    key = str(name).upper().replace("-", "")
    try:
        return FORMATS[key]
    except KeyError:
        raise ValueError(f"unknown modulation format {name!r}") from None


@dataclass(frozen=True, eq=False)
class SymbolStream:
    format: ModFormat
    indices: np.ndarray
    rate_baud: float
    seed: int

    @property
    def symbols(self) -> np.ndarray:
        return self.format.points[self.indices]

    @property
    def count(self) -> int:
        return self.indices.size

    def bits(self) -> list[str]:
        return [self.format.bit_labels[i] for i in self.indices]


def symbol_rng(seed: int) -> np.random.Generator:
    # Philox is counter-based: a (seed, position) pair fully fixes the output.
    return np.random.Generator(np.random.Philox(int(seed)))


def generate_symbols(format, count: int, seed: int, rate_baud: float = 10e9) -> SymbolStream:
    fmt = get_format(format)
    if count < 1:
        raise ValueError("count must be >= 1")
    idx = symbol_rng(seed).integers(0, fmt.order, size=count)
    idx.setflags(write=False)
    return SymbolStream(fmt, idx, float(rate_baud), int(seed))


@dataclass(frozen=True)
class PulseShape:
    kind: str = "raised_cosine_nrz"
    rolloff: float = 1.0
    comb_lines: int = 3

    def __post_init__(self):
        if self.kind not in ("raised_cosine_nrz", "sinc_sequence"):
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError("rolloff must lie in [0, 1]")
        if self.comb_lines < 3 or self.comb_lines % 2 == 0:
            raise ValueError("comb_lines must be odd and >= 3")

    def occupied_bandwidth(self, rate_baud: float) -> float:
        if self.kind == "raised_cosine_nrz":
            return (1 + self.rolloff) * rate_baud
        return self.comb_lines * rate_baud

    def power_factor(self) -> float:
        """Mean waveform power per unit symbol energy."""
        if self.kind == "raised_cosine_nrz":
            return 1 - self.rolloff / 4
        return 1 / self.comb_lines

    def response(self, freqs_hz: np.ndarray, rate_baud: float) -> np.ndarray:
        """Pulse spectrum, scaled so the pulse peaks at 1 and is zero at other symbol centres."""
        if self.kind == "raised_cosine_nrz":
            return raised_cosine_spectrum(freqs_hz, 1.0 / rate_baud, self.rolloff)
        # Rectangular N*rate band; the folded spectrum sums to N.
        width = self.comb_lines * rate_baud
        return raised_cosine_spectrum(freqs_hz, 1.0 / width, 0.0) / self.comb_lines


def samples_per_symbol(sample_rate_hz: float, rate_baud: float) -> int:
    sps = sample_rate_hz / rate_baud
    if abs(sps - round(sps)) > 1e-9:
        raise GridMismatchError(
            f"sample rate {sample_rate_hz:g} Hz is not an integer multiple of {rate_baud:g} Bd")
    return int(round(sps))


def shape_pulses(s: SymbolStream, p: PulseShape, sample_rate_hz: float,
                 center_freq_hz: float = 193.4e12) -> ComplexEnvelope:
    """Band-limited waveform carrying symbol k at sample k*sps.

    Shaping happens in the DFT domain on the periodic window, so the spectral
    support is exact: raised cosine occupies (1+rolloff)*rate, the sinc
    sequence a flat N*rate band.
    """
    sps = samples_per_symbol(sample_rate_hz, s.rate_baud)
    bw = p.occupied_bandwidth(s.rate_baud)
    if bw / 2 >= sample_rate_hz / 2:
        raise AliasingError(f"pulse bandwidth {bw:g} Hz exceeds the grid Nyquist band")
    n = s.count * sps
    u = np.zeros(n, dtype=np.complex128)
    u[::sps] = s.symbols
    f = np.fft.fftfreq(n, d=1.0 / sample_rate_hz)
    y = sfft.ifft(sfft.fft(u) * p.response(f, s.rate_baud) * sps)
    return ComplexEnvelope(y, sample_rate_hz, center_freq_hz)


def dirichlet_kernel(t, n_lines: int, delta_f_hz: float):
    """Unmodulated sinc sequence sin(pi*N*df*t) / (N*sin(pi*df*t))."""
    t = np.asarray(t, dtype=float)
    x = np.pi * delta_f_hz * t
    den = n_lines * np.sin(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sin(n_lines * x) / den
    # At the peaks the ratio is (-1)^((N-1)k) by continuity.
    k = np.round(t * delta_f_hz)
    peak = np.abs(t * delta_f_hz - k) < 1e-12
    out = np.where(peak, np.where((k * (n_lines - 1)) % 2 == 0, 1.0, -1.0), out)
    return out


def two_tone_carriers(spacing_hz: float, suppression_db: float, *, sample_rate_hz: float,
                      n_samples: int, mod_index: float = 1.0, phase_rad: float = 0.0,
                      v_pi: float = 1.0, center_freq_hz: float = 193.4e12) -> ComplexEnvelope:
    """Carrier-suppressed single-drive MZM output: two tones at +/- spacing/2.

    The residual centre tone sits ``suppression_db`` below each of the two
    first-order tones.  With the driven arm at null bias the centre field is
    ``(r - J0(m))/2``, so the static arm is trimmed to
    ``r = J0(m) + |J1(m)| * 10**(-suppression_db/20)``; infinite suppression
    cancels the centre exactly.
    """
    drive = RfDrive(spacing_hz / 2, mod_index, phase_rad)
    j0 = special.jv(0, mod_index)
    j1 = abs(special.jv(1, mod_index))
    leak = 0.0 if math.isinf(suppression_db) else j1 * 10 ** (-suppression_db / 20)
    r = j0 + leak
    if not 0.0 < r < 1.0:
        raise CalibrationError(
            f"modulation index {mod_index} cannot reach {suppression_db} dB carrier suppression")
    mzm = MzmParams.with_static_arm(r, v_pi=v_pi, bias_v=v_pi)
    cw = ComplexEnvelope(np.ones(n_samples, dtype=np.complex128), sample_rate_hz, center_freq_hz)
    return mzm_modulate(cw, mzm, drive)


@dataclass(frozen=True)
class TxConfig:
    formats: tuple = ("BPSK", "BPSK")
    rate_baud: float = 10e9
    pulse: PulseShape = field(default_factory=PulseShape)
    n_symbols: int = 4000
    sample_rate_hz: float = 640e9
    carrier_spacing_hz: float = 36e9
    carrier_mod_index: float = 1.0
    carrier_phase_rad: float = 0.0
    suppression_db: float = 20.0
    decorrelation: str = "independent_data"
    seeds: tuple = (1, 2)
    block_residual: bool = True
    center_freq_hz: float = 193.4e12

    def __post_init__(self):
        if self.decorrelation not in ("independent_data", "shared_data"):
            raise ValueError(f"unknown decorrelation mode {self.decorrelation!r}")

    @property
    def n_samples(self) -> int:
        return self.n_symbols * samples_per_symbol(self.sample_rate_hz, self.rate_baud)

    @property
    def carrier_offsets_hz(self) -> tuple[float, float]:
        return (-self.carrier_spacing_hz / 2, self.carrier_spacing_hz / 2)

    @property
    def channel_bandwidth_hz(self) -> float:
        return self.pulse.occupied_bandwidth(self.rate_baud)


@dataclass(frozen=True, eq=False)
class ParentChannels:
    envelope: ComplexEnvelope
    streams: tuple
    carrier_offsets_hz: tuple
    channel_bandwidth_hz: float

    def channel_band(self, i: int) -> FilterSpec:
        return FilterSpec("brickwall_bandpass", self.channel_bandwidth_hz, self.carrier_offsets_hz[i])


def _carrier_slot(carriers: ComplexEnvelope, offset_hz: float, spacing_hz: float) -> ComplexEnvelope:
    return apply_filter(carriers, FilterSpec("brickwall_bandpass", spacing_hz / 2, offset_hz))


def build_parent_channels(cfg: TxConfig, unmodulated: bool = False) -> ParentChannels:
    """Two-tone carriers, waveshaper line selection, then I/Q data modulation.

    Each parent channel is scaled to unit average power.  With
    ``unmodulated`` the data drive is a constant 1, which yields the CW
    calibration carriers through exactly the same chain.
    """
    carriers = two_tone_carriers(
        cfg.carrier_spacing_hz, cfg.suppression_db, sample_rate_hz=cfg.sample_rate_hz,
        n_samples=cfg.n_samples, mod_index=cfg.carrier_mod_index,
        phase_rad=cfg.carrier_phase_rad, center_freq_hz=cfg.center_freq_hz)
    offsets = cfg.carrier_offsets_hz
    tone = abs(carriers.tone_amplitudes()[round(offsets[1] / carriers.bin_spacing_hz)])
    slots = [_carrier_slot(carriers, f, cfg.carrier_spacing_hz) for f in offsets]
    residual = carriers.with_samples(carriers.samples - slots[0].samples - slots[1].samples)

    f1, f2 = (get_format(f) for f in cfg.formats)
    if cfg.decorrelation == "shared_data" and f1 != f2:
        raise ValueError("shared_data decorrelation needs identical parent formats")
    streams = [generate_symbols(f1, cfg.n_symbols, cfg.seeds[0], cfg.rate_baud)]
    if cfg.decorrelation == "shared_data":
        streams.append(streams[0])
    else:
        streams.append(generate_symbols(f2, cfg.n_symbols, cfg.seeds[1], cfg.rate_baud))

    if unmodulated:
        ones = ComplexEnvelope(np.ones(cfg.n_samples), cfg.sample_rate_hz, cfg.center_freq_hz)
        drives = [ones, ones]
        norm = 1.0 / tone
    else:
        drives = [shape_pulses(s, cfg.pulse, cfg.sample_rate_hz, cfg.center_freq_hz) for s in streams]
        norm = 1.0 / (tone * math.sqrt(cfg.pulse.power_factor()))

    out = combine(iq_modulate(slots[0], drives[0]), iq_modulate(slots[1], drives[1]))
    if not cfg.block_residual:
        out = combine(out, iq_modulate(residual, drives[0]))
    return ParentChannels(out.scaled(norm), tuple(streams), offsets, cfg.channel_bandwidth_hz)


def export_symbols_csv(streams, path) -> None:
    """Ground-truth symbols: ``channel, index, re, im, bits``."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["channel", "index", "re", "im", "bits"])
        for ch, s in enumerate(streams, start=1):
            sym = s.symbols
            for i, (v, b) in enumerate(zip(sym, s.bits())):
                w.writerow([ch, i, repr(float(v.real)), repr(float(v.imag)), b])
