"""Coherent reception, symbol recovery and constellation metrology.

Conventions used throughout:

* EVM is decision-directed and normalised by the RMS power of the decided
  reference points: ``sqrt(mean|r - p(r)|^2 / mean|p(r)|^2) * 100``.
* Q is the smallest adjacent-cluster ratio ``|mu_a - mu_b| / (sigma_a + sigma_b)``
  with both clusters projected on the line joining their centres.  A
  noiseless constellation gives ``math.inf``.
* Recovered symbols are scaled to unit mean power before decisions.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InsufficientStatisticsError, ReceiverConfigError
from .kernels import eye_histogram, nearest_points, phase_search_mse
from .signal_core import ComplexEnvelope, FilterSpec, apply_filter, frequency_shift, resample
from .transmitter import ModFormat, PulseShape, get_format, samples_per_symbol

RX_MODES = ("homodyne_ideal", "heterodyne")
MIN_BLOCKS = 10
TIMING_POWER_FRACTION = 0.1
NOISELESS_SPREAD = 1e-9


@dataclass(frozen=True)
class RxConfig:
    """Receiver front end.

    ``channel_offset_hz`` is where the wanted channel sits on the grid; the
    optical band-select and the electrical lowpass both have full width
    ``lowpass_bw_hz``.  With ``rate_baud`` set the output is resampled to
    ``samples_per_symbol_out`` samples per symbol.
    """

    lowpass_bw_hz: float
    mode: str = "homodyne_ideal"
    lo_offset_hz: float = 0.0
    samples_per_symbol_out: int = 16
    channel_offset_hz: float = 0.0
    rate_baud: Optional[float] = None

    def __post_init__(self):
        if self.mode not in RX_MODES:
            raise ReceiverConfigError(f"unknown receiver mode {self.mode!r}")
        if not self.lowpass_bw_hz > 0:
            raise ReceiverConfigError("lowpass_bw_hz must be positive")
        if self.samples_per_symbol_out < 1:
            raise ReceiverConfigError("samples_per_symbol_out must be >= 1")
        if self.mode == "heterodyne":
            if self.lo_offset_hz == 0:
                raise ReceiverConfigError("heterodyne mode needs a non-zero lo_offset_hz")
            if abs(self.lo_offset_hz) < self.lowpass_bw_hz / 2:
                raise ReceiverConfigError(
                    f"IF {abs(self.lo_offset_hz):g} Hz is below half the {self.lowpass_bw_hz:g} Hz "
                    f"receive band; the image would overlap the signal")


def receive(x: ComplexEnvelope, rx: RxConfig) -> ComplexEnvelope:
    """Complex baseband of the selected channel."""
    if rx.lowpass_bw_hz > x.sample_rate_hz:
        raise ReceiverConfigError(
            f"receive band {rx.lowpass_bw_hz:g} Hz is wider than the {x.sample_rate_hz:g} Hz grid")
    x = x.with_samples(np.asarray(x.samples, dtype=np.complex128))
    sel = apply_filter(x, FilterSpec("brickwall_bandpass", rx.lowpass_bw_hz, rx.channel_offset_hz))
    lpf = FilterSpec("brickwall_lowpass", rx.lowpass_bw_hz)
    if rx.mode == "homodyne_ideal":
        bb = frequency_shift(sel, -rx.channel_offset_hz)
    else:
        f_if = rx.lo_offset_hz
        if 2 * abs(f_if) + rx.lowpass_bw_hz / 2 >= x.sample_rate_hz / 2:
            raise ReceiverConfigError(
                f"IF {f_if:g} Hz leaves no room for the downconverted image on a "
                f"{x.sample_rate_hz:g} Hz grid")
        at_if = frequency_shift(sel, f_if - rx.channel_offset_hz)
        # Balanced detection keeps only the signal-LO beat: 2*Re(E * LO^*).
        photocurrent = at_if.with_samples(2.0 * at_if.samples.real)
        # The image lands at -2*IF and the lowpass removes it; unit gain remains.
        bb = frequency_shift(photocurrent, -f_if)
    out = apply_filter(bb, lpf)
    if rx.rate_baud is not None:
        out = resample(out, rx.rate_baud * rx.samples_per_symbol_out)
    return out


def _power_order(fmt: ModFormat) -> int:
    return 2 if fmt.symmetry == 2 else 4


def _normalize(y: np.ndarray) -> np.ndarray:
    p = float(np.mean(np.abs(y) ** 2))
    return y / math.sqrt(p) if p > 0 else y


def m_power_phase(y: np.ndarray, fmt: ModFormat) -> float:
    """Blind carrier phase, defined up to the format's rotational symmetry."""
    m = _power_order(fmt)
    ref = np.mean(fmt.points**m)
    return float((np.angle(np.mean(y**m)) - np.angle(ref)) / m)


def estimate_phase(y: np.ndarray, fmt: ModFormat, grid: int = 256) -> float:
    """M-power estimate, polished by a decision-directed grid and bounded search."""
    theta0 = m_power_phase(y, fmt)
    span = 2 * math.pi / fmt.symmetry
    trial = theta0 + np.linspace(-span / 2, span / 2, grid, endpoint=False)
    mse = phase_search_mse(y, fmt.points, -trial)
    best = float(trial[int(np.argmin(mse))])
    step = span / grid

    def cost(t):
        return float(phase_search_mse(y, fmt.points, np.array([-t]))[0])

    res = minimize_scalar(cost, bounds=(best - step, best + step), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x) if res.fun <= cost(best) else best


def _blind_evm(y: np.ndarray, fmt: ModFormat) -> float:
    z = _normalize(y) * np.exp(-1j * m_power_phase(y, fmt))
    idx, err2 = nearest_points(z, fmt.points)
    return float(np.sqrt(err2.mean() / np.mean(np.abs(fmt.points[idx]) ** 2)))


def compute_evm(recovered, reference, n_blocks: int = MIN_BLOCKS):
    """Decision-directed EVM in percent: (mean over blocks, std over blocks)."""
    fmt = get_format(reference)
    r = np.asarray(recovered, dtype=np.complex128)
    idx, err2 = nearest_points(r, fmt.points)
    return _block_evm(err2, np.abs(fmt.points[idx]) ** 2, n_blocks)


def compute_evm_data_aided(recovered, reference_points, n_blocks: int = MIN_BLOCKS):
    """EVM against the transmitted points instead of the decisions."""
    r = np.asarray(recovered, dtype=np.complex128)
    p = np.asarray(reference_points, dtype=np.complex128)
    return _block_evm(np.abs(r - p) ** 2, np.abs(p) ** 2, n_blocks)


def _block_evm(err2, ref2, n_blocks):
    if n_blocks < 1 or err2.size < n_blocks:
        raise InsufficientStatisticsError(f"{err2.size} symbols cannot fill {n_blocks} EVM blocks")
    edges = np.linspace(0, err2.size, n_blocks + 1).astype(int)
    vals = np.array([math.sqrt(err2[a:b].sum() / ref2[a:b].sum()) * 100
                     for a, b in zip(edges[:-1], edges[1:])])
    return float(vals.mean()), float(vals.std(ddof=1)) if n_blocks > 1 else 0.0


def adjacent_pairs(fmt: ModFormat):
    d = np.abs(fmt.points[:, None] - fmt.points[None, :])
    dmin = fmt.min_distance
    n = fmt.order
    return [(a, b) for a in range(n) for b in range(a + 1, n) if d[a, b] <= dmin * (1 + 1e-6)]


def compute_q_factor(recovered, decisions, format) -> float:
    """Minimum adjacent-cluster Q (linear).

    Clusters whose spread is at rounding level (below 1e-9 of their
    separation) count as noiseless and give ``inf``.
    """
    fmt = get_format(format)
    r = np.asarray(recovered, dtype=np.complex128)
    dec = np.asarray(decisions)
    q = math.inf
    for a, b in adjacent_pairs(fmt):
        ra, rb = r[dec == a], r[dec == b]
        if ra.size < 2 or rb.size < 2:
            raise InsufficientStatisticsError(
                f"cluster {a if ra.size < 2 else b} of {fmt.name} has fewer than 2 samples")
        u = fmt.points[b] - fmt.points[a]
        u /= abs(u)
        pa = (ra * np.conj(u)).real
        pb = (rb * np.conj(u)).real
        s = pa.std() + pb.std()
        gap = abs(pb.mean() - pa.mean())
        q = min(q, gap / s if s > NOISELESS_SPREAD * gap else math.inf)
    return q


def q_to_db(q: float) -> float:
    return 20 * math.log10(q) if q > 0 else -math.inf


@dataclass(frozen=True, eq=False)
class ConstellationReport:
    format: str
    recovered: np.ndarray
    decisions: np.ndarray
    evm_avg_pct: float
    evm_std_pct: float
    q_factor: float
    ser: Optional[float]
    cluster_means: np.ndarray
    cluster_sigmas: np.ndarray
    timing_phase: int = 0
    carrier_phase_rad: float = 0.0
    rotation_ambiguous: bool = False
    symbol_lag: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def q_factor_db(self) -> float:
        return q_to_db(self.q_factor)

    def metrics(self) -> dict:
        return {
            "format": self.format,
            "n_symbols": int(self.recovered.size),
            "evm_avg_pct": self.evm_avg_pct,
            "evm_std_pct": self.evm_std_pct,
            "q_factor": _json_num(self.q_factor),
            "q_factor_db": _json_num(self.q_factor_db),
            "ser": self.ser,
            "timing_phase": self.timing_phase,
            "carrier_phase_rad": self.carrier_phase_rad,
            "rotation_ambiguous": self.rotation_ambiguous,
            "symbol_lag": self.symbol_lag,
            "cluster_means": [[float(c.real), float(c.imag)] for c in self.cluster_means],
            "cluster_sigmas": [_json_num(float(s)) for s in self.cluster_sigmas],
            **self.extra,
        }


def _json_num(v: float):
    # JSON has no infinity; the noiseless Q is written as the string "inf".
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def _cluster_stats(r, dec, fmt):
    means = np.full(fmt.order, np.nan + 0j)
    sig = np.full(fmt.order, np.nan)
    for k in range(fmt.order):
        rk = r[dec == k]
        if rk.size:
            means[k] = rk.mean()
            sig[k] = math.sqrt(np.mean(np.abs(rk - means[k]) ** 2) / 2)
    return means, sig


def _rotation_perm(fmt: ModFormat, k: int) -> np.ndarray:
    """Point index reached by rotating each point by k * 2*pi/symmetry."""
    rot = fmt.points * np.exp(2j * np.pi * k / fmt.symmetry)
    return nearest_points(rot, fmt.points)[0]


def recover_symbols(x: ComplexEnvelope, format, rate_baud: float, shape: PulseShape,
                    reference=None, n_blocks: int = MIN_BLOCKS, max_lag: int = 2) -> ConstellationReport:
    """Matched-equivalent filter, timing search, blind phase, normalisation, decisions.

    ``reference`` holds the transmitted point indices of ``format``.  When
    given it resolves the rotational ambiguity left by the blind phase
    estimate (and a circular lag up to ``max_lag`` symbols) and the SER is
    reported; otherwise ``rotation_ambiguous`` is set and ``ser`` is None.
    """
    fmt = get_format(format)
    sps = samples_per_symbol(x.sample_rate_hz, rate_baud)
    bw = shape.occupied_bandwidth(rate_baud)
    if bw < x.sample_rate_hz:
        x = apply_filter(x, FilterSpec("brickwall_lowpass", bw))
    s = np.asarray(x.samples, dtype=np.complex128)
    if s.size % sps:
        raise ReceiverConfigError("window does not hold a whole number of symbols")

    # Near-empty phases (zero crossings of a sinc sequence) normalise to noise
    # that can look deceptively clean, so only phases carrying power compete.
    powers = np.array([np.mean(np.abs(s[p::sps]) ** 2) for p in range(sps)])
    live = np.flatnonzero(powers >= TIMING_POWER_FRACTION * powers.max())
    evms = [_blind_evm(s[p::sps], fmt) for p in live]
    t_phase = int(live[int(np.argmin(evms))])
    y = _normalize(s[t_phase::sps])
    theta = estimate_phase(y, fmt)
    r = _normalize(y * np.exp(-1j * theta))
    dec, _ = nearest_points(r, fmt.points)

    ambiguous, ser, lag = True, None, 0
    if reference is not None:
        ref = np.asarray(reference, dtype=np.int64)
        if ref.size != r.size:
            raise ReceiverConfigError(f"reference has {ref.size} symbols, signal has {r.size}")
        best = None
        for lg in range(-max_lag, max_lag + 1):
            rr = np.roll(ref, lg)
            for k in range(fmt.symmetry):
                errs = int(np.count_nonzero(_rotation_perm(fmt, k)[rr] != dec))
                if best is None or errs < best[0]:
                    best = (errs, k, lg)
        errs, k, lag = best
        theta += 2 * np.pi * k / fmt.symmetry
        r = r * np.exp(-2j * np.pi * k / fmt.symmetry)
        dec, _ = nearest_points(r, fmt.points)
        ser = float(np.count_nonzero(dec != np.roll(ref, lag)) / ref.size)
        ambiguous = False

    evm_avg, evm_std = compute_evm(r, fmt, n_blocks)
    means, sig = _cluster_stats(r, dec, fmt)
    try:
        q = compute_q_factor(r, dec, fmt)
    except InsufficientStatisticsError:
        q = math.nan
    return ConstellationReport(fmt.name, r, dec, evm_avg, evm_std, q, ser, means, sig,
                               t_phase, float(theta), ambiguous, lag)


@dataclass(frozen=True, eq=False)
class EyeDiagram:
    hist_i: np.ndarray
    hist_q: np.ndarray
    lo: float
    hi: float
    samples_per_symbol: int
    span_symbols: int


def eye_diagram(x: ComplexEnvelope, rate_baud: float, span_symbols: int = 2, n_amp: int = 64,
                lo: Optional[float] = None, hi: Optional[float] = None) -> EyeDiagram:
    """Fold I and Q modulo ``span_symbols`` symbol periods into 2-D histograms.

    Rows are time bins within the span, columns amplitude bins over [lo, hi].
    """
    sps = samples_per_symbol(x.sample_rate_hz, rate_baud)
    if sps < 8:
        raise ReceiverConfigError(f"eye diagram needs >= 8 samples per symbol, got {sps}")
    if span_symbols < 1:
        raise ValueError("span_symbols must be >= 1")
    s = np.asarray(x.samples, dtype=np.complex128)
    if lo is None or hi is None:
        peak = float(max(np.abs(s.real).max(), np.abs(s.imag).max()))
        peak = 1.0 if peak == 0 else 1.05 * peak
        lo, hi = -peak, peak
    n_t = sps * span_symbols
    t = np.arange(s.size) % n_t
    hi_ = eye_histogram(s.real, t, n_t, lo, hi, n_amp)
    hq = eye_histogram(s.imag, t, n_t, lo, hi, n_amp)
    return EyeDiagram(hi_, hq, float(lo), float(hi), sps, span_symbols)


def export_eye_csv(eye: EyeDiagram, path) -> None:
    """``component, time_bin, amp_lo, amp_hi, count`` for every non-empty cell."""
    n_amp = eye.hist_i.shape[1]
    edges = np.linspace(eye.lo, eye.hi, n_amp + 1)
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["component", "time_bin", "amp_lo", "amp_hi", "count"])
        for name, h in (("I", eye.hist_i), ("Q", eye.hist_q)):
            for t, a in zip(*np.nonzero(h)):
                w.writerow([name, int(t), repr(float(edges[a])), repr(float(edges[a + 1])), int(h[t, a])])


def export_report(report: ConstellationReport, json_path, csv_path) -> None:
    with open(json_path, "w", encoding="ascii") as fh:
        json.dump(report.metrics(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(csv_path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "re", "im", "decision"])
        for i, (v, d) in enumerate(zip(report.recovered, report.decisions)):
            w.writerow([i, repr(float(v.real)), repr(float(v.imag)), int(d)])
