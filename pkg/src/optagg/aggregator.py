"""Coherent spectral superposition of two parent channels in one MZM.

Channel 1 sits at ``carrier1_offset_hz`` and channel 2 at
``carrier2_offset_hz = carrier1_offset_hz + 2*f_m``.  The +1 sideband of
channel 1 and the -1 sideband of channel 2 land on the midpoint, where the
field is::

    1/2 * J1(m) * [ch1 * exp(i*(phi + b)) - ch2 * exp(i*(-phi + b))]

so the optical phase of channel 1 relative to channel 2 is ``2*phi + theta0``.
``theta0`` holds the pi from J_{-1} = -J_1 plus whatever carrier phases the
parents bring along; :func:`calibrate_cw` measures it.  Carriers taken from a
null-biased two-tone MZM carry the same sign flip, so for them the two pi
terms cancel and theta0 = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import GeometryError
from .modulators import MzmParams, RfDrive, mzm_modulate
from .signal_core import ComplexEnvelope, FilterSpec, apply_filter
from .transmitter import ModFormat, get_format

# Two aggregate points closer than this are treated as coincident.
COINCIDENCE_TOL = 1e-9


@dataclass(frozen=True)
class AggregationPlan:
    carrier1_offset_hz: float
    carrier2_offset_hz: float
    rf: RfDrive
    select_band: FilterSpec
    mzm: MzmParams = field(default_factory=MzmParams)
    alpha: float = 1.0
    phi_rad: float = 0.0
    theta0_rad: Optional[float] = None

    @property
    def superposition_offset_hz(self) -> float:
        return 0.5 * (self.carrier1_offset_hz + self.carrier2_offset_hz)

    def with_phi(self, phi_rad: float) -> "AggregationPlan":
        return replace(self, phi_rad=float(phi_rad))

    def check_geometry(self) -> None:
        f_m = self.rf.freq_hz
        hsb = self.carrier1_offset_hz + f_m
        lsb = self.carrier2_offset_hz - f_m
        if abs(hsb - lsb) > 1e-6 * f_m:
            raise GeometryError(
                f"HSB of carrier 1 ({hsb:g} Hz) and LSB of carrier 2 ({lsb:g} Hz) do not overlap; "
                f"carrier spacing must equal 2*f_m = {2 * f_m:g} Hz")
        band = self.select_band
        center = 0.0 if band.kind == "brickwall_lowpass" else band.center_offset_hz
        if abs(center - hsb) > band.bandwidth_hz / 2:
            raise GeometryError(
                f"select band centred at {center:g} Hz misses the superposition at {hsb:g} Hz")


def default_select_band(carrier1_offset_hz: float, carrier2_offset_hz: float,
                        channel_bandwidth_hz: float) -> FilterSpec:
    return FilterSpec("brickwall_bandpass", channel_bandwidth_hz,
                      0.5 * (carrier1_offset_hz + carrier2_offset_hz))


def aggregate(x: ComplexEnvelope, plan: AggregationPlan) -> ComplexEnvelope:
    """MZM-2 with RF phase ``plan.phi_rad``, then the post-aggregation band filter."""
    plan.check_geometry()
    y = mzm_modulate(x, plan.mzm, plan.rf.with_phase(plan.phi_rad))
    return apply_filter(y, plan.select_band)


def phase_to_relative(plan: AggregationPlan) -> float:
    """Relative optical phase of channel 1 against channel 2 in the superposed band.

    Uses the calibrated ``theta0_rad`` when present; otherwise assumes
    carriers from a null-biased two-tone MZM driven at phase 0 (theta0 = 0).
    """
    theta0 = 0.0 if plan.theta0_rad is None else plan.theta0_rad
    return 2.0 * plan.phi_rad + theta0


def wrap(angle):
    """Map angles to [-pi, pi)."""
    return (np.asarray(angle) + np.pi) % (2 * np.pi) - np.pi


@dataclass(frozen=True)
class CwCalibration:
    contribution1: complex
    contribution2: complex
    phi_rad: float

    @property
    def rel_phase_rad(self) -> float:
        return float(np.angle(self.contribution1 / self.contribution2))

    @property
    def theta0_rad(self) -> float:
        return float(wrap(self.rel_phase_rad - 2 * self.phi_rad))

    @property
    def alpha_eff(self) -> float:
        """Amplitude of channel 2's contribution relative to channel 1's."""
        return abs(self.contribution2) / abs(self.contribution1)


def _isolate(x: ComplexEnvelope, offset_hz: float, plan: AggregationPlan) -> ComplexEnvelope:
    return apply_filter(x, FilterSpec("brickwall_bandpass", plan.rf.freq_hz, offset_hz))


def calibrate_cw(carriers: ComplexEnvelope, plan: AggregationPlan) -> CwCalibration:
    """Measure each carrier's phasor at the superposition bin separately.

    ``carriers`` holds the two unmodulated (and already weighted) carriers.
    Each is isolated, passed through the plan and read out at the midpoint
    bin, so the two contributions never interfere in the measurement.
    """
    k = round(plan.superposition_offset_hz / carriers.bin_spacing_hz) % carriers.n
    out = []
    for f in (plan.carrier1_offset_hz, plan.carrier2_offset_hz):
        y = aggregate(_isolate(carriers, f, plan), plan)
        out.append(complex(y.tone_amplitudes()[k]))
    return CwCalibration(out[0], out[1], plan.phi_rad)


def phi_for_relative_phase(target_rel_rad: float, theta0_rad: float) -> float:
    """RF phase in [0, pi) that produces ``target_rel_rad`` (control law inverse)."""
    return float((target_rel_rad - theta0_rad) / 2 % math.pi)


@dataclass(frozen=True, eq=False)
class FormatPrediction:
    points: np.ndarray
    source_pairs: dict
    multiplicity: dict
    min_distance: float

    @property
    def coincidences(self) -> dict:
        """Aggregate point index -> number of symbol pairs mapped onto it (only > 1)."""
        return {k: v for k, v in self.multiplicity.items() if v > 1}

    def point_of(self, i1, i2) -> np.ndarray:
        """Aggregate point index for arrays of channel-1 / channel-2 symbol indices."""
        lut = np.empty((max(a for a, _ in self.source_pairs) + 1,
                        max(b for _, b in self.source_pairs) + 1), dtype=np.int64)
        for (a, b), k in self.source_pairs.items():
            lut[a, b] = k
        return lut[np.asarray(i1), np.asarray(i2)]


def predict_format(f1, f2, alpha: float, rel_phase_rad: float) -> FormatPrediction:
    """Vector sums ``s1 * exp(i*rel_phase) + alpha * s2`` over all symbol pairs.

    ``source_pairs`` maps (index in f1, index in f2) to an index into
    ``points``; coincident sums share one point and are counted in
    ``multiplicity``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    f1, f2 = get_format(f1), get_format(f2)
    rot = np.exp(1j * rel_phase_rad)
    points, pairs, mult = [], {}, {}
    for a, s1 in enumerate(f1.points):
        for b, s2 in enumerate(f2.points):
            v = s1 * rot + alpha * s2
            for k, p in enumerate(points):
                if abs(p - v) < COINCIDENCE_TOL:
                    break
            else:
                k = len(points)
                points.append(v)
            pairs[(a, b)] = k
            mult[k] = mult.get(k, 0) + 1
    pts = np.array(points)
    if pts.size > 1:
        d = np.abs(pts[:, None] - pts[None, :])
        dmin = float(d[~np.eye(pts.size, dtype=bool)].min())
    else:
        dmin = 0.0
    return FormatPrediction(pts, pairs, mult, dmin)


def alignment_to(pred: FormatPrediction, target: ModFormat):
    """Best complex gain mapping the predicted points onto ``target``.

    Returns ``(gain, mismatch, mapping)`` where ``mapping[k]`` is the target
    point nearest to predicted point k after the gain, and ``mismatch`` the
    worst residual distance.  Candidate rotations are those taking one
    predicted point onto each target point with the right RMS scale.
    """
    target = get_format(target)
    w = np.array([pred.multiplicity[k] for k in range(pred.points.size)], dtype=float)
    rms = math.sqrt(np.sum(w * np.abs(pred.points) ** 2) / w.sum())
    if rms == 0:
        return 0j, math.inf, None
    pn = pred.points / rms
    ref = pn[np.argmax(np.abs(pn))]
    best = (0j, math.inf, None)
    for tp in target.points:
        if abs(abs(tp) - abs(ref)) > 1e-6:
            continue
        g = tp / ref
        q = pn * g
        d = np.abs(q[:, None] - target.points[None, :])
        mapping = np.argmin(d, axis=1)
        mismatch = float(d[np.arange(q.size), mapping].max())
        if mismatch < best[1]:
            best = (g / rms, mismatch, mapping)
    return best


def realizes(pred: FormatPrediction, target: ModFormat, tol: float = 1e-6) -> bool:
    """True when the prediction is the target up to rotation and scale, one-to-one."""
    target = get_format(target)
    if pred.points.size != target.order:
        return False
    _, mismatch, mapping = alignment_to(pred, target)
    return mismatch < tol and len(set(mapping.tolist())) == target.order


def diagnostics(x: ComplexEnvelope, plan: AggregationPlan, channel_bandwidth_hz: float,
                calibration: Optional[CwCalibration] = None) -> dict:
    """Superposed-band spectrum, measured alpha/theta0 and leakage powers.

    Leakage is the power the aggregate picks up in the select band from
    anything in ``x`` outside the two parent-channel bands (residual centre
    carrier, higher comb lines).
    """
    y = aggregate(x, plan)
    f = y.freqs_hz
    resp = plan.select_band.response(f) > 0
    amps = y.tone_amplitudes()
    band_power = np.abs(amps[resp]) ** 2
    in_ch = np.zeros(x.n, dtype=bool)
    for c in (plan.carrier1_offset_hz, plan.carrier2_offset_hz):
        in_ch |= np.abs(x.freqs_hz - c) <= channel_bandwidth_hz / 2 * (1 + 1e-12)
    X = np.fft.fft(x.samples.astype(np.complex128))
    X_out = np.where(in_ch, 0, X)
    # Rounding residue alone is not leakage.
    if np.sum(np.abs(X_out) ** 2) <= 1e-24 * np.sum(np.abs(X) ** 2):
        leak = 0.0
    else:
        leak = aggregate(x.with_samples(np.fft.ifft(X_out)), plan).power_mw
    total = y.power_mw
    order = np.argsort(f[resp])
    report = {
        "superposition_offset_hz": plan.superposition_offset_hz,
        "phi_rad": plan.phi_rad,
        "band_offsets_hz": f[resp][order].tolist(),
        "band_bin_power_mw": band_power[order].astype(float).tolist(),
        "band_power_mw": total,
        "leakage_power_mw": leak,
        "leakage_rel_db": 10 * math.log10(leak / total) if leak > 0 and total > 0 else -math.inf,
    }
    if calibration is not None:
        report.update(alpha_eff=calibration.alpha_eff, theta0_rad=calibration.theta0_rad,
                      rel_phase_rad=calibration.rel_phase_rad)
    return report


def _alpha_candidates(bounds):
    lo, hi = bounds
    c = {a for a in (0.25, 0.5, 1.0) if lo <= a <= hi} | {lo, hi}
    c |= set(np.linspace(lo, hi, 41).tolist())
    return sorted(c, key=lambda a: (abs(a - 1.0) > 1e-12, abs(a - 0.5) > 1e-12, a))


def solve_for_target(f1, f2, target, alpha=None, alpha_bounds=(1e-3, 1.0)):
    """(alpha, rel_phase_rad) for which predict_format realizes ``target``.

    Searches relative phases on a pi/8 lattice in [0, pi) and, unless
    ``alpha`` is fixed, a set of amplitude ratios within ``alpha_bounds``.
    Returns None when nothing realizes the target; use
    :func:`closest_prediction` for a witness.
    """
    alphas = [alpha] if alpha is not None else _alpha_candidates(alpha_bounds)
    rels = [k * math.pi / 8 for k in range(8)]
    for a in alphas:
        for rel in rels:
            if realizes(predict_format(f1, f2, a, rel), target):
                return float(a), float(rel)
    return None


def closest_prediction(f1, f2, target, alpha=None, alpha_bounds=(1e-3, 1.0)) -> dict:
    """Best-matching prediction, reported when the target is out of reach."""
    target = get_format(target)
    alphas = [alpha] if alpha is not None else _alpha_candidates(alpha_bounds)
    best = None
    for a in alphas:
        for k in range(8):
            rel = k * math.pi / 8
            p = predict_format(f1, f2, a, rel)
            _, mism, _ = alignment_to(p, target)
            key = (abs(p.points.size - target.order), mism)
            if best is None or key < best[0]:
                best = (key, a, rel, p)
    _, a, rel, p = best
    return {"alpha": float(a), "rel_phase_rad": float(rel), "n_points": int(p.points.size),
            "target_points": target.order, "coincidences": {str(k): v for k, v in p.coincidences.items()},
            "points": [[float(v.real), float(v.imag)] for v in p.points]}


def spectrum_support(y: ComplexEnvelope, carrier_offsets_hz, f_m_hz: float, channel_bandwidth_hz: float,
                     n_orders: int = 3) -> float:
    """Fraction of power (dB) outside the sideband bands c_i + n*f_m, |n| <= n_orders."""
    f = y.freqs_hz
    inside = np.zeros(y.n, dtype=bool)
    for c in carrier_offsets_hz:
        for n in range(-n_orders, n_orders + 1):
            inside |= np.abs(f - (c + n * f_m_hz)) <= channel_bandwidth_hz / 2 * (1 + 1e-12)
    p = np.abs(y.tone_amplitudes().astype(np.complex128)) ** 2
    out = float(p[~inside].sum())
    tot = float(p.sum())
    return 10 * math.log10(out / tot) if out > 0 else -math.inf
