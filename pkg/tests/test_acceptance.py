"""Acceptance suite: one test per criterion, each logging a PASS/FAIL line.

The lines are printed in the pytest terminal summary under
"acceptance criteria".
"""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from optagg import cli
from optagg.aggregator import calibrate_cw, solve_for_target
from optagg.link_elements import NoiseReference, calibrated_psd, measure_relative_delay
from optagg.modulators import MzmParams, RfDrive, mzm_modulate, sideband_coefficients, significant_order
from optagg.receiver_dsp import RxConfig, eye_diagram, receive
from optagg.scenario import back_to_back, build_chain, golden_names, load_golden, run_scenario
from optagg.signal_core import ComplexEnvelope
from optagg.transmitter import (PulseShape, dirichlet_kernel, generate_symbols, get_format, shape_pulses,
                                two_tone_carriers)
from optagg.tuner import TuneSpec, tune

from oracles import dirichlet, evaluate_lines, group_delay_ps


def _log(log, n, ok, detail):
    log.append(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


@pytest.fixture(scope="module")
def goldens():
    return {name: run_scenario(load_golden(name)) for name in golden_names()}


def test_c01_sideband_amplitudes_extended_precision(acceptance_log):
    n, fs, fm = 1024, 1024.0, 16.0
    worst = 0.0
    for m in (0.3, 1.0, 2.0):
        for bias in (0.0, 1.0):
            for k in range(16):
                p, d = MzmParams(bias_v=bias), RfDrive(fm, m, 2 * math.pi * k / 16)
                x = ComplexEnvelope.tone(0.0, n, fs, dtype=np.clongdouble)
                y = mzm_modulate(x, p, d).tone_amplitudes()
                nm = significant_order(m)
                tab = sideband_coefficients(p, d, nm)
                for order in range(-nm, nm + 1):
                    c = tab[order]
                    if abs(c) < 1e-9:
                        continue
                    f = complex(y[(order * int(fm)) % n])
                    worst = max(worst, abs(abs(f) - abs(c)) / abs(c), abs(np.angle(f / c)))
    ok = worst <= 1e-9
    _log(acceptance_log, 1, ok, f"worst sideband mismatch {worst:.2e} (tol 1e-9)")
    assert ok


def test_c02_control_law_slope(acceptance_log):
    chain = build_chain(load_golden("fig5a_qpsk"), n_symbols=500)
    phis = np.arange(32) * (math.pi / 32)
    rel = [calibrate_cw(chain.carriers, chain.plan.with_phi(p)).rel_phase_rad for p in phis]
    slope = np.polyfit(phis, np.unwrap(rel), 1)[0]
    ok = abs(slope - 2.0) <= 1e-9
    _log(acceptance_log, 2, ok, f"d(rel)/d(phi) = {slope:.12f} (2 +/- 1e-9)")
    assert ok


def test_c03_carrier_suppression(acceptance_log):
    fs, n = 640e9, 16000
    y = two_tone_carriers(36e9, 20.0, sample_rate_hz=fs, n_samples=n).tone_amplitudes()
    k = round(18e9 * n / fs)
    centre = abs(y[0]) ** 2
    side = 0.5 * (abs(y[k]) ** 2 + abs(y[-k]) ** 2)
    db = 10 * math.log10(centre / side)
    ok = abs(db + 20.0) <= 0.1
    _log(acceptance_log, 3, ok, f"centre tone {db:.4f} dB below first-order tones (-20 +/- 0.1)")
    assert ok


def test_c04_golden_scenarios(goldens, acceptance_log):
    bad = []
    worst_evm, worst_oob = 0.0, -math.inf
    for name, r in goldens.items():
        worst_evm = max(worst_evm, r.report.evm_avg_pct)
        worst_oob = max(worst_oob, r.spectrum_out_of_band_db)
        if not (r.report.evm_avg_pct < 1.0 and r.report.ser == 0.0 and r.mapping_bijective):
            bad.append(name)
        if r.spectrum_out_of_band_db > -40.0:
            bad.append(name + " (spectrum)")
    ok = not bad
    _log(acceptance_log, 4, ok, f"{len(goldens)} goldens, max EVM {worst_evm:.3f} %, "
                                f"max out-of-band {worst_oob:.1f} dB" + (f", failing {bad}" if bad else ""))
    assert ok


def test_c05_q_factor_back_to_back(acceptance_log):
    rc = back_to_back("BPSK", 10e9, PulseShape(), 2**14, 12.72)
    nyq = back_to_back("BPSK", 8e9, PulseShape("sinc_sequence", 0.0, 3), 2**14, 9.43)
    q1, q2 = rc.q_factor_db, nyq.q_factor_db
    ok = 19.0 <= q1 <= 21.0 and 21.0 <= q2 <= 23.5
    _log(acceptance_log, 5, ok, f"Q {q1:.2f} dB at EVM {rc.evm_avg_pct:.2f} % (19..21); "
                                f"Q {q2:.2f} dB at EVM {nyq.evm_avg_pct:.2f} % (21..23.5)")
    assert ok


def test_c06_noise_ordering(acceptance_log):
    qpsk, qam = load_golden("fig5a_qpsk"), load_golden("fig6_qam16")
    pulse = qpsk.pulse()
    fails = []
    rows = []
    for target in (2.0, 4.0, 6.0, 8.0, 10.0):
        psd = calibrated_psd(target, NoiseReference(1.0 / pulse.power_factor(), qpsk.rx_bandwidth_hz()))
        ase = {"link.ase_after_tx": {"noise_psd": psd}}
        a = run_scenario(qpsk.with_overrides(**ase))
        b = run_scenario(qam.with_overrides(**ase))
        rows.append(f"{a.parent_report.evm_avg_pct:.2f}/{a.report.evm_avg_pct:.2f}/{b.report.evm_avg_pct:.2f}")
        if not a.report.evm_avg_pct > a.parent_report.evm_avg_pct:
            fails.append(f"QPSK agg <= parent at {target}")
        if not b.report.evm_avg_pct > b.parent_report.evm_avg_pct:
            fails.append(f"QAM16 agg <= parent at {target}")
        if not b.report.evm_avg_pct > a.report.evm_avg_pct:
            fails.append(f"QAM16 <= QPSK at {target}")
    ok = not fails
    _log(acceptance_log, 6, ok, "parent/QPSK/QAM16 EVM % per noise point: " + ", ".join(rows)
         + (f"; {fails}" if fails else ""))
    assert ok


def test_c07_dispersion_delay(acceptance_log):
    scn = load_golden("fig5a_qpsk").with_overrides(
        **{"transmitter.dispersion_ps_per_nm": -270.0, "transmitter.decorrelation": "shared_data",
           "link.alpha": 1.0})
    chain = build_chain(scn, n_symbols=1000)
    c1, c2 = chain.parents.carrier_offsets_hz
    bw = chain.parents.channel_bandwidth_hz
    z1 = receive(chain.weighted, RxConfig(bw, channel_offset_hz=c1))
    z2 = receive(chain.weighted, RxConfig(bw, channel_offset_hz=c2))
    measured = measure_relative_delay(z1, z2) * 1e12
    expected = group_delay_ps(-270.0, c1 - c2)
    dt = 1e12 / chain.weighted.sample_rate_hz
    ok = abs(abs(measured) - 77.8) <= dt and abs(measured - expected) <= dt
    _log(acceptance_log, 7, ok, f"delay {measured:.3f} ps, first-principles {expected:.3f} ps, "
                                f"target 77.8 +/- {dt:.4f} ps")
    assert ok


def _rel_error_deg(scn, res):
    f1, f2 = scn.config["transmitter"]["formats"]
    _, rel_target = solve_for_target(f1, f2, res.target)
    chain = build_chain(scn, n_symbols=500, alpha=res.alpha_star)
    theta0 = calibrate_cw(chain.carriers, chain.plan).theta0_rad
    rel = 2 * res.phi_star_rad + theta0
    period = 2 * math.pi / get_format(f1).symmetry
    d = (rel - rel_target) % period
    return math.degrees(min(d, period - d))


def test_c08_tuner_recovers_control_law(acceptance_log):
    parts, ok = [], True
    runs = {}
    for name in ("fig5b_pam4", "fig6_qam16"):
        scn = load_golden(name).with_overrides(**{"link.alpha": None})
        res = tune(scn, TuneSpec(scn.config["aggregation"]["target"], alpha_bounds=(0.1, 1.0)))
        runs[name] = (scn, res)
        err = _rel_error_deg(scn, res)
        good = err <= 2.0 and abs(res.alpha_star - 0.5) <= 0.02
        ok &= good
        parts.append(f"{res.target}: phase err {err:.3f} deg, alpha* {res.alpha_star:.4f}")
    scn, first = runs["fig5b_pam4"]
    again = tune(scn, TuneSpec("PAM4", alpha_bounds=(0.1, 1.0)))
    same = json.dumps(first.to_dict()) == json.dumps(again.to_dict())
    ok &= same
    parts.append("repeat identical" if same else "repeat differs")
    _log(acceptance_log, 8, ok, "; ".join(parts))
    assert ok


def test_c09_sinc_sequence_properties(goldens, acceptance_log):
    rate, fs, n_lines = 8e9, 640e9, 3
    ones = generate_symbols("BPSK", 64, 0, rate)
    ones = type(ones)(ones.format, np.ones(64, dtype=np.int64), rate, 0)
    x = shape_pulses(ones, PulseShape("sinc_sequence", 0.0, n_lines), fs)
    amps = np.abs(x.tone_amplitudes())
    k = round(rate * x.n / fs)
    lines = 20 * np.log10(amps[[-k, 0, k]])
    flat = float(lines.max() - lines.min())

    T = 1 / rate
    t = np.linspace(-T, T, 401)
    wave = evaluate_lines(x.samples, fs, t).real
    peak = evaluate_lines(x.samples, fs, [0.0]).real[0]
    shape_err = float(np.max(np.abs(wave / peak - dirichlet(t, n_lines, rate))))
    tz = np.array([m / (n_lines * rate) for m in range(-6, 7) if m % n_lines])
    zeros = float(np.max(np.abs(evaluate_lines(x.samples, fs, tz)) / abs(peak)))
    kern = float(np.max(np.abs(dirichlet_kernel(tz, n_lines, rate))))

    r = goldens["fig8b_nyq_qam16_8g"].received
    sps = round(r.sample_rate_hz / rate)
    eye = eye_diagram(r, rate, span_symbols=1, n_amp=400)
    centres = np.linspace(eye.lo, eye.hi, 401)
    centres = 0.5 * (centres[:-1] + centres[1:])
    ratio = 0.0
    for h in (eye.hist_i, eye.hist_q):
        peak_amp = np.abs(centres[h[0] > 0]).max()
        for tb in (sps // 3, 2 * sps // 3):
            ratio = max(ratio, np.abs(centres[h[tb] > 0]).max() / peak_amp)
    ok = flat <= 0.01 and zeros <= 1e-9 and kern <= 1e-9 and shape_err <= 1e-9 and ratio <= 0.05
    _log(acceptance_log, 9, ok, f"line flatness {flat:.2e} dB, zero residue {zeros:.1e}, "
                                f"kernel shape err {shape_err:.1e}, eye between symbols {100 * ratio:.2f} % of peak")
    assert ok


def test_c10_manifest_replay(tmp_path, acceptance_log):
    scn = load_golden("fig5a_qpsk").with_overrides(
        **{"link.ase_after_tx": {"target_evm_pct": 5.0},
           "link.ase_after_aggregation": {"target_evm_pct": 3.0},
           "outputs.envelope": True, "outputs.eye": True})
    cfg = tmp_path / "scn.json"
    cfg.write_text(json.dumps(scn.config, indent=2))
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", str(cfg), "--out", str(a)]) == 0
    assert cli.main(["run", str(a / "manifest.json"), "--out", str(b)]) == 0
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    diff = [f for f in ma["files"] if (a / f).read_bytes() != (b / f).read_bytes()]
    ok = not diff and ma["files"] == mb["files"] and ma["config_sha256"] == mb["config_sha256"]
    _log(acceptance_log, 10, ok, f"{len(ma['files'])} artifacts re-run from manifest, "
                                 f"{len(diff)} differ")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([str(Path(__file__)), "-q"]))
