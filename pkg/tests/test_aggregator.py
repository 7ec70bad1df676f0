import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from optagg.aggregator import (aggregate, alignment_to, calibrate_cw, closest_prediction,
                               diagnostics, phase_to_relative, phi_for_relative_phase, predict_format, realizes,
                               solve_for_target, spectrum_support, wrap)
from optagg.errors import GeometryError
from optagg.modulators import RfDrive
from optagg.scenario import build_chain, load_golden
from optagg.signal_core import FilterSpec
from optagg.transmitter import FORMATS, get_format

PARENTS = st.sampled_from(["BPSK", "QPSK", "PAM4"])


@pytest.fixture(scope="module")
def chain():
    return build_chain(load_golden("fig5a_qpsk"), n_symbols=400)


@pytest.mark.parametrize("f1,f2,alpha,rel,target", [
    ("BPSK", "BPSK", 1.0, math.pi / 2, "QPSK"),
    ("BPSK", "BPSK", 0.5, 0.0, "PAM4"),
    ("QPSK", "QPSK", 0.5, 0.0, "QAM16"),
])
def test_known_aggregations(f1, f2, alpha, rel, target):
    p = predict_format(f1, f2, alpha, rel)
    assert realizes(p, get_format(target))
    assert not p.coincidences


def test_equal_weight_in_phase_bpsk_collapses():
    p = predict_format("BPSK", "BPSK", 1.0, 0.0)
    assert p.points.size == 3
    assert p.coincidences == {p.source_pairs[(0, 1)]: 2}
    assert not realizes(p, get_format("PAM4"))


@given(PARENTS, PARENTS, st.floats(0.05, 1.0), st.floats(-math.pi, math.pi))
def test_cardinality_bounded_by_product(f1, f2, alpha, rel):
    p = predict_format(f1, f2, alpha, rel)
    n = get_format(f1).order * get_format(f2).order
    assert p.points.size <= n
    assert sum(p.multiplicity.values()) == n
    assert len(p.source_pairs) == n


@given(st.floats(0.05, 1.0), st.floats(-math.pi, math.pi))
def test_qpsk_aggregation_preserves_parents(alpha, rel):
    # channel 2 sits on the real axis, so the real projection of ch1 is recoverable
    p = predict_format("BPSK", "BPSK", alpha, rel)
    for (a, b), k in p.source_pairs.items():
        v = FORMATS["BPSK"].points[a] * np.exp(1j * rel) + alpha * FORMATS["BPSK"].points[b]
        assert abs(p.points[k] - v) < 1e-9


def test_alignment_reports_gain():
    p = predict_format("BPSK", "BPSK", 0.5, 0.0)
    g, mism, mapping = alignment_to(p, get_format("PAM4"))
    assert mism < 1e-9 and sorted(mapping.tolist()) == [0, 1, 2, 3]
    assert abs(abs(g) - 1 / math.sqrt(np.mean(np.abs(p.points) ** 2))) < 1e-12


def test_solver_and_witness():
    a, rel = solve_for_target("BPSK", "BPSK", "QPSK", 1.0)
    assert a == 1.0 and realizes(predict_format("BPSK", "BPSK", a, rel), get_format("QPSK"))
    assert solve_for_target("BPSK", "BPSK", "QAM16") is None
    w = closest_prediction("BPSK", "BPSK", "QAM16")
    assert w["n_points"] <= 4 and w["target_points"] == 16


def test_wrap_range():
    v = wrap(np.array([-4 * math.pi, 3.5 * math.pi, math.pi]))
    assert np.all(v >= -math.pi) and np.all(v < math.pi)


def test_control_law_inverse():
    for target in np.linspace(-3, 3, 13):
        for theta0 in (0.0, 1.1, -2.0):
            phi = phi_for_relative_phase(target, theta0)
            assert 0 <= phi < math.pi
            assert abs(wrap(2 * phi + theta0 - target)) < 1e-12


def test_theta0_measured_zero_and_alpha_eff(chain):
    cal = calibrate_cw(chain.carriers, chain.plan.with_phi(0.4))
    assert abs(cal.theta0_rad) < 1e-9
    assert abs(cal.alpha_eff - chain.plan.alpha) < 1e-9
    assert abs(wrap(phase_to_relative(chain.plan.with_phi(0.4)) - cal.rel_phase_rad)) < 1e-9


def test_theta0_follows_carrier_phase():
    scn = load_golden("fig5a_qpsk").with_overrides(**{"transmitter.carrier_phase_rad": 0.3})
    c = build_chain(scn, n_symbols=400)
    theta0 = calibrate_cw(c.carriers, c.plan).theta0_rad
    # lower carrier carries -psi, upper +psi
    assert abs(wrap(theta0 + 0.6)) < 1e-9


def test_cw_interference_nulls_at_predicted_phase(chain):
    # equal-amplitude carriers cancel in the superposed bin when rel = pi
    phi = phi_for_relative_phase(math.pi, 0.0)
    y = aggregate(chain.carriers, chain.plan.with_phi(phi))
    k = round(chain.plan.superposition_offset_hz / y.bin_spacing_hz) % y.n
    peak = aggregate(chain.carriers, chain.plan.with_phi(0.0)).tone_amplitudes()[k]
    assert abs(y.tone_amplitudes()[k]) < 1e-12 * abs(peak)


@given(st.floats(0, math.pi))
def test_cw_interference_is_raised_cosine(phi):
    c = build_chain(load_golden("fig5a_qpsk"), n_symbols=100)
    y = aggregate(c.carriers, c.plan.with_phi(phi)).tone_amplitudes()
    k = round(c.plan.superposition_offset_hz / c.carriers.bin_spacing_hz) % c.carriers.n
    y0 = aggregate(c.carriers, c.plan.with_phi(0.0)).tone_amplitudes()[k]
    assert abs(abs(y[k]) ** 2 / abs(y0) ** 2 - math.cos(phi) ** 2) < 1e-9


def test_aggregate_is_linear(chain):
    x = chain.weighted
    plan = chain.plan.with_phi(0.7)
    a = aggregate(x.scaled(2 - 1j), plan).samples
    b = (2 - 1j) * aggregate(x, plan).samples
    assert np.allclose(a, b, atol=1e-12)


def test_geometry_checks(chain):
    bad = replace(chain.plan, rf=RfDrive(20e9))
    with pytest.raises(GeometryError):
        bad.check_geometry()
    off = replace(chain.plan, select_band=FilterSpec("brickwall_bandpass", 10e9, 40e9))
    with pytest.raises(GeometryError):
        aggregate(chain.weighted, off)


def test_diagnostics_fields(chain):
    cal = calibrate_cw(chain.carriers, chain.plan)
    d = diagnostics(chain.weighted, chain.plan, 20e9, cal)
    assert d["leakage_power_mw"] == 0.0 and d["leakage_rel_db"] == -math.inf
    assert abs(sum(d["band_bin_power_mw"]) - d["band_power_mw"]) < 1e-9 * d["band_power_mw"]
    assert abs(d["alpha_eff"] - 1) < 1e-9


def test_spectrum_support_of_mzm_output(chain):
    from optagg.modulators import mzm_modulate
    y = mzm_modulate(chain.weighted, chain.plan.mzm, chain.plan.rf)
    assert spectrum_support(y, (-18e9, 18e9), 18e9, 20e9) < -40
    assert spectrum_support(y, (-18e9, 18e9), 18e9, 20e9, n_orders=0) > -20


def test_quarter_turn_of_rf_phase_is_half_turn_relative(chain):
    a = calibrate_cw(chain.carriers, chain.plan.with_phi(0.2)).rel_phase_rad
    b = calibrate_cw(chain.carriers, chain.plan.with_phi(0.2 + math.pi / 4)).rel_phase_rad
    assert abs(wrap(b - a - math.pi / 2)) < 1e-9


def test_half_turn_of_rf_phase_keeps_geometry(chain):
    a = calibrate_cw(chain.carriers, chain.plan.with_phi(0.3))
    b = calibrate_cw(chain.carriers, chain.plan.with_phi(0.3 + math.pi))
    assert abs(wrap(a.rel_phase_rad - b.rel_phase_rad)) < 1e-9


def test_pam4_prediction_is_equispaced():
    p = predict_format("BPSK", "BPSK", 0.5, 0.0)
    lv = np.sort(p.points.real)
    assert np.allclose(np.diff(lv), lv[1] - lv[0]) and np.abs(p.points.imag).max() < 1e-12
