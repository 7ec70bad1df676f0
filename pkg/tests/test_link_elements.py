import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from optagg.errors import CalibrationError
from optagg.link_elements import (AseNoiseSpec, DispersionSpec, NoiseReference, WeightPlan, apply_ase,
                                  apply_dispersion, apply_weight, calibrated_psd, group_delay_difference,
                                  measure_relative_delay)
from optagg.receiver_dsp import RxConfig, receive
from optagg.signal_core import ComplexEnvelope, FilterSpec, apply_filter, delay

from oracles import group_delay_ps

FS = 640e9


def noise_env(seed, n=8192, bw=100e9):
    rng = np.random.default_rng(seed)
    x = ComplexEnvelope(rng.standard_normal(n) + 1j * rng.standard_normal(n), FS)
    return apply_filter(x, FilterSpec("brickwall_lowpass", bw))


def test_weight_scales_only_its_band():
    x = ComplexEnvelope(np.ones(640), FS)
    x = x.with_samples(sum(ComplexEnvelope.tone(f, 640, FS).samples for f in (-18e9, 18e9)))
    y = apply_weight(x, WeightPlan(0.5, (10e9, 30e9))).tone_amplitudes()
    assert abs(y[18] - 0.5) < 1e-14 and abs(y[-18] - 1) < 1e-14
    with pytest.raises(ValueError):
        WeightPlan(0.0, (0, 1))
    with pytest.raises(ValueError):
        WeightPlan(0.5, (1, 0))


@pytest.mark.parametrize("d", [-270.0, 17.0, -520.0])
def test_group_delay_against_first_principles(d):
    got = group_delay_difference(DispersionSpec(d), 36e9) * 1e12
    assert abs(got - group_delay_ps(d, 36e9)) < 1e-9


@given(st.integers(0, 2**32 - 1), st.floats(-2000, 2000))
def test_dispersion_is_all_pass(seed, d):
    x = noise_env(seed)
    y = apply_dispersion(x, DispersionSpec(d))
    assert abs(y.power_mw - x.power_mw) < 1e-9 * x.power_mw
    back = apply_dispersion(y, DispersionSpec(-d))
    assert np.allclose(back.samples, x.samples, atol=1e-9)


def test_dispersion_bounds():
    with pytest.raises(ValueError):
        DispersionSpec(20000.0)


def test_measured_delay_matches_integer_shift():
    x = noise_env(1)
    assert abs(measure_relative_delay(x, delay(x, 7 / FS)) - 7 / FS) < 1e-18
    assert abs(measure_relative_delay(x, delay(x, -3 / FS)) + 3 / FS) < 1e-18


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        AseNoiseSpec()
    with pytest.raises(ValueError):
        AseNoiseSpec(target_parent_evm_pct=5, noise_psd=1e-6)
    with pytest.raises(ValueError):
        AseNoiseSpec(noise_psd=-1.0)


def test_calibrated_psd_closed_form():
    ref = NoiseReference(1.0, 20e9)
    psd = calibrated_psd(10.0, ref)
    s2 = psd**2 * ref.rx_bandwidth_hz
    assert abs(math.sqrt(s2 / (1 + s2)) - 0.10) < 1e-12
    with pytest.raises(CalibrationError):
        calibrated_psd(0.5, NoiseReference(1.0, 20e9, floor_evm_pct=1.0))
    with pytest.raises(CalibrationError):
        calibrated_psd(100.0, ref)


def test_in_band_noise_power():
    x = ComplexEnvelope.zeros(2**16, FS)
    psd = 1e-6
    y = apply_ase(x, AseNoiseSpec(noise_psd=psd, bpf_bandwidth_hz=200e9, seed=3))
    z = receive(y, RxConfig(20e9))
    assert abs(z.power_mw / (psd**2 * 20e9) - 1) < 0.05


def test_ase_is_seeded():
    x = noise_env(0)
    a = apply_ase(x, AseNoiseSpec(noise_psd=1e-6, seed=5))
    b = apply_ase(x, AseNoiseSpec(noise_psd=1e-6, seed=5))
    c = apply_ase(x, AseNoiseSpec(noise_psd=1e-6, seed=6))
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_ase_errors():
    x = noise_env(0)
    with pytest.raises(CalibrationError):
        apply_ase(x, AseNoiseSpec(target_parent_evm_pct=5.0))
    with pytest.raises(CalibrationError):
        apply_ase(x, AseNoiseSpec(noise_psd=1e-6, bpf_bandwidth_hz=2 * FS))
    with pytest.raises(CalibrationError):
        apply_ase(x, AseNoiseSpec(target_parent_evm_pct=5.0, bpf_bandwidth_hz=10e9), NoiseReference(1.0, 20e9))


def test_zero_psd_is_identity():
    x = noise_env(2)
    assert np.array_equal(apply_ase(x, AseNoiseSpec(noise_psd=0.0)).samples, x.samples)


def test_weight_examples():
    from optagg.transmitter import TxConfig, build_parent_channels
    p = build_parent_channels(TxConfig(n_symbols=400))
    x = p.envelope
    assert np.array_equal(apply_weight(x, WeightPlan(1.0, (-28e9, -8e9))).samples, x.samples)
    y = apply_weight(x, WeightPlan(0.5, (-28e9, -8e9)))
    b1, b2 = p.channel_band(0), p.channel_band(1)
    drop = 10 * math.log10(apply_filter(y, b1).power_mw / apply_filter(x, b1).power_mw)
    assert abs(drop + 6.0206) < 1e-3
    assert abs(apply_filter(y, b2).power_mw - apply_filter(x, b2).power_mw) < 1e-9


def test_dispersion_examples():
    x = noise_env(3)
    assert np.array_equal(apply_dispersion(x, DispersionSpec(0.0)).samples, x.samples)
    assert abs(group_delay_difference(DispersionSpec(-270.0), 36e9) * 1e12 + 77.8) < 0.2
    assert abs(group_delay_difference(DispersionSpec(-520.0), 36e9) * 1e12 + 149.9) < 0.2


def test_calibrated_noise_back_to_back():
    from optagg.scenario import back_to_back
    from optagg.transmitter import PulseShape
    rep = back_to_back("BPSK", 10e9, PulseShape(), 4000, 12.72)
    assert abs(rep.evm_avg_pct - 12.72) < 0.3


def test_noise_seeds_uncorrelated():
    x = ComplexEnvelope.zeros(2**14, FS)
    a = apply_ase(x, AseNoiseSpec(noise_psd=1e-6, seed=1)).samples
    b = apply_ase(x, AseNoiseSpec(noise_psd=1e-6, seed=2)).samples
    rho = abs(np.vdot(a, b)) / math.sqrt(np.vdot(a, a).real * np.vdot(b, b).real)
    assert rho < 5 / math.sqrt(a.size)
