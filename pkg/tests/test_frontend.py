import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oobsim.analysis import BandSpec, conducted_aclr
from oobsim.frontend import (
    CalibrationError,
    NonlinearityModel,
    apply_nonlinearity,
    calibrate_drive,
)
from oobsim.waveform import SampledSignal, design_rrc, generate_symbols, pulse_shape

BAUD = 20e6


def test_linear_when_a3_zero():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(1024) + 1j * rng.standard_normal(1024)
    sig = SampledSignal(x, 1.0)
    model = NonlinearityModel(a1=1.0, a3=0.0, drive_rms=np.sqrt(sig.power))
    out = apply_nonlinearity(sig, model)
    np.testing.assert_allclose(out.samples, x, atol=1e-12)


def test_constant_input_formula():
    sig = SampledSignal(np.ones(64, complex), 1.0)
    model = NonlinearityModel(a1=1.0, a3=-0.05, drive_rms=1.0)
    out = apply_nonlinearity(sig, model)
    np.testing.assert_allclose(out.samples, 0.95, atol=1e-12)


def test_two_tone_intermodulation_closed_form():
    # x = e^{j w1 t} + e^{j w2 t}: output fundamentals a1 + 3 a3 = 0.85,
    # IM3 lines at 2w1 - w2 and 2w2 - w1 with amplitude |a3| = 0.05.
    n = 4096
    k1, k2 = 300, 400
    t = np.arange(n)
    x = np.exp(2j * np.pi * k1 * t / n) + np.exp(2j * np.pi * k2 * t / n)
    sig = SampledSignal(x, 1.0)
    model = NonlinearityModel(a1=1.0, a3=-0.05, drive_rms=np.sqrt(2.0))
    out = apply_nonlinearity(sig, model)
    spectrum = np.fft.fft(out.samples) / n
    assert spectrum[k1] == pytest.approx(0.85, abs=1e-9)
    assert spectrum[k2] == pytest.approx(0.85, abs=1e-9)
    assert spectrum[2 * k1 - k2] == pytest.approx(-0.05, abs=1e-9)
    assert spectrum[2 * k2 - k1] == pytest.approx(-0.05, abs=1e-9)
    # nothing else is excited
    others = np.delete(spectrum, [k1, k2, 2 * k1 - k2, 2 * k2 - k1])
    assert np.max(np.abs(others)) < 1e-9


@settings(max_examples=30, deadline=None)
@given(phi=st.floats(-np.pi, np.pi), seed=st.integers(0, 2**31 - 1))
def test_global_phase_commutes(phi, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(256) + 1j * rng.standard_normal(256)
    sig = SampledSignal(x, 1.0)
    model = NonlinearityModel(a1=1.0, a3=-0.05 + 0.01j, drive_rms=0.8)
    rotated = apply_nonlinearity(SampledSignal(x * np.exp(1j * phi), 1.0), model)
    reference = apply_nonlinearity(sig, model)
    np.testing.assert_allclose(rotated.samples, reference.samples * np.exp(1j * phi), atol=1e-12)


def test_zero_signal_passes_through():
    sig = SampledSignal(np.zeros(16, complex), 1.0)
    model = NonlinearityModel(a1=1.0, a3=-0.05, drive_rms=1.0)
    out = apply_nonlinearity(sig, model)
    np.testing.assert_array_equal(out.samples, 0.0)


class TestCalibration:
    def chain(self):
        return design_rrc(0.22, 32, 7)

    def test_hits_target_aclr(self):
        shape = self.chain()
        model = calibrate_drive(-0.05, 23.0, shape, BAUD, seed=101)
        # verify on an independent symbol stream
        syms = generate_symbols(1, 65536, seed=555)[0]
        sig = pulse_shape(syms, shape, BAUD)
        measured = conducted_aclr(apply_nonlinearity(sig, model), BandSpec.from_baud(BAUD, 0.22))
        assert measured == pytest.approx(23.0, abs=0.25)

    def test_deterministic(self):
        shape = self.chain()
        a = calibrate_drive(-0.05, 23.0, shape, BAUD, seed=101)
        b = calibrate_drive(-0.05, 23.0, shape, BAUD, seed=101)
        assert a.drive_rms == b.drive_rms

    def test_unreachable_target_reports_bracket_failure(self):
        shape = self.chain()
        with pytest.raises(CalibrationError):
            calibrate_drive(-0.05, 60.0, shape, BAUD, seed=101)  # above the ~56 dB filter floor

    def test_monotonicity_over_bracket(self):
        # measured ACLR nonincreasing in drive across the bracket
        shape = self.chain()
        syms = generate_symbols(1, 4096, seed=77)[0]
        sig = pulse_shape(syms, shape, BAUD)
        bands = BandSpec.from_baud(BAUD, 0.22)
        drives = [0.02, 0.1, 0.4, 1.0, 1.8, 2.5]
        values = [
            conducted_aclr(apply_nonlinearity(sig, NonlinearityModel(1.0, -0.05, d)), bands)
            for d in drives
        ]
        assert all(a >= b - 1e-9 for a, b in zip(values, values[1:]))

    def test_linear_chain_floor_exceeds_50db(self):
        shape = self.chain()
        syms = generate_symbols(1, 16384, seed=9)[0]
        sig = pulse_shape(syms, shape, BAUD)
        assert conducted_aclr(sig, BandSpec.from_baud(BAUD, 0.22)) > 50.0


def test_model_validation():
    with pytest.raises(ValueError):
        NonlinearityModel(a1=0.0, a3=-0.05, drive_rms=1.0)
    with pytest.raises(ValueError):
        NonlinearityModel(a1=1.0, a3=-0.05, drive_rms=0.0)
