import math

import numpy as np
import pytest

from qttlab.errors import ClockSpanError, ConfigError
from qttlab.stability import PhaseData, adev, curve, tdev
from qttlab.timescale import (ClockModel, NoiseComponent, TransferSpec,
                              make_transferred_reference, offset_at, synth_phase,
                              synth_transfer_residual)


def test_deterministic_constant_offset():
    model = ClockModel(initial_offset=4.2e-8, label="fixed")
    r = synth_phase(model, 100, 0.5, seed=1)
    assert np.all(r.phase_samples == 4.2e-8)
    for t in (0.0, 3.21, 49.5):
        assert offset_at(r, t) == pytest.approx(4.2e-8, rel=1e-15)


def test_linear_ramp():
    model = ClockModel(frac_freq_offset=1e-9)
    r = synth_phase(model, 1000, 0.1, seed=0)
    i = np.arange(1000)
    assert np.allclose(r.phase_samples, 1e-9 * i * 0.1, rtol=1e-15, atol=0)


def test_quadratic_exact_at_grid_points_bounded_between():
    d = 1e-10
    model = ClockModel(initial_offset=1e-9, frac_freq_offset=2e-10, freq_drift=d)
    r = synth_phase(model, 200, 0.1, seed=0)
    t_grid = np.arange(200) * 0.1

    def truth(t):
        return 1e-9 + 2e-10 * t + 0.5 * d * t * t

    assert np.allclose(r.phase_samples, truth(t_grid), rtol=1e-14)
    # grid points exact through interpolation
    for i in (0, 7, 111, 199):
        assert offset_at(r, i * 0.1) == r.phase_samples[i]
    # midpoints: linear interpolation of a quadratic is off by d*tau0^2/8
    bound = d * 0.1 ** 2 / 8 + 1e-18
    for i in (0, 50, 120):
        t = (i + 0.5) * 0.1
        assert abs(offset_at(r, t) - truth(t)) <= bound


def test_repeatable_and_seed_sensitivity():
    model = ClockModel(noise=(NoiseComponent(0, 1e-22),))
    a = synth_phase(model, 5000, 0.1, seed=42)
    b = synth_phase(model, 5000, 0.1, seed=42)
    c = synth_phase(model, 5000, 0.1, seed=43)
    assert np.array_equal(a.phase_samples, b.phase_samples)
    assert not np.array_equal(a.phase_samples, c.phase_samples)


def test_offset_at_out_of_span():
    r = synth_phase(ClockModel(), 10, 1.0, seed=0)
    with pytest.raises(ClockSpanError):
        offset_at(r, -0.1)
    with pytest.raises(ClockSpanError):
        offset_at(r, 9.01)
    assert offset_at(r, 9.0) == 0.0


def test_offset_at_vectorized_interpolation():
    r = synth_phase(ClockModel(), 3, 1.0, seed=0)
    x = r.phase_samples.copy()
    x[:] = [0.0, 2e-12, 0.0]
    r = type(r)(model=r.model, phase_samples=x, tau0=1.0, seed=0)
    assert offset_at(r, 0.5) == pytest.approx(1e-12)
    out = offset_at(r, np.array([0.0, 0.5, 1.0]))
    assert out == pytest.approx([0.0, 1e-12, 2e-12])


def test_unsupported_alpha_rejected():
    with pytest.raises(ConfigError):
        NoiseComponent(alpha=3, h=1e-24)
    with pytest.raises(ConfigError):
        NoiseComponent(alpha=0, h=-1.0)


def test_white_fm_adev_calibration():
    # sigma_y(tau) = sqrt(h0/(2 tau)), checked at 6 s on a 1e6-sample run
    h0 = 1.058e-22
    r = synth_phase(ClockModel(noise=(NoiseComponent(0, h0),)), 1_000_000, 0.1,
                    seed=2024)
    data = PhaseData(r.phase_samples, 0.1)
    got = adev(data, 60)
    assert got == pytest.approx(2.9e-12, rel=0.10)
    # and the analytic law across two decades
    for m in (3, 10, 30, 100, 300):
        assert adev(data, m) == pytest.approx(math.sqrt(h0 / (2 * m * 0.1)), rel=0.10)


def test_flicker_fm_flat_adev():
    h = 4e-26
    r = synth_phase(ClockModel(noise=(NoiseComponent(-1, h),)), 300_000, 1.0,
                    seed=7)
    data = PhaseData(r.phase_samples, 1.0)
    flat = math.sqrt(2 * math.log(2) * h)
    for m in (8, 32, 128):
        assert adev(data, m) == pytest.approx(flat, rel=0.25)


def test_random_walk_fm_adev_slope():
    h = 1e-28
    r = synth_phase(ClockModel(noise=(NoiseComponent(-2, h),)), 200_000, 1.0,
                    seed=5)
    data = PhaseData(r.phase_samples, 1.0)
    for m in (4, 16, 64):
        assert adev(data, m) == pytest.approx(math.sqrt(2 * math.pi ** 2 * h * m / 3),
                                              rel=0.25)


def test_transfer_identity_when_zero_spec():
    upstream = synth_phase(ClockModel(noise=(NoiseComponent(0, 1e-24),)), 2000,
                           0.1, seed=3)
    out = make_transferred_reference(upstream, TransferSpec(), seed=99)
    assert np.array_equal(out.phase_samples, upstream.phase_samples)
    assert offset_at(out, 55.5) == offset_at(upstream, 55.5)


def test_transfer_residual_adev_anchor():
    spec = TransferSpec(white_pm_level=1.15e-14, floor_level=3.2e-16)
    res = synth_transfer_residual(spec, 400_000, 0.1, seed=11)
    got = adev(PhaseData(res, 0.1), 10)  # tau = 1 s
    assert got == pytest.approx(1.15e-14, rel=0.15)


def test_transfer_sine_bump_in_quarter_period_window():
    spec = TransferSpec(sine_amplitude=1e-12, sine_period=1000.0)
    res = synth_transfer_residual(spec, 500, 10.0, seed=0)
    cv = curve(PhaseData(res, 10.0), m_list=range(1, 160), estimator="tdev")
    tau_peak = cv.taus[np.argmax(cv.values)]
    assert 250.0 <= tau_peak <= 1000.0


def test_transfer_spec_validation():
    with pytest.raises(ConfigError):
        TransferSpec(white_pm_level=-1e-15)
    with pytest.raises(ConfigError):
        TransferSpec(sine_amplitude=1e-12, sine_period=0.0)


def test_synth_validation():
    with pytest.raises(ConfigError):
        synth_phase(ClockModel(), 1, 0.1, seed=0)
    with pytest.raises(ConfigError):
        synth_phase(ClockModel(), 10, 0.0, seed=0)
