import numpy as np
import pytest

from qttlab.errors import ConfigError
from qttlab.source import (FWHM_TO_SIGMA, PairSourceSpec, emit_pairs,
                           idler_wavelength)


def spec(**kw):
    base = dict(pump_wavelength=780.0, signal_center=1561.24,
                signal_bandwidth_fwhm=3.55, pair_rate=1e5,
                correlation_jitter_fwhm=71.8, label="A")
    base.update(kw)
    return PairSourceSpec(**base)


def test_zero_rate_gives_empty_batch():
    batch = emit_pairs(spec(pair_rate=0.0), 0.0, 1.0, seed=1)
    assert len(batch) == 0


def test_idler_wavelength_energy_conservation():
    # 1/780 - 1/1561.24 inverted by hand: 1558.762 nm
    lam_i = idler_wavelength(780.0, 1561.24)
    assert lam_i == pytest.approx(1558.7620, abs=5e-4)
    assert 1.0 / 1561.24 + 1.0 / lam_i == pytest.approx(1.0 / 780.0, abs=1e-18)


def test_poisson_count_and_sorted_times():
    rate, duration = 1e6, 1.0
    batch = emit_pairs(spec(pair_rate=rate), 10.0, duration, seed=5)
    assert abs(len(batch) - rate * duration) < 5 * np.sqrt(rate * duration)
    assert np.all(np.diff(batch.t_emit_ps) > 0)
    assert batch.t_emit_ps[0] >= 0.0
    assert batch.t_emit_ps[-1] <= duration * 1e12
    assert batch.ref_s == 10.0


def test_every_event_satisfies_pair_invariant():
    batch = emit_pairs(spec(), 0.0, 0.5, seed=7)
    residual = batch.pair_invariant_residual(780.0)
    assert residual.max() < 1e-6


def test_spectrum_center_and_width():
    batch = emit_pairs(spec(pair_rate=4e5), 0.0, 0.5, seed=3)
    n = len(batch)
    assert n > 1e5
    lam = batch.lambda_s
    se = lam.std(ddof=1) / np.sqrt(n)
    assert abs(lam.mean() - 1561.24) < 3 * se
    fwhm = lam.std(ddof=1) / FWHM_TO_SIGMA
    assert fwhm == pytest.approx(3.55, rel=0.05)


def test_correlation_jitter_width_and_splitting():
    batch = emit_pairs(spec(pair_rate=2e5), 0.0, 0.5, seed=9)
    dt = batch.dt_si_ps
    assert abs(dt.mean()) < 5 * dt.std(ddof=1) / np.sqrt(len(batch))
    assert dt.std(ddof=1) / FWHM_TO_SIGMA == pytest.approx(71.8, rel=0.05)
    sig = batch.signal_arrivals()
    idl = batch.idler_arrivals()
    # signal minus idler recovers the stored emission offset (float
    # cancellation at ~5e11 ps leaves ~1e-4 ps of rounding)
    assert np.allclose(sig.t_ps - idl.t_ps, dt, rtol=0, atol=1e-3)
    assert np.array_equal(sig.lambda_nm, batch.lambda_s)
    assert np.array_equal(idl.lambda_nm, batch.lambda_i)


def test_event_view():
    batch = emit_pairs(spec(pair_rate=1e4), 0.0, 0.1, seed=2)
    ev = batch[3]
    assert ev.t_emit == batch.t_emit_ps[3]
    assert 1.0 / ev.lambda_s + 1.0 / ev.lambda_i == pytest.approx(1.0 / 780.0,
                                                                  abs=1e-9)


def test_determinism_per_seed():
    a = emit_pairs(spec(), 0.0, 0.2, seed=11)
    b = emit_pairs(spec(), 0.0, 0.2, seed=11)
    c = emit_pairs(spec(), 0.0, 0.2, seed=12)
    assert np.array_equal(a.t_emit_ps, b.t_emit_ps)
    assert np.array_equal(a.lambda_s, b.lambda_s)
    assert len(c) != len(a) or not np.array_equal(a.t_emit_ps, c.t_emit_ps)


def test_mean_idler_includes_convexity_shift():
    s = spec()
    assert s.mean_idler_wavelength() > s.idler_center
    narrow = spec(signal_bandwidth_fwhm=0.0)
    assert narrow.mean_idler_wavelength() == narrow.idler_center


def test_spec_validation():
    with pytest.raises(ConfigError):
        spec(pump_wavelength=-1.0)
    with pytest.raises(ConfigError):
        spec(signal_center=500.0)  # below pump
    with pytest.raises(ConfigError):
        spec(pair_rate=-5.0)
    with pytest.raises(ConfigError):
        emit_pairs(spec(), 0.0, -1.0, seed=0)
