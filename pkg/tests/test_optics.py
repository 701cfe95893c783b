import numpy as np
import pytest

from qttlab.errors import ConfigError
from qttlab.optics import (AmbientModel, OpticalElement, OpticalPath,
                           net_dispersion, path_delay, propagate)
from qttlab.source import ArrivalBatch, FWHM_TO_SIGMA, emit_pairs, PairSourceSpec

FIBER = OpticalElement(base_delay=2.45e8, dispersion=850.0, ref_wavelength=1560.0,
                       loss_db=10.0, label="fiber")
FBG = OpticalElement(dispersion=-825.0, ref_wavelength=1560.0, label="fbg")


def test_on_reference_wavelength_base_delay_only():
    path = OpticalPath(elements=(FIBER, FBG))
    assert path_delay(1560.0, path) == pytest.approx(2.45e8, rel=1e-15)


def test_dispersion_offset_example():
    # 850 ps/nm at +0.70 nm off reference: +595 ps excess
    path = OpticalPath(elements=(FIBER,))
    excess = path_delay(1560.0 + 0.70, path) - path_delay(1560.0, path)
    assert excess == pytest.approx(595.0, rel=1e-12)


def test_partial_compensation_residual_slope():
    path = OpticalPath(elements=(FIBER, FBG))
    assert net_dispersion(path) == pytest.approx(25.0)
    # 3.5 nm spread leaves <= 87.5 ps of spread instead of ~2975 ps
    spread = abs(path_delay(1561.75, path) - path_delay(1558.25, path))
    assert spread == pytest.approx(87.5, rel=1e-9)
    uncomp = abs(path_delay(1561.75, OpticalPath((FIBER,)))
                 - path_delay(1558.25, OpticalPath((FIBER,))))
    assert uncomp == pytest.approx(2975.0, rel=1e-9)


def test_net_dispersion_sums():
    assert net_dispersion(OpticalPath(())) == 0.0
    assert net_dispersion(OpticalPath((FBG, FBG))) == pytest.approx(-1650.0)


def test_affine_in_wavelength_and_order_invariance():
    p1 = OpticalPath(elements=(FIBER, FBG))
    p2 = OpticalPath(elements=(FBG, FIBER))
    lams = np.array([1555.0, 1560.0, 1565.0])
    d1 = path_delay(lams, p1)
    d2 = path_delay(lams, p2)
    assert np.allclose(d1, d2, rtol=0, atol=1e-9)
    # affine: slope between any two wavelengths equals net dispersion
    slope = (d1[2] - d1[0]) / (lams[2] - lams[0])
    assert slope == pytest.approx(net_dispersion(p1), rel=1e-12)


def test_temperature_coefficients():
    el = OpticalElement(base_delay=1000.0, dispersion=10.0, ref_wavelength=1560.0,
                        temp_delay_coeff=2.0, temp_dispersion_coeff=-0.5)
    path = OpticalPath((el,))
    amb = AmbientModel(sine_amplitude=3.0, sine_period=100.0)
    t_quarter = 25.0  # sin peak: dT = +3 K
    expect = (1000.0 + 2.0 * 3.0) + (10.0 + (-0.5) * 3.0) * 2.0
    assert path_delay(1562.0, path, t_quarter, amb) == pytest.approx(expect, rel=1e-9)
    assert path_delay(1562.0, path, 0.0, amb) == pytest.approx(1000.0 + 20.0, rel=1e-9)


def test_propagate_lossless_keeps_all_sorted():
    t = np.array([5.0, 1.0, 3.0])
    lam = np.array([1560.0, 1561.0, 1559.0])
    out = propagate(ArrivalBatch(0.0, t, lam), OpticalPath((FBG,)), seed=1)
    assert len(out) == 3
    assert np.all(np.diff(out.t_ps) >= 0)


def test_propagate_zero_dispersion_all_base_delay():
    el = OpticalElement(base_delay=123.0)
    t = np.sort(np.random.default_rng(0).random(100)) * 1e6
    lam = np.linspace(1550, 1570, 100)
    out = propagate(ArrivalBatch(0.0, t, lam), OpticalPath((el,)), seed=1)
    assert np.allclose(out.t_ps - t, 123.0, rtol=0, atol=1e-9)


def test_propagate_attenuation_fraction():
    n = 100_000
    t = np.sort(np.random.default_rng(1).random(n)) * 1e9
    lam = np.full(n, 1560.0)
    out = propagate(ArrivalBatch(0.0, t, lam),
                    OpticalPath((FIBER,)), seed=2)
    frac = len(out) / n
    assert frac == pytest.approx(0.10, abs=5 * np.sqrt(0.1 * 0.9 / n))


def test_propagate_deterministic():
    n = 1000
    t = np.sort(np.random.default_rng(3).random(n)) * 1e9
    batch = ArrivalBatch(0.0, t, np.full(n, 1561.0))
    a = propagate(batch, OpticalPath((FIBER,)), seed=7)
    b = propagate(batch, OpticalPath((FIBER,)), seed=7)
    assert np.array_equal(a.t_ps, b.t_ps)


def test_nonlocal_cancellation_minimizes_pair_spread():
    """Sweep the compensator magnitude: the signal-idler arrival spread is
    smallest when it matches the fiber dispersion (anti-correlated pair
    wavelengths cancel the broadening nonlocally)."""
    src = PairSourceSpec(pump_wavelength=780.0, signal_center=1561.24,
                         signal_bandwidth_fwhm=3.55, pair_rate=2e5,
                         correlation_jitter_fwhm=10.0, label="A")
    pairs = emit_pairs(src, 0.0, 0.25, seed=42)
    fiber = OpticalPath((OpticalElement(base_delay=2.45e8, dispersion=850.0,
                                        ref_wavelength=1560.0),))
    spreads = []
    scales = [0.94, 0.97, 1.0, 1.03, 1.06]
    for scale in scales:
        fbg = OpticalPath((OpticalElement(dispersion=-850.0 * scale,
                                          ref_wavelength=1558.8),))
        diff = ((pairs.t_emit_ps + 0.5 * pairs.dt_si_ps + path_delay(pairs.lambda_s, fiber))
                - (pairs.t_emit_ps - 0.5 * pairs.dt_si_ps + path_delay(pairs.lambda_i, fbg)))
        spreads.append(np.std(diff))
    assert np.argmin(spreads) == scales.index(1.0)


def test_element_validation():
    with pytest.raises(ConfigError):
        OpticalElement(loss_db=-1.0)
    with pytest.raises(ConfigError):
        OpticalElement(base_delay=-5.0)
    with pytest.raises(ConfigError):
        AmbientModel(sine_amplitude=1.0, sine_period=0.0)
