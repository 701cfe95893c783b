import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qttlab.errors import InsufficientDataError
from qttlab.stability import PhaseData, StabilityCurve, adev, curve, default_m_grid, mdev, tdev


def brute_adev(x, tau0, m):
    n = len(x)
    terms = [(x[i + 2 * m] - 2 * x[i + m] + x[i]) ** 2 for i in range(n - 2 * m)]
    return math.sqrt(sum(terms) / (2 * len(terms) * (m * tau0) ** 2))


def brute_mdev(x, tau0, m):
    n = len(x)
    sums = []
    for j in range(n - 3 * m + 1):
        sums.append(sum(x[i + 2 * m] - 2 * x[i + m] + x[i]
                        for i in range(j, j + m)) ** 2)
    return math.sqrt(sum(sums) / (2 * m * m * (m * tau0) ** 2 * len(sums)))


def test_constant_series_is_zero():
    data = PhaseData(np.full(50, 3.7e-9), 1.0)
    assert adev(data, 5) == 0.0
    assert mdev(data, 5) == 0.0
    assert tdev(data, 5) == 0.0


def test_pure_frequency_offset_gives_zero_adev():
    # second differences of a linear ramp vanish identically
    x = 1e-9 * np.arange(200) * 0.5
    data = PhaseData(x, 0.5)
    for m in (1, 7, 40):
        assert adev(data, m) == pytest.approx(0.0, abs=1e-22)


def test_mdev_equals_adev_at_m1(rng):
    data = PhaseData(rng.standard_normal(64) * 1e-12, 2.0)
    assert mdev(data, 1) == pytest.approx(adev(data, 1), rel=1e-12)


def test_tdev_mdev_ratio_exact(rng):
    data = PhaseData(rng.standard_normal(90) * 1e-12, 7.0)
    for m in (1, 3, 10):
        assert tdev(data, m) == pytest.approx(m * 7.0 / math.sqrt(3.0) * mdev(data, m),
                                              rel=1e-15)


def test_white_pm_slope_laws(rng):
    x = rng.standard_normal(200_000) * 5e-12
    data = PhaseData(x, 1.0)
    assert mdev(data, 8) / mdev(data, 2) == pytest.approx(0.125, rel=0.2)
    assert tdev(data, 8) / tdev(data, 2) == pytest.approx(0.5, rel=0.2)


def test_scale_equivariance_and_shift_invariance(rng):
    x = rng.standard_normal(150) * 1e-11
    data = PhaseData(x, 3.0)
    scaled = PhaseData(4.25 * x, 3.0)
    shifted = PhaseData(x + 7.7e-8, 3.0)
    for m in (1, 4, 11):
        assert adev(scaled, m) == pytest.approx(4.25 * adev(data, m), rel=1e-12)
        assert tdev(scaled, m) == pytest.approx(4.25 * tdev(data, m), rel=1e-12)
        assert adev(shifted, m) == pytest.approx(adev(data, m), rel=1e-12)
        assert mdev(shifted, m) == pytest.approx(mdev(data, m), rel=1e-12)


@settings(max_examples=120, deadline=None)
@given(st.integers(3, 64), st.integers(0, 2 ** 32 - 1), st.integers(1, 21))
def test_matches_bruteforce_definitions(n, seed, m):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    tau0 = float(rng.uniform(0.05, 20.0))
    data = PhaseData(x, tau0)
    if n >= 2 * m + 1:
        assert adev(data, m) == pytest.approx(brute_adev(x, tau0, m), rel=1e-12)
    if n >= 3 * m:
        assert mdev(data, m) == pytest.approx(brute_mdev(x, tau0, m), rel=1e-12)


def test_length_guards():
    data = PhaseData(np.zeros(10), 1.0)
    with pytest.raises(InsufficientDataError):
        adev(data, 5)   # needs 2m+1 = 11
    with pytest.raises(InsufficientDataError):
        mdev(data, 4)   # needs 3m = 12
    assert adev(data, 4) == 0.0
    assert mdev(data, 3) == 0.0
    with pytest.raises(InsufficientDataError):
        PhaseData(np.zeros(2), 1.0)


def test_default_grid_octaves_plus_limit():
    assert default_m_grid(10, "tdev") == [1, 2, 3]
    assert default_m_grid(10, "adev") == [1, 2, 4]
    assert default_m_grid(100, "tdev") == [1, 2, 4, 8, 16, 32, 33]


def test_curve_white_pm_loglog_slope(rng):
    x = rng.standard_normal(4000) * 2e-12
    cv = curve(PhaseData(x, 7.0), estimator="tdev")
    slope = np.polyfit(np.log(cv.taus), np.log(cv.values), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.15)
    assert cv.n_terms[0] == 4000 - 2
    assert np.all(np.diff(cv.taus) > 0)


def test_curve_sine_bump_location():
    period, tau0 = 1000.0, 10.0
    t = np.arange(1500) * tau0
    x = 1e-12 * np.sin(2 * np.pi * t / period)
    cv = curve(PhaseData(x, tau0), m_list=range(1, 120), estimator="tdev")
    tau_peak = cv.taus[np.argmax(cv.values)]
    assert period / 4 <= tau_peak <= period


def test_curve_rejects_unknown_estimator(rng):
    data = PhaseData(rng.standard_normal(30), 1.0)
    with pytest.raises(ValueError):
        curve(data, estimator="hadamard")


def test_error_bars_shape(rng):
    cv = curve(PhaseData(rng.standard_normal(64), 1.0), estimator="adev")
    bars = cv.error_bars()
    assert bars.shape == cv.values.shape
    assert np.all(bars > 0)
