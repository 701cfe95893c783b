"""Acceptance criteria for the simulator, runnable as a suite.

Each ``criterion_*`` function exercises one end-to-end claim at its pinned
tolerance and returns a :class:`CriterionResult`.  The pytest module
``tests/test_acceptance.py`` asserts them one by one; the CLI ``selftest``
subcommand runs the same functions and prints one PASS/FAIL line each.
Heavy campaigns are cached per process so overlapping criteria share them.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, replace

import numpy as np

from . import csvio, stability
from .coincidence import CorrelationParams, identify
from .config import Scenario, swap_sites
from .errors import QttlabError
from .detect import TimeTagStream, DetectorSpec, TimerSpec
from .presets import load_preset
from .source import PairSourceSpec
from .stability import PhaseData, adev, curve, tdev
from .timescale import ClockModel, NoiseComponent, synth_phase
from .twoway import (predict_mean_offset, realize_clocks, resolve_threads,
                     run_campaign, simulate_record, bias_predict)

__all__ = ["CriterionResult", "run_all", "CRITERIA"]


@dataclass(frozen=True)
class CriterionResult:
    index: str
    name: str
    passed: bool
    detail: str
    runtime_s: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  [{self.index}] {self.name}: {self.detail}"


_campaigns: dict = {}


def _campaign(name: str, n_runs: int, variant: str = "", **overrides):
    key = (name, n_runs, variant)
    if key not in _campaigns:
        s = load_preset(name)
        if overrides:
            s = replace(s, **overrides)
        _campaigns[key] = run_campaign(s, n_runs=n_runs,
                                       threads=resolve_threads())
    return _campaigns[key]


def _timed(fn):
    def wrapper() -> CriterionResult:
        t0 = time.perf_counter()
        index, name, passed, detail = fn()
        return CriterionResult(index=index, name=name, passed=passed,
                               detail=detail, runtime_s=time.perf_counter() - t0)
    wrapper.__name__ = fn.__name__
    return wrapper


# ---------------------------------------------------------------------------

@_timed
def criterion_1():
    """Closed-form bias vectors: central values exact, uncertainties to 1%."""
    checks = []
    b1 = bias_predict(50.0, 17.0, 1561.24, 1560.54, 0.038, 0.103)
    checks.append(b1.tau_prime == 50.0 * 17.0 * (1561.24 - 1560.54))
    checks.append(abs(b1.tau_prime - 595.0) < 1e-9)
    checks.append(abs(b1.uncertainty - 93.3) / 93.3 < 0.01)
    b2 = bias_predict(50.0, 17.0, 1560.26, 1560.24, 0.037, 0.044)
    checks.append(b2.tau_prime == 50.0 * 17.0 * (1560.26 - 1560.24))
    checks.append(abs(b2.tau_prime - 17.0) < 1e-9)
    checks.append(abs(b2.uncertainty - 48.9) / 48.9 < 0.01)
    detail = (f"595-vector: {b1.tau_prime:.6f} +- {b1.uncertainty:.4f} ps; "
              f"17-vector: {b2.tau_prime:.6f} +- {b2.uncertainty:.4f} ps")
    return "1", "wavelength-mismatch bias vectors", all(checks), detail


@_timed
def criterion_2():
    """With/without-fiber bias difference vs the noise-off delay oracle."""
    s = load_preset("bias_low_consistency")
    with_f = _campaign("bias_low_consistency", 36)
    without = _campaign("bias_low_consistency", 36, variant="nofiber",
                        link=replace(s.link, fiber_on=False))
    tw, to = with_f.t0_ps(), without.t0_ps()
    sem = math.hypot(tw.std(ddof=1) / math.sqrt(tw.size),
                     to.std(ddof=1) / math.sqrt(to.size))
    sim_diff = tw.mean() - to.mean()
    oracle_diff = (predict_mean_offset(s, 1.0)
                   - predict_mean_offset(replace(s, link=replace(s.link, fiber_on=False)), 1.0))
    closed_form = 50.0 * 17.0 * (s.source_a.signal_center - s.source_b.signal_center)
    ratio = oracle_diff / closed_form
    ok = abs(sim_diff - oracle_diff) <= 3.0 * sem and 0.5 < ratio < 2.0
    detail = (f"sim diff {sim_diff:.2f} ps vs oracle {oracle_diff:.2f} ps "
              f"(3 sigma = {3 * sem:.2f} ps); oracle/closed-form 595 ps factor "
              f"= {ratio:.4f}; lab-measured analogue 524.7 +- 25.3 ps")
    return "2", "fiber on/off bias difference", ok, detail


def _width_scenario(fbg_on: bool) -> Scenario:
    s = load_preset("common_clock")
    link = replace(s.link, idler_loss_db=9.264,
                   fbg_dispersion_ps_nm=s.link.fbg_dispersion_ps_nm if fbg_on else 0.0)
    corr = s.correlation if fbg_on else replace(
        s.correlation, fine_span=12000.0, fine_bin=8.0)
    timer = replace(s.timer, max_rate=250e3)
    return replace(s, link=link, correlation=corr, timer=timer)


def _forward_peak(s: Scenario):
    clock_a, clock_b = realize_clocks(s, 6.0, s.master_seed)
    tags = simulate_record(s, 0, 1.0, s.master_seed, clock_a, clock_b)
    return identify(tags["D1"], tags["D4"], s.correlation)


@_timed
def criterion_3():
    """Coincidence width 120 +- 12 ps with compensation; >= 5x wider without.

    Runs the full-rate link at a brighter idler arm so the single-record
    width estimate is statistics-limited at the ~2 ps level.
    """
    r_on = _forward_peak(_width_scenario(fbg_on=True))
    r_off = _forward_peak(_width_scenario(fbg_on=False))
    ok = (abs(r_on.fwhm - 120.0) <= 12.0) and (r_off.fwhm >= 5.0 * 120.0)
    detail = (f"compensated FWHM {r_on.fwhm:.1f} ps (N={r_on.n_coincidences}); "
              f"uncompensated {r_off.fwhm:.0f} ps = {r_off.fwhm / 120.0:.1f}x")
    return "3", "dispersion-compensated coincidence width", ok, detail


@_timed
def criterion_4():
    """Short-term precision within 2x of 2.6 ps (per-run sigma and TDEV(7 s))."""
    series = _campaign("common_clock", 100)
    sigmas = np.array([s.sigma for s in series.samples])
    med_sigma = float(np.median(sigmas))
    data, _ = series.longest_uniform_stretch()
    tdev7 = tdev(data, 1) * 1e12
    lo, hi = 2.6 / 2.0, 2.6 * 2.0
    ok = lo <= med_sigma <= hi and lo <= tdev7 <= hi
    detail = (f"median per-run sigma {med_sigma:.2f} ps, TDEV(7 s) {tdev7:.2f} ps "
              f"(window [{lo:.1f}, {hi:.1f}] around 2.6 ps)")
    return "4", "short-term offset precision", ok, detail


@_timed
def criterion_5a():
    """Common-clock TDEV log-log slope -0.5 +- 0.15 (white-PM range).

    Uses the reduced-rate common-clock configuration so a 240-run series
    keeps the slope-estimator scatter (~0.05) well inside the window;
    the full-rate preset's slope is the same statistic at 2.4x the noise.
    """
    series = _campaign("bias_low_consistency", 240)
    data, _ = series.longest_uniform_stretch()
    m_list = [1, 2, 3, 4, 6, 8, 12, 16, 24, 32]
    cv = curve(data, m_list, estimator="tdev")
    slope = float(np.polyfit(np.log(cv.taus), np.log(cv.values), 1)[0])
    ok = abs(slope - (-0.5)) <= 0.15
    detail = f"slope {slope:.3f} over tau = 7..{7 * m_list[-1]} s"
    return "5a", "white-PM TDEV slope", ok, detail


@_timed
def criterion_5b():
    """Frequency-transfer preset: TDEV bump inside [P/4, P] of the link sinusoid."""
    s = load_preset("freq_transfer")
    period = s.transfer.sine_period
    series = _campaign("freq_transfer", 80)
    data, _ = series.longest_uniform_stretch()
    m_max = len(data) // 3
    cv = curve(data, range(1, m_max + 1), estimator="tdev")
    tau_peak = float(cv.taus[int(np.argmax(cv.values))])
    ok = period / 4.0 <= tau_peak <= period
    detail = (f"TDEV maximum at tau = {tau_peak:.0f} s, window "
              f"[{period / 4:.0f}, {period:.0f}] s")
    return "5b", "transfer-link thermal bump placement", ok, detail


@_timed
def criterion_5c():
    """Independent-clock preset ADEV tracks the configured 2.9e-12 at 6 s.

    The series is sampled on the 7 s cycle grid, so the first available
    point is tau = 7 s; it is bridged to 6 s with the white-FM sqrt(tau)
    law the preset's noise model follows.
    """
    series = _campaign("independent_clocks", 60)
    data, _ = series.longest_uniform_stretch()
    adev7 = adev(data, 1)
    adev6_equivalent = adev7 * math.sqrt(7.0 / 6.0)
    target = 2.9e-12
    ok = abs(adev6_equivalent - target) / target <= 0.30
    detail = (f"ADEV(7 s) {adev7:.3e} -> 6 s equivalent {adev6_equivalent:.3e} "
              f"vs 2.9e-12 ({100 * (adev6_equivalent / target - 1):+.1f}%)")
    return "5c", "independent-clock short-term ADEV", ok, detail


@_timed
def criterion_6():
    """Thermal TDEV plateau scales with the spectral mismatch (35x / 3)."""
    s_low = load_preset("spectral_consistency_longterm")
    period = s_low.ambient.sine_period
    low = _campaign("spectral_consistency_longterm", 100)
    high = _campaign("spectral_consistency_longterm_high", 100)
    m_window = [m for m in range(1, 34)
                if period / 4.0 <= m * 7.0 <= period]

    def plateau(series):
        data, _ = series.longest_uniform_stretch()
        cv = curve(data, m_window, estimator="tdev")
        return float(np.max(cv.values))

    p_low, p_high = plateau(low), plateau(high)
    ratio = p_low / p_high
    mismatch_ratio = 0.70 / 0.02
    ok = mismatch_ratio / 3.0 <= ratio <= mismatch_ratio * 3.0
    detail = (f"plateau ratio {ratio:.1f} (low {p_low * 1e12:.2f} ps / "
              f"high {p_high * 1e12:.2f} ps), window around {mismatch_ratio:.0f}x")
    return "6", "spectral-consistency thermal stability", ok, detail


# --- criterion 7: definitional brute-force oracles ------------------------

def _adev_brute(x, tau0, m):
    n = len(x)
    terms = [(x[i + 2 * m] - 2 * x[i + m] + x[i]) ** 2 for i in range(n - 2 * m)]
    return math.sqrt(sum(terms) / (2 * len(terms) * (m * tau0) ** 2))


def _mdev_brute(x, tau0, m):
    n = len(x)
    outer = []
    for j in range(n - 3 * m + 1):
        inner = sum(x[i + 2 * m] - 2 * x[i + m] + x[i] for i in range(j, j + m))
        outer.append(inner ** 2)
    return math.sqrt(sum(outer) / (2 * m ** 2 * (m * tau0) ** 2 * len(outer)))


def _tdev_brute(x, tau0, m):
    return m * tau0 / math.sqrt(3.0) * _mdev_brute(x, tau0, m)


@_timed
def criterion_7():
    """Estimators match brute-force sums (1e-12 rel); white-FM round trip 10%."""
    rng = np.random.default_rng(20240517)
    worst = 0.0
    cases = 0
    while cases < 1000:
        n = int(rng.integers(3, 65))
        tau0 = float(rng.uniform(0.1, 10.0))
        x = rng.standard_normal(n) * 10.0 ** rng.integers(-12, 3)
        data = PhaseData(x, tau0)
        m_candidates = [m for m in range(1, n // 2 + 1)]
        m = int(rng.choice(m_candidates))
        if n >= 2 * m + 1:
            worst = max(worst, abs(adev(data, m) / max(_adev_brute(x, tau0, m), 1e-300) - 1.0))
            cases += 1
        if n >= 3 * m:
            worst = max(worst, abs(stability.mdev(data, m) / max(_mdev_brute(x, tau0, m), 1e-300) - 1.0))
            worst = max(worst, abs(tdev(data, m) / max(_tdev_brute(x, tau0, m), 1e-300) - 1.0))
    h0 = 1.058e-22
    tau0 = 0.1
    real = synth_phase(ClockModel(noise=(NoiseComponent(0, h0),)), 1_000_000,
                       tau0, seed=321)
    data = PhaseData(real.phase_samples, tau0)
    worst_wfm = 0.0
    for m in (1, 3, 10, 30, 100):
        predicted = math.sqrt(h0 / (2.0 * m * tau0))
        worst_wfm = max(worst_wfm, abs(adev(data, m) / predicted - 1.0))
    ok = worst <= 1e-12 and worst_wfm <= 0.10
    detail = (f"worst brute-force rel. dev {worst:.2e} over {cases} cases; "
              f"white-FM round trip worst {100 * worst_wfm:.1f}% over tau 0.1..10 s")
    return "7", "estimator definitional equivalence", ok, detail


# --- criterion 8: protocol invariants --------------------------------------

def _invariant_scenario(clock_b_offset: float = 0.0,
                        asymmetric: bool = False) -> Scenario:
    """Noise-free high-statistics scenario for exact protocol checks."""
    clock_a = ClockModel(label="ref_a")
    clock_b = ClockModel(initial_offset=clock_b_offset, label="ref_b")
    src = dict(pump_wavelength=780.0, signal_center=1560.5,
               signal_bandwidth_fwhm=3.5, pair_rate=200e3,
               correlation_jitter_fwhm=40.0)
    from .config import LinkParams
    link = LinkParams(fiber_km=50.0, loss_db_per_km=0.0,
                      signal_extra_loss_db=3.0103, idler_loss_db=3.0103,
                      forward_extra_delay_ps=137.0 if asymmetric else 0.0,
                      backward_extra_delay_ps=7321.0 if asymmetric else 0.0)
    det = DetectorSpec(efficiency=1.0, jitter_fwhm=0.0, dark_rate=0.0,
                       dead_time=0.0)
    timer = TimerSpec(lsb=1.0, record_length=0.5, cycle_period=1.0,
                      max_rate=500e3)
    return Scenario(
        clock_a=clock_a, clock_b=clock_b,
        source_a=PairSourceSpec(label="A", **src),
        source_b=PairSourceSpec(label="B", **src),
        link=link, detectors=(det, det, det, det), timer=timer,
        n_runs=8, master_seed=424242)


@_timed
def criterion_8():
    """Zero-offset runs at the LSB floor; 1 us recovery; exact antisymmetry."""
    lsb = 1.0
    zero = run_campaign(_invariant_scenario(), threads=resolve_threads())
    worst_zero = float(np.max(np.abs(zero.t0_ps())))
    shifted = run_campaign(_invariant_scenario(clock_b_offset=1e-6),
                           threads=resolve_threads())
    worst_shift = float(np.max(np.abs(shifted.t0_ps() - 1e6)))
    asym = _invariant_scenario(clock_b_offset=3.7e-7, asymmetric=True)
    direct = run_campaign(asym, threads=resolve_threads())
    mirrored = run_campaign(swap_sites(asym), threads=resolve_threads())
    exact = bool(np.all(mirrored.t0_ps() == -direct.t0_ps()))
    ok = worst_zero <= lsb and worst_shift <= lsb and exact
    detail = (f"max |t0| {worst_zero:.3f} ps (zero offset); "
              f"max |t0 - 1 us| {worst_shift:.3f} ps; "
              f"site-swap negation exact: {exact}")
    return "8", "protocol invariants", ok, detail


@_timed
def criterion_9():
    """Byte-identical outputs across worker counts; identify under 200 ms."""
    import io
    s = load_preset("bias_low_consistency")
    blobs = []
    for threads in (1, 2):
        series = run_campaign(s, n_runs=6, threads=threads)
        buf = io.StringIO()
        csvio.write_offsets_csv(series, buf)
        blobs.append(buf.getvalue())
    identical = blobs[0] == blobs[1]

    rng = np.random.default_rng(2024)
    T = 2.5e12
    n_each, n_co = 50_000, 400
    t_pairs = np.sort(rng.random(n_co)) * T
    ta = np.sort(np.clip(np.concatenate(
        [t_pairs + rng.normal(0, 36, n_co), rng.random(n_each - n_co) * T]), 0, T))
    tb = np.sort(np.clip(np.concatenate(
        [t_pairs + 2.45e8 + rng.normal(0, 36, n_co), rng.random(n_each - n_co) * T]), 0, T))
    a = TimeTagStream("D1", np.rint(ta).astype(np.int64), 1.0, 0)
    b = TimeTagStream("D4", np.rint(tb).astype(np.int64), 1.0, 0)
    p = CorrelationParams()
    identify(a, b, p)  # warm-up (FFT plans, allocator)
    best = math.inf
    for _ in range(3):
        t0 = time.perf_counter()
        identify(a, b, p)
        best = min(best, time.perf_counter() - t0)
    ok = identical and best < 0.200
    detail = (f"thread-count invariance: {identical}; "
              f"identify on 2x50k tags: {best * 1e3:.0f} ms (< 200 ms)")
    return "9", "determinism and throughput", ok, detail


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5a,
            criterion_5b, criterion_5c, criterion_6, criterion_7, criterion_8,
            criterion_9)


def run_all(only: set[str] | None = None) -> list[CriterionResult]:
    results = []
    for fn in CRITERIA:
        index = fn.__name__.removeprefix("criterion_")
        if only and index not in only:
            continue
        results.append(fn())
    return results
