"""Canonical scenario presets.

Each preset reproduces one of the lab experiments at desk scale:

* ``common_clock``       -- both event timers on the shared maser.
* ``independent_clocks`` -- site A on a free-running Rb standard.
* ``freq_transfer``      -- site B syntonized to A's Rb over a second
                            fiber (white-PM residual, thermal sinusoid).
* ``bias_low_consistency`` / ``bias_high_consistency`` -- absolute-offset
  accuracy runs with mismatched / matched source spectra, ambient off and
  reduced count rates (the accuracy criterion is statistics-bound, not
  rate-bound).
* ``spectral_consistency_longterm`` (+ ``_high`` twin) -- thermal-drift
  sensitivity of the two-way bias to the spectral mismatch, with ambient
  cycling accelerated so the effect resolves inside a ~700 s campaign.

Sources are tuned common-mode: each source's pump is chosen so that its
signal AND idler centers shift together, which is how paired sources are
brought into (or out of) spectral agreement in practice.  The gratings'
dispersion magnitude matches the fiber total (17 ps/nm/km * 50 km) so the
nonlocal cancellation is exact up to the energy-conservation Jacobian.
"""

from __future__ import annotations

from .config import Scenario, parse_config
from .source import idler_wavelength

__all__ = ["PRESET_NAMES", "preset_text", "load_preset", "pump_for_common_mode"]


def pump_for_common_mode(pump_a_nm: float, signal_a_nm: float,
                         signal_b_nm: float) -> float:
    """Pump wavelength giving source B the same signal->idler shift as A.

    With the pump tuned this way both centers move together, so the idler
    mismatch equals the signal mismatch (common mode).
    """
    idler_a = idler_wavelength(pump_a_nm, signal_a_nm)
    idler_b = idler_a - (signal_a_nm - signal_b_nm)
    return 1.0 / (1.0 / signal_b_nm + 1.0 / idler_b)


_PUMP_A = 780.0
# low-consistency source pair: 0.70 nm signal mismatch
_LOW_A, _LOW_B = 1561.24, 1560.54
# high-consistency source pair: 0.02 nm
_HIGH_A, _HIGH_B = 1560.26, 1560.24

_PUMP_B_LOW = pump_for_common_mode(_PUMP_A, _LOW_A, _LOW_B)
_PUMP_B_HIGH = pump_for_common_mode(_PUMP_A, _HIGH_A, _HIGH_B)


def _sources(lam_a, lam_b, pump_b, rate, u_a=0.0, u_b=0.0,
             bw_a=3.55, bw_b=3.5):
    return f"""
[source_a]
label = A
pump_nm = {_PUMP_A}
signal_center_nm = {lam_a}
signal_fwhm_nm = {bw_a}
pair_rate_hz = {rate}
center_uncertainty_nm = {u_a}

[source_b]
label = B
pump_nm = {pump_b!r}
signal_center_nm = {lam_b}
signal_fwhm_nm = {bw_b}
pair_rate_hz = {rate}
center_uncertainty_nm = {u_b}
"""


_CLOCKS_COMMON = """
[scenario]
n_runs = 100
master_seed = 20240501
common_reference = true

[clock_a]
label = maser
noise = 0:1.058e-26

[clock_b]
label = maser_b
noise = 0:1.058e-26
"""

# 20 kHz singles per channel at 0.77% per-arm survival -> ~385 coincidences
# per 2.5 s record, the operating point of the full-rate experiments
_RATE_FULL = 2.587e6
_ARM_LOSS_FULL = 19.264  # dB total per arm including detector-side coupling

_LINK_FULL = f"""
[link]
fiber_km = 50
dispersion_ps_nm_km = 17
loss_db_per_km = 0.2
fbg_dispersion_ps_nm = -850
fbg_placement = idler
signal_extra_loss_db = {_ARM_LOSS_FULL - 10.0}
idler_loss_db = {_ARM_LOSS_FULL}

[detectors]
efficiency = 0.65
jitter_fwhm_ps = 68
dark_rate_hz = 100
dead_time_ns = 50

[timer]
lsb_ps = 1
record_length_s = 2.5
cycle_period_s = 7
max_rate_hz = 40e3
"""


def _common_clock() -> str:
    return (_CLOCKS_COMMON
            + _sources(_LOW_A, _LOW_B, _PUMP_B_LOW, _RATE_FULL,
                       u_a=0.038, u_b=0.103)
            + _LINK_FULL)


def _independent_clocks() -> str:
    clocks = """
[scenario]
n_runs = 100
master_seed = 20240502
common_reference = false

[clock_a]
label = rb
noise = 0:1.058e-22

[clock_b]
label = maser
initial_offset_s = 5e-6
noise = 0:1.058e-26
"""
    return (clocks
            + _sources(_LOW_A, _LOW_B, _PUMP_B_LOW, _RATE_FULL,
                       u_a=0.038, u_b=0.103)
            + _LINK_FULL)


def _freq_transfer() -> str:
    clocks = """
[scenario]
n_runs = 100
master_seed = 20240503
common_reference = false
use_transfer = true

[clock_a]
label = rb
noise = 0:1.058e-22

[clock_b]
label = et_b_ref
initial_offset_s = 5e-6

[transfer]
white_pm_adev_1s = 1.15e-14
floor_adev = 3.2e-16
# thermal cycling of the transfer link, accelerated to desk scale
sine_amplitude_s = 6e-12
sine_period_s = 140
"""
    return (clocks
            + _sources(_LOW_A, _LOW_B, _PUMP_B_LOW, _RATE_FULL,
                       u_a=0.038, u_b=0.103)
            + _LINK_FULL)


# accuracy runs: same per-record coincidence statistics at ~2 kHz singles
_RATE_BIAS = 30.77e3
_LINK_BIAS = """
[link]
fiber_km = 50
dispersion_ps_nm_km = 17
loss_db_per_km = 0.2
fbg_dispersion_ps_nm = -850
fbg_placement = idler
signal_extra_loss_db = 0
idler_loss_db = 9.264

[detectors]
efficiency = 0.65
jitter_fwhm_ps = 68
dark_rate_hz = 100
dead_time_ns = 50

[timer]
lsb_ps = 1
record_length_s = 2.5
cycle_period_s = 7
max_rate_hz = 40e3
"""

_CLOCKS_BIAS = """
[scenario]
n_runs = 36
master_seed = 20240504
common_reference = true

[clock_a]
label = maser
noise = 0:1.058e-26

[clock_b]
label = maser_b
noise = 0:1.058e-26
"""


def _bias_low() -> str:
    return (_CLOCKS_BIAS
            + _sources(_LOW_A, _LOW_B, _PUMP_B_LOW, _RATE_BIAS,
                       u_a=0.038, u_b=0.103)
            + _LINK_BIAS)


def _bias_high() -> str:
    return (_CLOCKS_BIAS
            + _sources(_HIGH_A, _HIGH_B, _PUMP_B_HIGH, _RATE_BIAS,
                       u_a=0.037, u_b=0.044)
            + _LINK_BIAS)


# thermal-sensitivity runs: high coincidence statistics (asymmetric arms),
# ambient cycling accelerated in period and coupling strength
_RATE_SPECTRAL = 75.7e3
_LINK_SPECTRAL = """
[link]
fiber_km = 50
dispersion_ps_nm_km = 17
loss_db_per_km = 0.2
fbg_dispersion_ps_nm = -850
fbg_placement = idler
signal_extra_loss_db = 0
idler_loss_db = 0
temp_dispersion_ps_nm_km_k = -0.1

[detectors]
efficiency = 0.65
jitter_fwhm_ps = 68
dark_rate_hz = 100
dead_time_ns = 50

[timer]
lsb_ps = 1
record_length_s = 2.5
cycle_period_s = 7
max_rate_hz = 100e3

[ambient]
mean_temp_k = 293.15
sine_amplitude_k = 15
sine_period_s = 200
"""

_CLOCKS_SPECTRAL = """
[scenario]
n_runs = 100
master_seed = 20240505
common_reference = true

[clock_a]
label = maser
noise = 0:1.058e-26

[clock_b]
label = maser_b
noise = 0:1.058e-26
"""


def _spectral_low() -> str:
    return (_CLOCKS_SPECTRAL
            + _sources(_LOW_A, _LOW_B, _PUMP_B_LOW, _RATE_SPECTRAL,
                       u_a=0.038, u_b=0.103)
            + _LINK_SPECTRAL)


def _spectral_high() -> str:
    return (_CLOCKS_SPECTRAL
            + _sources(_HIGH_A, _HIGH_B, _PUMP_B_HIGH, _RATE_SPECTRAL,
                       u_a=0.037, u_b=0.044)
            + _LINK_SPECTRAL)


_PRESETS = {
    "common_clock": _common_clock,
    "independent_clocks": _independent_clocks,
    "freq_transfer": _freq_transfer,
    "bias_low_consistency": _bias_low,
    "bias_high_consistency": _bias_high,
    "spectral_consistency_longterm": _spectral_low,
    "spectral_consistency_longterm_high": _spectral_high,
}

PRESET_NAMES = tuple(_PRESETS)


def preset_text(name: str) -> str:
    """Raw config text of a named preset."""
    try:
        return _PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")


def load_preset(name: str) -> Scenario:
    return parse_config(preset_text(name))
