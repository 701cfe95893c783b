"""Local time scales: deterministic clock terms plus power-law noise.

A clock is described by a :class:`ClockModel` (offset, fractional frequency
offset, drift, and a list of power-law noise components of the fractional
frequency PSD ``S_y(f) = h_alpha * f**alpha``).  :func:`synth_phase` turns a
model into a :class:`ClockRealization`: time-offset samples ``x_i`` in
seconds on a uniform grid, reproducible from a 64-bit seed.

Synthesis strategy per component:

* alpha = 0 (white FM): i.i.d. Gaussian ``y`` with variance ``h0/(2*tau0)``,
  integrated to phase.  Exact, so measured ADEV tracks sqrt(h0/(2*tau))
  at every averaging time.
* alpha = +2 (white PM): i.i.d. Gaussian phase with variance
  ``h2/(8*pi**2*tau0)``.
* alpha = -2 (random-walk FM): random walk in ``y`` with step variance
  ``2*pi**2*h_{-2}*tau0``, integrated to phase.
* alpha = +-1 (flicker): frequency-domain shaping of a white sequence with
  an ``f**(alpha/2)`` amplitude profile, warm-up margin discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft

from .errors import ClockSpanError, ConfigError

__all__ = [
    "NoiseComponent",
    "ClockModel",
    "ClockRealization",
    "TransferSpec",
    "synth_phase",
    "offset_at",
    "make_transferred_reference",
    "synth_transfer_residual",
]

SUPPORTED_ALPHAS = (-2, -1, 0, 1, 2)


@dataclass(frozen=True)
class NoiseComponent:
    """One power-law term of the fractional-frequency PSD S_y(f) = h * f**alpha."""

    alpha: int
    h: float

    def __post_init__(self):
        if self.alpha not in SUPPORTED_ALPHAS:
            raise ConfigError(f"unsupported noise exponent alpha={self.alpha}; "
                              f"supported: {SUPPORTED_ALPHAS}")
        if not (self.h >= 0 and math.isfinite(self.h)):
            raise ConfigError("noise amplitude h must be finite and >= 0")


@dataclass(frozen=True)
class ClockModel:
    """Deterministic clock terms plus noise: x(t) = x0 + y0*t + d*t**2/2 + noise."""

    initial_offset: float = 0.0      # seconds
    frac_freq_offset: float = 0.0    # dimensionless
    freq_drift: float = 0.0          # 1/seconds
    noise: tuple[NoiseComponent, ...] = ()
    label: str = "clock"

    def __post_init__(self):
        object.__setattr__(self, "noise", tuple(self.noise))
        for v in (self.initial_offset, self.frac_freq_offset, self.freq_drift):
            if not math.isfinite(v):
                raise ConfigError("clock model terms must be finite")


@dataclass(frozen=True)
class ClockRealization:
    """Sampled time offset of a clock on the grid t_i = i*tau0, i = 0..n-1.

    Immutable after synthesis; safe for concurrent reads.  Regenerating with
    the same (model, n, tau0, seed) reproduces identical samples.
    """

    model: ClockModel
    phase_samples: np.ndarray   # seconds
    tau0: float                 # seconds
    seed: int

    def __post_init__(self):
        x = np.asarray(self.phase_samples, dtype=float)
        object.__setattr__(self, "phase_samples", x)
        if x.size < 2:
            raise ConfigError("realization needs at least 2 phase samples")

    @property
    def span(self) -> float:
        """Last valid query time in seconds (grid starts at 0)."""
        return (self.phase_samples.size - 1) * self.tau0


def _flicker_shaped(alpha: int, h: float, n: int, tau0: float,
                    rng: np.random.Generator) -> np.ndarray:
    """Fractional-frequency series with S_y(f) = h * f**alpha via FFT shaping."""
    warm = max(n // 2, 4096)
    m = scipy.fft.next_fast_len(n + warm)
    w = rng.standard_normal(m)
    spec = scipy.fft.rfft(w)
    f = scipy.fft.rfftfreq(m, d=tau0)
    gain = np.zeros_like(f)
    # unit white input has one-sided PSD 2*tau0, so |H|^2 = S_y/(2*tau0)
    gain[1:] = np.sqrt(h * f[1:] ** alpha / (2.0 * tau0))
    y = scipy.fft.irfft(spec * gain, m)
    return y[m - n:]


def _component_phase(comp: NoiseComponent, n: int, tau0: float,
                     rng: np.random.Generator) -> np.ndarray:
    """Phase contribution (seconds, n samples) of one noise component."""
    if comp.h == 0.0:
        return np.zeros(n)
    if comp.alpha == 0:
        y = rng.standard_normal(n) * math.sqrt(comp.h / (2.0 * tau0))
    elif comp.alpha == -2:
        steps = rng.standard_normal(n) * math.sqrt(2.0 * math.pi ** 2 * comp.h * tau0)
        y = np.cumsum(steps)
    elif comp.alpha == 2:
        sigma_x = math.sqrt(comp.h / (8.0 * math.pi ** 2 * tau0))
        return rng.standard_normal(n) * sigma_x
    else:
        y = _flicker_shaped(comp.alpha, comp.h, n, tau0, rng)
    x = np.empty(n)
    x[0] = 0.0
    np.cumsum(y[:-1] * tau0, out=x[1:])
    return x


def synth_phase(model: ClockModel, n: int, tau0: float, seed: int) -> ClockRealization:
    """Synthesize n phase samples on a tau0 grid; deterministic given seed."""
    if n < 2:
        raise ConfigError("n must be >= 2")
    if not tau0 > 0:
        raise ConfigError("tau0 must be positive")
    t = np.arange(n) * tau0
    x = model.initial_offset + model.frac_freq_offset * t + 0.5 * model.freq_drift * t * t
    rng = np.random.Generator(np.random.PCG64(seed))
    for comp in model.noise:
        x = x + _component_phase(comp, n, tau0, rng)
    return ClockRealization(model=model, phase_samples=x, tau0=tau0, seed=seed)


def offset_at(r: ClockRealization, t):
    """Clock offset (seconds) at true time(s) t via linear interpolation.

    Exact at grid points; raises ClockSpanError outside [0, span].
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or np.any(t_arr > r.span):
        raise ClockSpanError(
            f"query time outside sampled span [0, {r.span:.6g}] s")
    grid = np.arange(r.phase_samples.size) * r.tau0
    out = np.interp(t_arr, grid, r.phase_samples)
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


@dataclass(frozen=True)
class TransferSpec:
    """Residual noise added by a fiber frequency-transfer link.

    ``white_pm_level`` is the target ADEV of the residual at tau = 1 s
    (white-PM, so the added per-sample phase sigma is level/sqrt(3) seconds).
    ``floor_level`` is a flat long-tau ADEV floor (flicker FM).  The sinusoid
    models slow ambient-temperature cycling of the transfer link.
    """

    white_pm_level: float = 0.0   # ADEV at 1 s
    floor_level: float = 0.0      # flat ADEV floor
    sine_amplitude: float = 0.0   # seconds
    sine_period: float = 1.0      # seconds

    def __post_init__(self):
        if min(self.white_pm_level, self.floor_level, self.sine_amplitude) < 0:
            raise ConfigError("transfer noise levels must be >= 0")
        if self.sine_amplitude > 0 and not self.sine_period > 0:
            raise ConfigError("sine_period must be positive when sine_amplitude > 0")


def synth_transfer_residual(spec: TransferSpec, n: int, tau0: float, seed: int) -> np.ndarray:
    """Additive phase residual (seconds) of a transfer link, n samples at tau0."""
    rng = np.random.Generator(np.random.PCG64(seed))
    x = np.zeros(n)
    if spec.white_pm_level > 0:
        # white PM: ADEV(tau) = sqrt(3)*sigma_x/tau, anchored at tau = 1 s
        x += rng.standard_normal(n) * (spec.white_pm_level / math.sqrt(3.0))
    if spec.floor_level > 0:
        # flat ADEV floor: flicker FM with sigma_y^2 = 2*ln(2)*h_{-1}
        h = spec.floor_level ** 2 / (2.0 * math.log(2.0))
        x += _component_phase(NoiseComponent(alpha=-1, h=h), n, tau0, rng)
    if spec.sine_amplitude > 0:
        t = np.arange(n) * tau0
        x += spec.sine_amplitude * np.sin(2.0 * math.pi * t / spec.sine_period)
    return x


def make_transferred_reference(upstream: ClockRealization, spec: TransferSpec,
                               seed: int) -> ClockRealization:
    """Upstream clock as seen through a frequency-transfer link.

    Adds the transfer residual on the upstream grid; an all-zero spec returns
    offsets identical to the upstream's at every query point.
    """
    residual = synth_transfer_residual(spec, upstream.phase_samples.size,
                                       upstream.tau0, seed)
    model = replace(upstream.model, label=upstream.model.label + "+transfer")
    return ClockRealization(model=model,
                            phase_samples=upstream.phase_samples + residual,
                            tau0=upstream.tau0, seed=seed)
