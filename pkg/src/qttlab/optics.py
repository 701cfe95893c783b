"""Optical propagation: delay, chromatic dispersion, loss, thermal drift.

An :class:`OpticalPath` is an ordered list of elements (fiber spans,
grating dispersion modules, attenuators).  Each element contributes
``base_delay + temp_delay_coeff*dT`` plus a wavelength term
``(dispersion + temp_dispersion_coeff*dT) * (lambda - ref_wavelength)``,
so the total path delay is affine in wavelength; ambient temperature
enters through a slow sinusoid shared by all elements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .source import ArrivalBatch

__all__ = ["OpticalElement", "OpticalPath", "AmbientModel",
           "path_delay", "propagate", "net_dispersion"]


@dataclass(frozen=True)
class OpticalElement:
    base_delay: float = 0.0            # ps at ref_wavelength
    dispersion: float = 0.0            # total ps/nm (D*L for a fiber span)
    ref_wavelength: float = 1560.0     # nm
    loss_db: float = 0.0               # dB
    temp_delay_coeff: float = 0.0      # ps/K
    temp_dispersion_coeff: float = 0.0  # ps/nm/K
    label: str = ""

    def __post_init__(self):
        if self.loss_db < 0:
            raise ConfigError(f"element {self.label!r}: loss_db must be >= 0")
        if self.base_delay < 0:
            raise ConfigError(f"element {self.label!r}: base_delay must be >= 0")


@dataclass(frozen=True)
class OpticalPath:
    elements: tuple[OpticalElement, ...] = ()
    direction_label: str = "forward"

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))

    @property
    def total_loss_db(self) -> float:
        return sum(e.loss_db for e in self.elements)

    @property
    def survival_probability(self) -> float:
        return 10.0 ** (-self.total_loss_db / 10.0)


@dataclass(frozen=True)
class AmbientModel:
    """Slow sinusoidal temperature around the calibration mean."""

    mean_temp: float = 293.15   # K
    sine_amplitude: float = 0.0  # K
    sine_period: float = 86400.0  # seconds
    phase: float = 0.0           # radians

    def __post_init__(self):
        if self.sine_amplitude > 0 and not self.sine_period > 0:
            raise ConfigError("sine_period must be positive when amplitude > 0")

    def delta_t(self, t):
        """Temperature excursion from the mean at true time t (seconds)."""
        if self.sine_amplitude == 0.0:
            return np.zeros_like(np.asarray(t, dtype=float)) if np.ndim(t) else 0.0
        return self.sine_amplitude * np.sin(
            2.0 * math.pi * np.asarray(t, dtype=float) / self.sine_period + self.phase)


STILL_AIR = AmbientModel()


def path_delay(lam, path: OpticalPath, t=0.0, ambient: AmbientModel = STILL_AIR):
    """Total path delay in ps for wavelength(s) ``lam`` nm at true time t seconds.

    Affine in wavelength; the slope at dT = 0 equals :func:`net_dispersion`.
    Element order is immaterial (the sum commutes).
    """
    dT = ambient.delta_t(t)
    lam = np.asarray(lam, dtype=float)
    delay = 0.0
    for e in path.elements:
        delay = delay + (e.base_delay + e.temp_delay_coeff * dT) \
            + (e.dispersion + e.temp_dispersion_coeff * dT) * (lam - e.ref_wavelength)
    if np.ndim(lam) == 0 and np.ndim(delay) == 0:
        return float(delay)
    return np.broadcast_to(delay, lam.shape).astype(float) if np.ndim(delay) == 0 else delay


def net_dispersion(path: OpticalPath) -> float:
    """Summed dispersion of the path at dT = 0, in ps/nm."""
    return float(sum(e.dispersion for e in path.elements))


def propagate(batch: ArrivalBatch, path: OpticalPath,
              ambient: AmbientModel = STILL_AIR, seed: int = 0) -> ArrivalBatch:
    """Transmit arrivals through a path: loss thinning then delay; resorted.

    Each event survives independently with probability 10**(-loss_db/10);
    survivors are delayed by :func:`path_delay` at their own wavelength and
    arrival time.
    """
    n = len(batch)
    if n == 0:
        return batch
    rng = np.random.Generator(np.random.PCG64(seed))
    p = path.survival_probability
    if p < 1.0:
        keep = rng.random(n) < p
        t_in = batch.t_ps[keep]
        lam = batch.lambda_nm[keep]
    else:
        t_in = batch.t_ps
        lam = batch.lambda_nm
    if t_in.size == 0:
        return ArrivalBatch(batch.ref_s, t_in, lam)
    t_abs = batch.ref_s + t_in * 1e-12
    t_out = t_in + path_delay(lam, path, t_abs, ambient)
    order = np.argsort(t_out, kind="stable")
    return ArrivalBatch(batch.ref_s, t_out[order], lam[order])
