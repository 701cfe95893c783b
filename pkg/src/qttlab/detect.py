"""Detection chain: photon arrivals to event-timer tag streams.

Pipeline order: efficiency thinning, Gaussian timing jitter, dark-count
merge, true-to-local clock mapping, non-paralyzable dead time, record
rate cap, record windowing, quantization to the timer LSB (round half to
even), final sort.  Tags are int64 LSB ticks inside one record, paired
with an integer-second record epoch so multi-hour campaigns never lose
picosecond resolution to floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .source import ArrivalBatch, FWHM_TO_SIGMA
from .timescale import ClockRealization, offset_at

__all__ = ["DetectorSpec", "TimerSpec", "TimeTagStream", "detect", "deadtime_filter"]

# emission/dark margin around the record; covers path-delay and clock skews
RECORD_MARGIN_S = 2e-3


@dataclass(frozen=True)
class DetectorSpec:
    efficiency: float = 0.65   # detection probability
    jitter_fwhm: float = 68.0  # ps
    dark_rate: float = 100.0   # counts/second
    dead_time: float = 50.0    # ns, non-paralyzable

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ConfigError("efficiency out of range [0, 1]")
        if min(self.jitter_fwhm, self.dark_rate, self.dead_time) < 0:
            raise ConfigError("detector rates/jitter must be >= 0")


@dataclass(frozen=True)
class TimerSpec:
    lsb: float = 1.0              # ps per tick
    record_length: float = 2.5    # seconds of acquisition per record
    cycle_period: float = 7.0     # seconds between record starts
    max_rate: float = 40e3        # counts/second budget per record
    reference: str = "local"      # clock identifier

    def __post_init__(self):
        if not self.lsb > 0:
            raise ConfigError("lsb must be positive")
        if not 0 < self.record_length <= self.cycle_period:
            raise ConfigError("need 0 < record_length <= cycle_period")
        if self.max_rate <= 0:
            raise ConfigError("max_rate must be positive")


@dataclass(frozen=True)
class TimeTagStream:
    """Sorted int64 tick tags within one record of one channel."""

    channel: str
    tags: np.ndarray          # int64 ticks, non-decreasing, in [0, record_length/lsb]
    lsb: float                # ps
    record_epoch: int         # integer seconds

    def __post_init__(self):
        tags = np.asarray(self.tags, dtype=np.int64)
        object.__setattr__(self, "tags", tags)
        if tags.size and np.any(np.diff(tags) < 0):
            raise ConfigError("tags must be non-decreasing")

    def __len__(self) -> int:
        return self.tags.size

    @property
    def times_ps(self) -> np.ndarray:
        return self.tags * self.lsb


def deadtime_filter(t: np.ndarray, dead: float) -> np.ndarray:
    """Greedy non-paralyzable dead-time mask over sorted times.

    Iteratively removes the first violator of each under-spaced chain;
    converges to the exact greedy result in O(max chain length) passes,
    which is ~1 at single-photon occupancies.
    """
    n = t.size
    keep = np.ones(n, dtype=bool)
    if dead <= 0 or n < 2:
        return keep
    idx = np.arange(n)
    while True:
        live = idx[keep]
        if live.size < 2:
            return keep
        viol = np.flatnonzero(np.diff(t[live]) < dead) + 1  # positions into live
        if viol.size == 0:
            return keep
        chain_heads = viol[np.diff(np.concatenate(([-2], viol))) > 1]
        keep[live[chain_heads]] = False


def detect(arrivals: ArrivalBatch, det: DetectorSpec, timer: TimerSpec,
           clock: ClockRealization, record_epoch: int, seed: int,
           channel: str = "D1") -> TimeTagStream:
    """Run the full detection pipeline for one channel and one record.

    ``arrivals`` must be sorted in true time; the record spans local time
    [0, record_length] after ``record_epoch`` on the referenced clock.
    Raises ClockSpanError if the clock realization does not cover the
    record (including margins).
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    rec_ps = timer.record_length * 1e12
    margin_ps = RECORD_MARGIN_S * 1e12

    # efficiency thinning
    t = arrivals.t_ps
    if det.efficiency < 1.0:
        t = t[rng.random(t.size) < det.efficiency]
    # Gaussian timing jitter
    if det.jitter_fwhm > 0 and t.size:
        t = t + rng.standard_normal(t.size) * (det.jitter_fwhm * FWHM_TO_SIGMA)
    # rebase to the record epoch
    t = t + (arrivals.ref_s - record_epoch) * 1e12
    # dark counts over the (margin-padded) record, uniform in true time
    n_dark = rng.poisson(det.dark_rate * (timer.record_length + 2 * RECORD_MARGIN_S))
    if n_dark:
        darks = rng.uniform(-margin_ps, rec_ps + margin_ps, n_dark)
        t = np.concatenate((t, darks))
    # true time -> local clock time
    if t.size:
        t_abs = record_epoch + t * 1e-12
        t = t + offset_at(clock, t_abs) * 1e12
    else:
        offset_at(clock, float(record_epoch))  # still validate clock coverage
    # dead time needs time order; jitter and darks perturb it
    t = np.sort(t, kind="stable")
    if det.dead_time > 0:
        t = t[deadtime_filter(t, det.dead_time * 1e3)]
    # record budget: uniform random drop down to max_rate
    budget = int(timer.max_rate * timer.record_length)
    if t.size > budget:
        kept = rng.choice(t.size, size=budget, replace=False)
        t = t[np.sort(kept)]
    # window to the record, quantize (round half to even), sort
    t = t[(t >= 0.0) & (t <= rec_ps)]
    ticks = np.rint(t / timer.lsb).astype(np.int64)
    ticks.sort(kind="stable")
    return TimeTagStream(channel=channel, tags=ticks, lsb=timer.lsb,
                         record_epoch=record_epoch)
