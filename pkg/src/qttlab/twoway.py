"""Two-way transfer protocol: per-run offset recovery and campaigns.

Each measurement cycle exchanges photons in both directions, identifies
the two coincidence peaks (remote-minus-local time differences), and
combines them into the clock offset

    t0 = ((t4 - t1) - (t3 - t2)) / 2

which cancels every delay common to both directions.  A campaign repeats
the cycle on the event timers' record grid and yields an epoch-sorted
offset series for stability analysis.

``bias_predict`` is the closed-form wavelength-mismatch bias
(fiber_length * dispersion * signal-center difference), and
``predict_mean_offset`` is the independent noise-off oracle that books
every configured element delay at the mean wavelengths.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .coincidence import CoincidenceResult, identify
from .config import Scenario, Paths
from .detect import RECORD_MARGIN_S, detect
from .errors import CampaignError, ConfigError, InvalidRunError, QttlabError
from .optics import path_delay, propagate
from .seeding import child_seed
from .source import emit_pairs
from .stability import PhaseData
from .timescale import (ClockModel, ClockRealization, make_transferred_reference,
                        synth_phase)

__all__ = ["MeasurementRun", "OffsetSample", "OffsetSeries", "BiasPrediction",
           "RunRecord", "combine", "bias_predict", "predict_peak_centers",
           "predict_mean_offset", "realize_clocks", "simulate_record",
           "run_campaign", "resolve_threads"]

CAMPAIGN_LEAD_IN_S = 1  # keeps pre-record guards inside the clock span
CLOCK_GRID_S = 0.1


@dataclass(frozen=True)
class MeasurementRun:
    """One cycle's pair of fitted peaks: forward (t4-t1) and backward (t3-t2)."""

    epoch: float
    result_ab: CoincidenceResult
    result_ba: CoincidenceResult


@dataclass(frozen=True)
class OffsetSample:
    epoch: float   # seconds
    t0: float      # ps
    sigma: float   # ps

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidRunError("offset sample needs sigma > 0")


@dataclass(frozen=True)
class RunRecord:
    """Per-run campaign diagnostics; ``error`` is set for failed runs."""

    index: int
    epoch: float
    result_ab: CoincidenceResult | None = None
    result_ba: CoincidenceResult | None = None
    sample: OffsetSample | None = None
    error: str | None = None


@dataclass(frozen=True)
class OffsetSeries:
    samples: tuple[OffsetSample, ...]
    cycle_period: float
    records: tuple[RunRecord, ...] = ()

    def __post_init__(self):
        epochs = [s.epoch for s in self.samples]
        if any(b <= a for a, b in zip(epochs, epochs[1:])):
            raise ValueError("sample epochs must be strictly increasing")

    def t0_ps(self) -> np.ndarray:
        return np.array([s.t0 for s in self.samples])

    def epochs(self) -> np.ndarray:
        return np.array([s.epoch for s in self.samples])

    def longest_uniform_stretch(self) -> tuple[PhaseData, float]:
        """Longest gap-free stretch as phase data (seconds), plus the
        fraction of samples it covers."""
        if len(self.samples) < 3:
            raise ConfigError("need at least 3 samples for stability analysis")
        epochs = self.epochs()
        contiguous = np.isclose(np.diff(epochs), self.cycle_period,
                                rtol=1e-9, atol=1e-6)
        best_start, best_len, start = 0, 1, 0
        for i, ok in enumerate(contiguous):
            if not ok:
                start = i + 1
                continue
            length = i + 2 - start
            if length > best_len:
                best_start, best_len = start, length
        x = self.t0_ps()[best_start:best_start + best_len] * 1e-12
        return PhaseData(x, self.cycle_period), best_len / len(self.samples)


@dataclass(frozen=True)
class BiasPrediction:
    """Closed-form two-way bias from signal-wavelength mismatch."""

    tau_prime: float     # ps
    length_km: float
    dispersion_ps_nm_km: float
    lambda_a: float      # nm
    lambda_b: float      # nm
    uncertainty: float   # ps


def combine(run: MeasurementRun) -> OffsetSample:
    """Two-way combination of one run's peaks into a clock-offset sample."""
    if not (run.result_ab.fit_ok and run.result_ba.fit_ok):
        raise InvalidRunError("both peak fits must succeed to combine a run")
    t0 = 0.5 * (run.result_ab.center - run.result_ba.center)
    sigma = 0.5 * math.hypot(run.result_ab.center_uncertainty,
                             run.result_ba.center_uncertainty)
    return OffsetSample(epoch=run.epoch, t0=t0, sigma=sigma)


def bias_predict(length_km: float, dispersion_ps_nm_km: float,
                 lambda_a: float, lambda_b: float,
                 u_a: float = 0.0, u_b: float = 0.0) -> BiasPrediction:
    """Residual two-way bias L*D*(lambda_a - lambda_b), with propagated
    wavelength uncertainty L*D*sqrt(u_a**2 + u_b**2)."""
    ld = length_km * dispersion_ps_nm_km
    return BiasPrediction(
        tau_prime=ld * (lambda_a - lambda_b),
        length_km=length_km,
        dispersion_ps_nm_km=dispersion_ps_nm_km,
        lambda_a=lambda_a, lambda_b=lambda_b,
        uncertainty=abs(ld) * math.hypot(u_a, u_b),
    )


# ---------------------------------------------------------------------------
# noise-off oracle

def _deterministic_offset(model: ClockModel, t: float) -> float:
    return model.initial_offset + model.frac_freq_offset * t \
        + 0.5 * model.freq_drift * t * t


def _clock_term_s(s: Scenario, t: float) -> float:
    """Deterministic (x_B - x_A)(t) in seconds, noise off."""
    if s.common_reference:
        return 0.0
    if s.transfer is not None:
        # frequency transfer syntonizes clock B to A; B keeps its own epoch
        # offset, and the link's deterministic thermal sinusoid rides along
        extra = s.clock_b.initial_offset
        if s.transfer.sine_amplitude > 0:
            extra += s.transfer.sine_amplitude * math.sin(
                2.0 * math.pi * t / s.transfer.sine_period)
        return extra
    return _deterministic_offset(s.clock_b, t) - _deterministic_offset(s.clock_a, t)


def predict_peak_centers(s: Scenario, t: float = 0.0) -> tuple[float, float]:
    """Noise-off expected peak centers (t4-t1, t3-t2) in ps at true time t.

    Books every element delay at the ensemble-mean wavelengths (the delay
    law is affine in wavelength, so averaging commutes; the idler mean
    carries the energy-conservation convexity correction).
    """
    paths: Paths = s.paths()
    clock_ps = _clock_term_s(s, t) * 1e12
    c_ab = (path_delay(s.source_a.signal_center, paths.forward, t, s.ambient)
            - path_delay(s.source_a.mean_idler_wavelength(), paths.idler_a, t, s.ambient)
            + clock_ps)
    c_ba = (path_delay(s.source_b.signal_center, paths.backward, t, s.ambient)
            - path_delay(s.source_b.mean_idler_wavelength(), paths.idler_b, t, s.ambient)
            - clock_ps)
    return c_ab, c_ba


def predict_mean_offset(s: Scenario, t: float = 0.0) -> float:
    """Noise-off expected t0 (ps) at true time t."""
    c_ab, c_ba = predict_peak_centers(s, t)
    return 0.5 * (c_ab - c_ba)


# ---------------------------------------------------------------------------
# campaign orchestration

def realize_clocks(s: Scenario, span_s: float, master_seed: int
                   ) -> tuple[ClockRealization, ClockRealization]:
    """Synthesize the two site clocks for one campaign.

    Seeds are keyed by clock label so relabeling scenarios replays
    identical realizations.  With ``common_reference`` both sites share
    clock A's realization; with a transfer spec, clock B is clock A seen
    through the transfer link plus clock B's own initial epoch offset.
    """
    n = int(math.ceil(span_s / CLOCK_GRID_S)) + 2
    r_a = synth_phase(s.clock_a, n, CLOCK_GRID_S,
                      child_seed(master_seed, f"clock:{s.clock_a.label}"))
    if s.common_reference:
        return r_a, r_a
    if s.transfer is not None:
        r_b = make_transferred_reference(
            r_a, s.transfer, child_seed(master_seed, f"transfer:{s.clock_b.label}"))
        if s.clock_b.initial_offset != 0.0:
            r_b = ClockRealization(
                model=r_b.model,
                phase_samples=r_b.phase_samples + s.clock_b.initial_offset,
                tau0=r_b.tau0, seed=r_b.seed)
        return r_a, r_b
    r_b = synth_phase(s.clock_b, n, CLOCK_GRID_S,
                      child_seed(master_seed, f"clock:{s.clock_b.label}"))
    return r_a, r_b


def _guard_s(s: Scenario) -> float:
    paths = s.paths()
    longest = max(sum(e.base_delay for e in p.elements)
                  for p in (paths.forward, paths.backward, paths.idler_a, paths.idler_b))
    return longest * 1e-12 + RECORD_MARGIN_S


def simulate_record(s: Scenario, run_index: int, epoch_s: float, master_seed: int,
                    clock_a: ClockRealization, clock_b: ClockRealization
                    ) -> dict[str, "object"]:
    """Simulate all four tag streams of one measurement record.

    Returns {'D1', 'D2', 'D3', 'D4'} -> TimeTagStream.  All randomness is
    keyed by (master_seed, entity label, run_index), so stream content is
    a pure function of the scenario and seeds.
    """
    paths = s.paths()
    guard = _guard_s(s)
    t_start = epoch_s - guard
    duration = s.timer.record_length + guard
    epoch_int = int(round(epoch_s))

    def one_direction(src, sig_path, idl_path, det_sig, det_idl,
                      clock_local, clock_remote, ch_local, ch_remote):
        pairs = emit_pairs(src, t_start, duration,
                           child_seed(master_seed, f"pairs:{src.label}", run_index))
        sig = propagate(pairs.signal_arrivals(), sig_path, s.ambient,
                        child_seed(master_seed, f"arm:{src.label}:signal", run_index))
        idl = propagate(pairs.idler_arrivals(), idl_path, s.ambient,
                        child_seed(master_seed, f"arm:{src.label}:idler", run_index))
        remote = detect(sig, det_sig, s.timer, clock_remote, epoch_int,
                        child_seed(master_seed, f"detect:{src.label}:signal", run_index),
                        channel=ch_remote)
        local = detect(idl, det_idl, s.timer, clock_local, epoch_int,
                       child_seed(master_seed, f"detect:{src.label}:idler", run_index),
                       channel=ch_local)
        return local, remote

    d1, d2, d3, d4 = s.detectors
    tags_d1, tags_d4 = one_direction(s.source_a, paths.forward, paths.idler_a,
                                     d4, d1, clock_a, clock_b, "D1", "D4")
    tags_d2, tags_d3 = one_direction(s.source_b, paths.backward, paths.idler_b,
                                     d3, d2, clock_b, clock_a, "D2", "D3")
    return {"D1": tags_d1, "D2": tags_d2, "D3": tags_d3, "D4": tags_d4}


def _run_cycle(s: Scenario, run_index: int, epoch_s: float, master_seed: int,
               clock_a: ClockRealization, clock_b: ClockRealization) -> RunRecord:
    """Simulate one full measurement cycle; failures become error records."""
    try:
        tags = simulate_record(s, run_index, epoch_s, master_seed, clock_a, clock_b)
        result_ab = identify(tags["D1"], tags["D4"], s.correlation)
        result_ba = identify(tags["D2"], tags["D3"], s.correlation)
        sample = combine(MeasurementRun(epoch=epoch_s, result_ab=result_ab,
                                        result_ba=result_ba))
        return RunRecord(index=run_index, epoch=epoch_s, result_ab=result_ab,
                         result_ba=result_ba, sample=sample)
    except QttlabError as e:
        return RunRecord(index=run_index, epoch=epoch_s,
                         error=f"{type(e).__name__}: {e}")


def _worker(args) -> RunRecord:
    return _run_cycle(*args)


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit argument, else QTTLAB_THREADS, else 1."""
    if threads is None:
        threads = int(os.environ.get("QTTLAB_THREADS", "1"))
    return max(1, threads)


def run_campaign(s: Scenario, n_runs: int | None = None, seed: int | None = None,
                 threads: int | None = None) -> OffsetSeries:
    """Run a campaign of measurement cycles on the record grid.

    Returns the epoch-sorted offset series with per-run records attached;
    failed runs appear as gaps.  Results are independent of the worker
    count (each run draws from seeds keyed by component and run index).
    Aborts with CampaignError if more than half the runs fail.
    """
    n = s.n_runs if n_runs is None else int(n_runs)
    if n < 1:
        raise ConfigError("n_runs must be >= 1")
    master = s.master_seed if seed is None else int(seed)
    cycle = s.timer.cycle_period
    if abs(cycle - round(cycle)) > 1e-9:
        raise ConfigError("cycle_period_s must be a whole number of seconds "
                          "for campaigns (integer record epochs)")
    span = CAMPAIGN_LEAD_IN_S + n * cycle + 2.0
    clock_a, clock_b = realize_clocks(s, span, master)
    epochs = [CAMPAIGN_LEAD_IN_S + r * cycle for r in range(n)]
    jobs = [(s, r, epochs[r], master, clock_a, clock_b) for r in range(n)]

    workers = resolve_threads(threads)
    if workers > 1 and n > 1:
        chunk = max(1, n // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_worker, jobs, chunksize=chunk))
    else:
        records = [_worker(j) for j in jobs]

    failures = sum(1 for r in records if r.error is not None)
    if failures > n // 2:
        examples = "; ".join(r.error for r in records if r.error)[:300]
        raise CampaignError(f"{failures}/{n} runs failed: {examples}")
    samples = tuple(r.sample for r in records if r.sample is not None)
    return OffsetSeries(samples=samples, cycle_period=cycle,
                        records=tuple(records))
