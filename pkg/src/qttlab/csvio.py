"""CSV schemas shared by the CLI and campaign outputs.

Three schemas, each identified by its header row:

* offsets:   run_index,epoch_s,t0_ps,sigma_ps,n_ab,n_ba,fwhm_ab_ps,fwhm_ba_ps
* stability: tau_s,value,estimator,n_terms
* histogram: bin_center_ps,counts

Floats are written with ``repr`` (shortest round-trip decimal), integers
bare, so identical results serialize byte-identically.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .coincidence import Histogram
from .errors import ConfigError
from .stability import StabilityCurve
from .twoway import OffsetSample, OffsetSeries, RunRecord

OFFSETS_HEADER = ["run_index", "epoch_s", "t0_ps", "sigma_ps",
                  "n_ab", "n_ba", "fwhm_ab_ps", "fwhm_ba_ps"]
STABILITY_HEADER = ["tau_s", "value", "estimator", "n_terms"]
HISTOGRAM_HEADER = ["bin_center_ps", "counts"]


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _open_writer(sink):
    if isinstance(sink, (str, Path)):
        return open(sink, "w", newline=""), True
    return sink, False


def write_offsets_csv(series: OffsetSeries, sink) -> None:
    f, owned = _open_writer(sink)
    try:
        w = csv.writer(f)
        w.writerow(OFFSETS_HEADER)
        for rec in series.records:
            if rec.sample is None:
                continue
            w.writerow([
                _fmt(rec.index), _fmt(rec.epoch), _fmt(rec.sample.t0),
                _fmt(rec.sample.sigma),
                _fmt(rec.result_ab.n_coincidences), _fmt(rec.result_ba.n_coincidences),
                _fmt(rec.result_ab.fwhm), _fmt(rec.result_ba.fwhm),
            ])
    finally:
        if owned:
            f.close()


def write_stability_csv(curve: StabilityCurve, sink) -> None:
    f, owned = _open_writer(sink)
    try:
        w = csv.writer(f)
        w.writerow(STABILITY_HEADER)
        for tau, value, n in zip(curve.taus, curve.values, curve.n_terms):
            w.writerow([_fmt(tau), _fmt(value), curve.estimator, _fmt(n)])
    finally:
        if owned:
            f.close()


def write_histogram_csv(h: Histogram, sink) -> None:
    f, owned = _open_writer(sink)
    try:
        w = csv.writer(f)
        w.writerow(HISTOGRAM_HEADER)
        for c, n in zip(h.bin_centers, h.counts):
            w.writerow([_fmt(c), _fmt(n)])
    finally:
        if owned:
            f.close()


def sniff_schema(path) -> str:
    """Which of our schemas a CSV file carries ('offsets', 'stability',
    'histogram'); raises ConfigError for anything else."""
    with open(path, newline="") as f:
        header = next(csv.reader(f), None)
    if header == OFFSETS_HEADER:
        return "offsets"
    if header == STABILITY_HEADER:
        return "stability"
    if header == HISTOGRAM_HEADER:
        return "histogram"
    raise ConfigError(f"{path}: unrecognized CSV header {header}")


def read_offsets_csv(path) -> OffsetSeries:
    """Load an offsets CSV back into a series (records carry indices only).

    The cycle period is inferred from the epoch spacing of consecutive run
    indices.
    """
    rows = []
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r, None)
        if header != OFFSETS_HEADER:
            raise ConfigError(f"{path}: not an offsets CSV (header {header})")
        for line in r:
            if not line:
                continue
            rows.append((int(line[0]), float(line[1]), float(line[2]), float(line[3])))
    if len(rows) < 2:
        raise ConfigError(f"{path}: need at least 2 offset rows")
    rows.sort()
    cycles = [(e2 - e1) / (i2 - i1) for (i1, e1, *_), (i2, e2, *_)
              in zip(rows, rows[1:]) if i2 > i1]
    cycle = float(np.median(cycles))
    samples = tuple(OffsetSample(epoch=e, t0=t, sigma=s) for _, e, t, s in rows)
    records = tuple(RunRecord(index=i, epoch=e) for i, e, *_ in rows)
    return OffsetSeries(samples=samples, cycle_period=cycle, records=records)


def read_stability_csv(path) -> StabilityCurve:
    taus, values, n_terms, estimator = [], [], [], None
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r, None)
        if header != STABILITY_HEADER:
            raise ConfigError(f"{path}: not a stability CSV (header {header})")
        for line in r:
            if not line:
                continue
            taus.append(float(line[0]))
            values.append(float(line[1]))
            estimator = line[2]
            n_terms.append(int(line[3]))
    if estimator is None:
        raise ConfigError(f"{path}: empty stability CSV")
    return StabilityCurve(taus=np.array(taus), values=np.array(values),
                          estimator=estimator, n_terms=np.array(n_terms))


def read_histogram_csv(path) -> Histogram:
    centers, counts = [], []
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r, None)
        if header != HISTOGRAM_HEADER:
            raise ConfigError(f"{path}: not a histogram CSV (header {header})")
        for line in r:
            if not line:
                continue
            centers.append(float(line[0]))
            counts.append(int(line[1]))
    if len(centers) < 2:
        raise ConfigError(f"{path}: need at least 2 histogram rows")
    width = centers[1] - centers[0]
    return Histogram(bin_centers=np.array(centers), counts=np.array(counts),
                     bin_width=width)
