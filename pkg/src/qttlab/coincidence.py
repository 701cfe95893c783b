"""Nonlocal coincidence identification between two remote tag streams.

Two stages: a coarse search for the relative offset of the streams over a
wide lag span, then a fine histogram of pair time differences around the
found offset, Gaussian-fitted for a sub-LSB peak center.

Coarse search routes:

* direct -- histogram every pair difference inside the span (two-pointer
  windows over the sorted streams).  Cost scales with the number of pairs
  in the span, so it is used for narrow spans or sparse streams.
* transform -- fold tag times modulo a period of ~2x the span, circularly
  cross-correlate the folded bin occupations with FFTs, then verify the
  top candidate lags with exact direct counts.  Folding aliases the whole
  record's accidentals into the window, so an unverified folded maximum
  is not statistically meaningful; every candidate is re-tested against
  the unfolded Poisson background before being believed.

Peak significance is a trials-corrected Poisson tail converted to a
Gaussian-equivalent sigma: a naive "count > background + k*sigma" rule
false-fires on the ~1e6 lags scanned (the expected maximum of that many
background bins is itself several sigma high).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy.optimize import curve_fit
from scipy.stats import norm, poisson

from .detect import TimeTagStream
from .errors import NoCorrelationError, NoPeakError
from .source import FWHM_TO_SIGMA

__all__ = ["CorrelationParams", "Histogram", "CoincidenceResult",
           "coarse_offset", "fine_histogram", "fit_peak", "identify"]

SIGMA_TO_FWHM = 1.0 / FWHM_TO_SIGMA  # 2.3548...

# coarse lag count beyond which the FFT route is attempted
TRANSFORM_BIN_THRESHOLD = 4096
# FFT route needs the dense regime to pay off; below this accidental density
# the direct sweep is both cheaper and statistically stronger
_TRANSFORM_MIN_PAIRS_PER_BIN = 8.0
_TOP_K_CANDIDATES = 16
_MAX_EXPAND = 8_000_000  # pair-difference buffer cap per chunk


@dataclass(frozen=True)
class CorrelationParams:
    coarse_bin: float = 1000.0        # ps
    search_span: float = 1e9          # ps, +- around zero lag
    fine_bin: float = 2.0             # ps
    fine_span: float = 2000.0         # ps, +- around the coarse center
    significance_threshold: float = 5.0  # Gaussian-equivalent sigma

    def __post_init__(self):
        if not (self.coarse_bin > 0 and self.fine_bin > 0):
            raise ValueError("bin widths must be positive")
        if self.fine_bin > self.coarse_bin:
            raise ValueError("fine_bin must not exceed coarse_bin")
        if not (self.search_span > 0 and self.fine_span > 0):
            raise ValueError("spans must be positive")


@dataclass(frozen=True)
class Histogram:
    bin_centers: np.ndarray
    counts: np.ndarray
    bin_width: float

    def __post_init__(self):
        object.__setattr__(self, "bin_centers", np.asarray(self.bin_centers, dtype=float))
        object.__setattr__(self, "counts", np.asarray(self.counts, dtype=np.int64))


@dataclass(frozen=True)
class CoincidenceResult:
    center: float              # ps, sub-LSB
    center_uncertainty: float  # ps
    fwhm: float                # ps
    n_coincidences: int
    background_per_bin: float
    fit_ok: bool


def _ranges(counts: np.ndarray) -> np.ndarray:
    """[0..c0-1, 0..c1-1, ...] for window expansion."""
    ends = np.cumsum(counts)
    return np.arange(ends[-1]) - np.repeat(ends - counts, counts)


def _window_histogram(ta: np.ndarray, tb: np.ndarray, lo_edge: float,
                      n_bins: int, bin_w: float) -> np.ndarray:
    """Counts of (t_b - t_a) in bins [lo_edge + k*bin_w, ...), k < n_bins.

    Chunked over a-tags so the expanded difference buffer stays bounded.
    """
    hi_edge = lo_edge + n_bins * bin_w
    counts = np.zeros(n_bins, dtype=np.int64)
    lo = np.searchsorted(tb, ta + lo_edge, side="left")
    hi = np.searchsorted(tb, ta + hi_edge, side="left")
    per_a = hi - lo
    cum = np.cumsum(per_a)
    total = int(cum[-1]) if per_a.size else 0
    if total == 0:
        return counts
    start = 0
    while start < ta.size:
        base = cum[start - 1] if start else 0
        stop = int(np.searchsorted(cum, base + _MAX_EXPAND, side="right")) + 1
        stop = min(max(stop, start + 1), ta.size)
        m = per_a[start:stop]
        if m.sum():
            idx = np.repeat(lo[start:stop], m) + _ranges(m)
            d = tb[idx] - np.repeat(ta[start:stop], m)
            # true divide + floor is exact at bin boundaries (the quotient of
            # exact multiples is representable) and much faster than //
            k = np.floor((d - lo_edge) / bin_w).astype(np.int64)
            np.maximum(k, 0, out=k)  # guard one-ulp underflow at the window edge
            counts += np.bincount(k, minlength=n_bins)[:n_bins]
        start = stop
    return counts


def _significance(peak: int, mu: float, n_scanned: int) -> float:
    """Gaussian-equivalent sigma of a peak count over Poisson(mu) background,
    corrected for the number of lags scanned."""
    if peak <= 0:
        return 0.0
    p_one = float(poisson.sf(peak - 1, max(mu, 1e-300)))
    p_corr = p_one * max(n_scanned, 1)
    if p_corr >= 1.0:
        return 0.0
    if p_corr <= 1e-300:
        return 38.0
    return float(norm.isf(p_corr))


def _accidental_rate(a: TimeTagStream, b: TimeTagStream, bin_ps: float) -> float:
    """Expected accidental pairs per lag bin for uniform streams."""
    ta, tb = a.times_ps, b.times_ps
    t_span = max(ta[-1], tb[-1]) - min(ta[0], tb[0]) + bin_ps
    return len(a) * len(b) * bin_ps / max(t_span, bin_ps)


def _check_compatible(a: TimeTagStream, b: TimeTagStream):
    if len(a) == 0 or len(b) == 0:
        raise NoCorrelationError("empty tag stream")
    if a.record_epoch != b.record_epoch:
        raise ValueError("streams must share a record epoch")
    if a.lsb != b.lsb:
        raise ValueError("streams must share an LSB")


def _pick_peak(lags: np.ndarray, counts: np.ndarray) -> int:
    """Index of the maximum count; ties broken by smallest |lag|."""
    top = counts.max()
    tied = np.flatnonzero(counts == top)
    return int(tied[np.argmin(np.abs(lags[tied]))])


def _coarse_direct(ta, tb, span, bin_w):
    half = math.ceil(span / bin_w)
    lo_edge = -half * bin_w
    n_bins = 2 * half
    counts = _window_histogram(ta, tb, lo_edge, n_bins, bin_w)
    lags = lo_edge + (np.arange(n_bins) + 0.5) * bin_w
    i = _pick_peak(lags, counts)
    return float(lags[i]), int(counts[i]), n_bins


def _coarse_transform(ta, tb, span, bin_w):
    half = math.ceil(span / bin_w)
    n_scanned = 2 * half
    n_fold = scipy.fft.next_fast_len(n_scanned, real=True)
    period = n_fold * bin_w
    ha = np.bincount((np.mod(ta, period) // bin_w).astype(np.int64),
                     minlength=n_fold)[:n_fold]
    hb = np.bincount((np.mod(tb, period) // bin_w).astype(np.int64),
                     minlength=n_fold)[:n_fold]
    c = scipy.fft.irfft(np.conj(scipy.fft.rfft(ha)) * scipy.fft.rfft(hb), n_fold)
    c = np.rint(c)
    # adjacent-pair sums rescue peaks that straddle a bin edge (the folded
    # per-bin excess halves, which can bury them below the noise maximum)
    pair = c + np.roll(c, -1)
    k_top = np.argpartition(c, -_TOP_K_CANDIDATES)[-_TOP_K_CANDIDATES:]
    k_pair = np.argpartition(pair, -_TOP_K_CANDIDATES)[-_TOP_K_CANDIDATES:]
    ks = np.unique(np.concatenate((k_top, k_pair, (k_pair + 1) % n_fold)))
    lag_cand = np.where(ks <= n_fold // 2, ks, ks - n_fold) * bin_w
    inside = np.abs(lag_cand) <= span + bin_w
    lag_cand = np.unique(lag_cand[inside])

    best = (-1, 0.0)  # (count, lag)
    for lag in lag_cand:
        # exact unfolded counts in a +-2-bin window around the candidate
        w = _window_histogram(ta, tb, lag - 2 * bin_w, 5, bin_w)
        j = int(np.argmax(w))
        cnt = int(w[j])
        refined = lag - 2 * bin_w + (j + 0.5) * bin_w
        if cnt > best[0] or (cnt == best[0] and abs(refined) < abs(best[1])):
            best = (cnt, refined)
    return float(best[1]), int(best[0]), n_scanned


def coarse_offset(a: TimeTagStream, b: TimeTagStream, p: CorrelationParams) -> float:
    """Lag (ps) maximizing the binned cross-correlation of b against a.

    Accurate to +-coarse_bin.  Raises NoCorrelationError when no lag is
    significant at ``p.significance_threshold`` Gaussian-equivalent sigma
    (trials-corrected Poisson tail), which is the unpaired-streams signal.
    """
    _check_compatible(a, b)
    ta, tb = a.times_ps, b.times_ps
    n_lags = 2 * math.ceil(p.search_span / p.coarse_bin)
    mu = _accidental_rate(a, b, p.coarse_bin)
    pairs_in_span = mu * n_lags
    use_transform = (n_lags > TRANSFORM_BIN_THRESHOLD
                     and pairs_in_span > _TRANSFORM_MIN_PAIRS_PER_BIN * n_lags)
    if use_transform:
        lag, peak, n_scanned = _coarse_transform(ta, tb, p.search_span, p.coarse_bin)
    else:
        lag, peak, n_scanned = _coarse_direct(ta, tb, p.search_span, p.coarse_bin)
    z = _significance(peak, mu, n_scanned)
    if z < p.significance_threshold:
        raise NoCorrelationError(
            f"no significant correlation peak (best {z:.2f} sigma at {lag:.0f} ps, "
            f"threshold {p.significance_threshold})")
    return lag


def fine_histogram(a: TimeTagStream, b: TimeTagStream, center: float,
                   p: CorrelationParams) -> Histogram:
    """Histogram of pair differences (t_b - t_a) around ``center``.

    Bins of width ``fine_bin`` anchored to the absolute lag grid spanning
    [center - fine_span, center + fine_span]; linear in the stream sizes.
    """
    _check_compatible(a, b)
    bin_w = p.fine_bin
    lo_edge = math.floor((center - p.fine_span) / bin_w) * bin_w
    n_bins = int(math.ceil((center + p.fine_span - lo_edge) / bin_w))
    counts = _window_histogram(a.times_ps, b.times_ps, lo_edge, n_bins, bin_w)
    centers = lo_edge + (np.arange(n_bins) + 0.5) * bin_w
    return Histogram(bin_centers=centers, counts=counts, bin_width=bin_w)


def _gaussian_plus_const(x, amp, mu, sigma, base):
    return amp * np.exp(-0.5 * ((x - mu) / sigma) ** 2) + base


def _moment_guess(x: np.ndarray, c: np.ndarray, bin_w: float):
    total = c.sum()
    mean = float(np.sum(x * c) / total)
    var = float(np.sum(c * (x - mean) ** 2) / total)
    sigma = max(math.sqrt(max(var, 0.0)), bin_w / math.sqrt(12.0))
    return mean, sigma


def fit_peak(h: Histogram, threshold: float = 5.0) -> CoincidenceResult:
    """Weighted least-squares Gaussian-plus-constant fit of a histogram peak.

    Poisson weights max(count, 1); background seeded from the median of
    bins outside +-3x the initial FWHM guess.  Raises NoPeakError if the
    fitted amplitude is below ``threshold*sqrt(background)``; if the fit
    does not converge, falls back to a background-subtracted centroid with
    ``fit_ok=False``.
    """
    x, c = h.bin_centers, h.counts
    total = int(c.sum())
    if x.size < 5 or total < 8:
        raise NoPeakError(f"histogram too sparse to fit ({total} counts)")
    c0, s0 = _moment_guess(x, c, h.bin_width)
    outside = np.abs(x - c0) > 3.0 * SIGMA_TO_FWHM * s0
    bg0 = float(np.median(c[outside])) if np.any(outside) else 0.0
    excess = np.maximum(c - bg0, 0.0)
    if excess.sum() > 0:
        mu0 = float(np.sum(x * excess) / excess.sum())
        var0 = float(np.sum(excess * (x - mu0) ** 2) / excess.sum())
        sig0 = max(math.sqrt(max(var0, 0.0)), h.bin_width / math.sqrt(12.0))
    else:
        mu0, sig0 = c0, s0
    amp0 = max(float(c.max()) - bg0, 1.0)
    span = float(x[-1] - x[0])
    p0 = (amp0, mu0, min(sig0, span), bg0)
    bounds = ([0.0, x[0], h.bin_width / 4.0, 0.0],
              [np.inf, x[-1], span, np.inf])
    weights = np.sqrt(np.maximum(c, 1.0))
    try:
        popt, pcov = curve_fit(_gaussian_plus_const, x, c.astype(float), p0=p0,
                               sigma=weights, absolute_sigma=True,
                               bounds=bounds, method="trf", max_nfev=400)
        amp, mu, sigma, base = popt
        u_center = float(math.sqrt(pcov[1, 1])) if np.isfinite(pcov[1, 1]) else math.nan
        converged = math.isfinite(u_center) and u_center > 0
    except (RuntimeError, ValueError):
        converged = False
    if not converged:
        if excess.sum() <= 0:
            raise NoPeakError("no counts above background")
        sig_m = max(math.sqrt(max(float(np.sum(excess * (x - mu0) ** 2) / excess.sum()), 0.0)),
                    h.bin_width / math.sqrt(12.0))
        n_exc = float(excess.sum())
        return CoincidenceResult(center=mu0,
                                 center_uncertainty=sig_m / math.sqrt(n_exc),
                                 fwhm=SIGMA_TO_FWHM * sig_m,
                                 n_coincidences=int(round(n_exc)),
                                 background_per_bin=bg0, fit_ok=False)
    if amp < threshold * math.sqrt(max(base, 1e-12)):
        raise NoPeakError(f"fitted amplitude {amp:.2f} below "
                          f"{threshold} * sqrt(background {base:.2f})")
    area = amp * sigma * math.sqrt(2.0 * math.pi) / h.bin_width
    return CoincidenceResult(center=float(mu),
                             center_uncertainty=u_center,
                             fwhm=float(SIGMA_TO_FWHM * sigma),
                             n_coincidences=int(round(area)),
                             background_per_bin=float(base),
                             fit_ok=True)


def identify(a: TimeTagStream, b: TimeTagStream, p: CorrelationParams) -> CoincidenceResult:
    """Full pipeline: coarse offset, fine histogram, peak fit.

    The result's ``center`` estimates the mean of (t_b - t_a) over true
    pairs; errors from the stages propagate.
    """
    center = coarse_offset(a, b, p)
    h = fine_histogram(a, b, center, p)
    return fit_peak(h, threshold=p.significance_threshold)
