"""Clock stability estimators: overlapping ADEV, MDEV, and TDEV.

All estimators operate on uniformly sampled time-offset (phase) data
``x`` in seconds with sample spacing ``tau0``.  The overlapping variants
are used throughout; gaps must be resolved by the caller (see
``twoway.OffsetSeries.longest_uniform_stretch``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError

__all__ = ["PhaseData", "StabilityCurve", "adev", "mdev", "tdev", "curve", "default_m_grid"]


@dataclass(frozen=True)
class PhaseData:
    """Uniform time-offset series: ``x`` in seconds sampled every ``tau0`` seconds."""

    x: np.ndarray
    tau0: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        object.__setattr__(self, "x", x)
        if x.ndim != 1 or x.size < 3:
            raise InsufficientDataError("phase series needs at least 3 samples")
        if not self.tau0 > 0:
            raise ValueError("tau0 must be positive")
        if not np.all(np.isfinite(x)):
            raise ValueError("phase samples must be finite")

    def __len__(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class StabilityCurve:
    """Estimator values over averaging times; ``values`` are dimensionless for
    adev/mdev and seconds for tdev."""

    taus: np.ndarray
    values: np.ndarray
    estimator: str
    n_terms: np.ndarray

    def error_bars(self) -> np.ndarray:
        """Simple +-value/sqrt(n_terms) confidence half-widths."""
        return self.values / np.sqrt(np.maximum(self.n_terms, 1))


def _second_differences(x: np.ndarray, m: int) -> np.ndarray:
    return x[2 * m:] - 2.0 * x[m:-m] + x[:-2 * m]


def adev(data: PhaseData, m: int) -> float:
    """Overlapping Allan deviation at tau = m*tau0."""
    x, n = data.x, len(data)
    if m < 1:
        raise ValueError("m must be >= 1")
    if n < 2 * m + 1:
        raise InsufficientDataError(f"adev(m={m}) needs at least {2 * m + 1} samples, got {n}")
    d = _second_differences(x, m)
    tau = m * data.tau0
    return float(np.sqrt(np.sum(d * d) / (2.0 * d.size * tau * tau)))


def mdev(data: PhaseData, m: int) -> float:
    """Overlapping modified Allan deviation at tau = m*tau0."""
    x, n = data.x, len(data)
    if m < 1:
        raise ValueError("m must be >= 1")
    if n < 3 * m:
        raise InsufficientDataError(f"mdev(m={m}) needs at least {3 * m} samples, got {n}")
    d = _second_differences(x, m)  # d[i] = x[i+2m] - 2 x[i+m] + x[i]
    # moving sums of m consecutive second differences
    c = np.concatenate(([0.0], np.cumsum(d)))
    s = c[m:] - c[:-m]
    tau = m * data.tau0
    denom = 2.0 * m * m * tau * tau * s.size
    return float(np.sqrt(np.sum(s * s) / denom))


def tdev(data: PhaseData, m: int) -> float:
    """Time deviation at tau = m*tau0: TDEV = tau/sqrt(3) * MDEV."""
    tau = m * data.tau0
    return tau / np.sqrt(3.0) * mdev(data, m)


_ESTIMATORS = {"adev": adev, "mdev": mdev, "tdev": tdev}


def max_m(n: int, estimator: str) -> int:
    """Largest valid averaging factor for a series of length n."""
    if estimator == "adev":
        return (n - 1) // 2
    return n // 3


def default_m_grid(n: int, estimator: str) -> list[int]:
    """Octave-spaced averaging factors 1, 2, 4, ... plus the largest valid m."""
    limit = max_m(n, estimator)
    if limit < 1:
        raise InsufficientDataError(f"series of length {n} too short for {estimator}")
    grid = []
    m = 1
    while m <= limit:
        grid.append(m)
        m *= 2
    if grid[-1] != limit:
        grid.append(limit)
    return grid


def curve(data: PhaseData, m_list=None, estimator: str = "tdev") -> StabilityCurve:
    """Evaluate one estimator over a grid of averaging factors.

    ``m_list`` defaults to the octave grid from :func:`default_m_grid`.
    ``n_terms`` holds the number of squared terms averaged at each point.
    """
    if estimator not in _ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}")
    n = len(data)
    if m_list is None:
        m_list = default_m_grid(n, estimator)
    m_arr = sorted(set(int(m) for m in m_list))
    if not m_arr or m_arr[0] < 1:
        raise InsufficientDataError("empty or invalid m grid")
    fn = _ESTIMATORS[estimator]
    taus, values, terms = [], [], []
    for m in m_arr:
        values.append(fn(data, m))
        taus.append(m * data.tau0)
        terms.append(n - 2 * m if estimator == "adev" else n - 3 * m + 1)
    return StabilityCurve(
        taus=np.asarray(taus, dtype=float),
        values=np.asarray(values, dtype=float),
        estimator=estimator,
        n_terms=np.asarray(terms, dtype=int),
    )
