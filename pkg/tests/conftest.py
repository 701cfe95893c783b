import numpy as np
import pytest

from qttlab.config import LinkParams, Scenario
from qttlab.detect import DetectorSpec, TimerSpec
from qttlab.source import PairSourceSpec
from qttlab.timescale import ClockModel


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def small_scenario(**overrides) -> Scenario:
    """Fast, clean scenario for protocol-level tests: high survival, short
    records, no detector noise, ideal clocks."""
    src = dict(pump_wavelength=780.0, signal_center=1560.5,
               signal_bandwidth_fwhm=3.5, pair_rate=150e3,
               correlation_jitter_fwhm=40.0)
    defaults = dict(
        clock_a=ClockModel(label="ref_a"),
        clock_b=ClockModel(label="ref_b"),
        source_a=PairSourceSpec(label="A", **src),
        source_b=PairSourceSpec(label="B", **src),
        link=LinkParams(fiber_km=50.0, loss_db_per_km=0.0,
                        signal_extra_loss_db=3.0, idler_loss_db=3.0),
        detectors=(DetectorSpec(efficiency=1.0, jitter_fwhm=0.0, dark_rate=0.0,
                                dead_time=0.0),) * 4,
        timer=TimerSpec(lsb=1.0, record_length=0.5, cycle_period=1.0,
                        max_rate=500e3),
        n_runs=4,
        master_seed=987654321,
    )
    defaults.update(overrides)
    return Scenario(**defaults)


@pytest.fixture
def fast_scenario():
    return small_scenario()
