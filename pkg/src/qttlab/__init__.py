"""qttlab: desk-scale simulator and analysis toolkit for two-way
photon-pair time transfer over fiber.

The signal chain mirrors the hardware: entangled-pair sources
(:mod:`qttlab.source`), fiber/grating optics (:mod:`qttlab.optics`),
single-photon detection and event timing (:mod:`qttlab.detect`), local
time scales (:mod:`qttlab.timescale`), coincidence identification
(:mod:`qttlab.coincidence`), the two-way protocol and campaign runner
(:mod:`qttlab.twoway`), and stability metrology (:mod:`qttlab.stability`).
Scenario configs and presets live in :mod:`qttlab.config` /
:mod:`qttlab.presets`; ``qttlab.cli`` is the command-line entry point.
"""

from .coincidence import (CoincidenceResult, CorrelationParams, Histogram,
                          coarse_offset, fine_histogram, fit_peak, identify)
from .config import LinkParams, Scenario, parse_config, swap_sites
from .detect import DetectorSpec, TimeTagStream, TimerSpec, detect
from .errors import (CampaignError, ClockSpanError, ConfigError,
                     InsufficientDataError, InvalidRunError, NoCorrelationError,
                     NoPeakError, QttlabError, TagFileError)
from .optics import AmbientModel, OpticalElement, OpticalPath, net_dispersion, \
    path_delay, propagate
from .presets import PRESET_NAMES, load_preset, preset_text
from .source import (ArrivalBatch, PairEvent, PairEventBatch, PairSourceSpec,
                     emit_pairs, idler_wavelength)
from .stability import PhaseData, StabilityCurve, adev, curve, mdev, tdev
from .tagio import read_tags, write_tags
from .timescale import (ClockModel, ClockRealization, NoiseComponent,
                        TransferSpec, make_transferred_reference, offset_at,
                        synth_phase, synth_transfer_residual)
from .twoway import (BiasPrediction, MeasurementRun, OffsetSample, OffsetSeries,
                     bias_predict, combine, predict_mean_offset,
                     predict_peak_centers, run_campaign, simulate_record)

__version__ = "0.1.0"
