"""Scenario configuration: sectioned key-value parsing and validation.

A scenario fixes everything one campaign needs: two clock models, two pair
sources, the shared fiber link, four detectors, the event-timer settings,
correlation parameters, the ambient model, and the campaign length/seed.
``parse_config`` accepts INI-style text (see README for the grammar),
rejects unknown sections and keys, and returns a fully validated
:class:`Scenario` with defaults filled in.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace

from .coincidence import CorrelationParams
from .detect import DetectorSpec, TimerSpec
from .errors import ConfigError
from .optics import AmbientModel, OpticalElement, OpticalPath
from .source import PairSourceSpec
from .timescale import ClockModel, NoiseComponent, TransferSpec

__all__ = ["LinkParams", "Paths", "Scenario", "parse_config", "swap_sites"]

CHANNELS = ("D1", "D2", "D3", "D4")


@dataclass(frozen=True)
class LinkParams:
    """Shared fiber link plus per-arm extras, as configured.

    ``fiber_on = False`` removes the fiber spans and their grating
    compensation modules together (they are installed as link
    infrastructure) and substitutes an attenuator of equal loss so
    detection rates stay comparable between the two conditions.
    """

    fiber_on: bool = True
    fiber_km: float = 50.0
    dispersion_ps_nm_km: float = 17.0
    loss_db_per_km: float = 0.2
    group_delay_ps_km: float = 4.9e6
    ref_wavelength_nm: float = 1560.0
    fbg_dispersion_ps_nm: float = -850.0
    fbg_placement: str = "idler"
    signal_extra_loss_db: float = 0.0
    idler_loss_db: float = 0.0
    forward_extra_delay_ps: float = 0.0
    backward_extra_delay_ps: float = 0.0
    temp_delay_ps_km_k: float = 40.0
    temp_dispersion_ps_nm_km_k: float = -0.0025
    fbg_temp_delay_ps_k: float = 0.0
    fbg_temp_dispersion_ps_nm_k: float = 0.0

    def __post_init__(self):
        if self.fbg_placement not in ("idler", "signal"):
            raise ConfigError("fbg_placement must be 'idler' or 'signal'")
        if self.fiber_km < 0 or self.loss_db_per_km < 0:
            raise ConfigError("fiber_km and loss_db_per_km must be >= 0")


@dataclass(frozen=True)
class Paths:
    """The four optical paths of one link direction pair."""

    forward: OpticalPath    # source A signal -> site B (D4)
    backward: OpticalPath   # source B signal -> site A (D3)
    idler_a: OpticalPath    # source A idler kept at site A (D1)
    idler_b: OpticalPath    # source B idler kept at site B (D2)


def build_paths(link: LinkParams) -> Paths:
    ref = link.ref_wavelength_nm
    fiber_loss = link.fiber_km * link.loss_db_per_km
    if link.fiber_on:
        fiber = OpticalElement(
            base_delay=link.fiber_km * link.group_delay_ps_km,
            dispersion=link.fiber_km * link.dispersion_ps_nm_km,
            ref_wavelength=ref,
            loss_db=fiber_loss,
            temp_delay_coeff=link.fiber_km * link.temp_delay_ps_km_k,
            temp_dispersion_coeff=link.fiber_km * link.temp_dispersion_ps_nm_km_k,
            label="fiber",
        )
        fbg = OpticalElement(
            dispersion=link.fbg_dispersion_ps_nm,
            ref_wavelength=ref,
            temp_delay_coeff=link.fbg_temp_delay_ps_k,
            temp_dispersion_coeff=link.fbg_temp_dispersion_ps_nm_k,
            label="fbg",
        )
        fbg_elems = (fbg,)
    else:
        fiber = OpticalElement(loss_db=fiber_loss, ref_wavelength=ref,
                               label="matched_attenuator")
        fbg_elems = ()

    def signal_path(extra_delay: float, direction: str) -> OpticalPath:
        extras = OpticalElement(base_delay=extra_delay,
                                loss_db=link.signal_extra_loss_db,
                                ref_wavelength=ref, label="launch")
        elems = (extras, fiber) + (fbg_elems if link.fbg_placement == "signal" else ())
        return OpticalPath(elements=elems, direction_label=direction)

    def idler_path(direction: str) -> OpticalPath:
        att = OpticalElement(loss_db=link.idler_loss_db, ref_wavelength=ref,
                             label="idler_arm")
        elems = (fbg_elems if link.fbg_placement == "idler" else ()) + (att,)
        return OpticalPath(elements=elems, direction_label=direction)

    return Paths(
        forward=signal_path(link.forward_extra_delay_ps, "forward"),
        backward=signal_path(link.backward_extra_delay_ps, "backward"),
        idler_a=idler_path("local_a"),
        idler_b=idler_path("local_b"),
    )


@dataclass(frozen=True)
class Scenario:
    clock_a: ClockModel
    clock_b: ClockModel
    source_a: PairSourceSpec
    source_b: PairSourceSpec
    link: LinkParams
    detectors: tuple[DetectorSpec, DetectorSpec, DetectorSpec, DetectorSpec]
    timer: TimerSpec
    correlation: CorrelationParams = CorrelationParams()
    ambient: AmbientModel = AmbientModel()
    transfer: TransferSpec | None = None
    common_reference: bool = False
    n_runs: int = 100
    master_seed: int = 0

    def __post_init__(self):
        if self.n_runs < 1:
            raise ConfigError("n_runs must be >= 1")
        if len(self.detectors) != 4:
            raise ConfigError("exactly four detectors (D1..D4) required")
        if self.source_a.label == self.source_b.label:
            raise ConfigError("source labels must differ")
        if self.clock_a.label == self.clock_b.label:
            raise ConfigError("clock labels must differ")

    def paths(self) -> Paths:
        return build_paths(self.link)

    def detector(self, channel: str) -> DetectorSpec:
        return self.detectors[CHANNELS.index(channel)]


def swap_sites(s: Scenario) -> Scenario:
    """Relabel sites A<->B and reverse both directions.

    Because random streams are keyed by source/clock labels (not sites),
    the swapped campaign replays identical photons with mirrored roles, so
    every recovered offset negates exactly.
    """
    d1, d2, d3, d4 = s.detectors
    link = replace(s.link,
                   forward_extra_delay_ps=s.link.backward_extra_delay_ps,
                   backward_extra_delay_ps=s.link.forward_extra_delay_ps)
    return replace(s, clock_a=s.clock_b, clock_b=s.clock_a,
                   source_a=s.source_b, source_b=s.source_a,
                   detectors=(d2, d1, d4, d3), link=link)


# ---------------------------------------------------------------------------
# INI-style parsing

_REQUIRED_SECTIONS = ("scenario", "clock_a", "clock_b", "source_a", "source_b",
                      "link", "detectors", "timer")
_OPTIONAL_SECTIONS = ("transfer", "correlation", "ambient")


def _parse_noise(text: str, where: str) -> tuple[NoiseComponent, ...]:
    """Comma list of alpha:h pairs, e.g. '0:1.058e-22, -1:4e-26'."""
    text = text.strip()
    if not text:
        return ()
    comps = []
    for part in text.split(","):
        try:
            alpha_s, h_s = part.split(":")
            comps.append(NoiseComponent(alpha=int(alpha_s), h=float(h_s)))
        except (ValueError, ConfigError) as e:
            raise ConfigError(f"{where}: bad noise component {part.strip()!r}: {e}")
    return tuple(comps)


class _Section:
    """Typed, schema-checked access to one config section."""

    def __init__(self, name: str, raw: dict[str, str]):
        self.name = name
        self.raw = raw
        self.seen: set[str] = set()

    def _get(self, key: str, default):
        self.seen.add(key)
        if key not in self.raw:
            if default is None:
                raise ConfigError(f"[{self.name}] missing required key {key!r}")
            return None
        return self.raw[key]

    def number(self, key: str, default: float | None = 0.0) -> float:
        raw = self._get(key, default)
        if raw is None:
            return float(default)
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} must be a number, got {raw!r}")

    def integer(self, key: str, default: int | None = 0) -> int:
        raw = self._get(key, default)
        if raw is None:
            return int(default)
        try:
            return int(raw, 0)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} must be an integer, got {raw!r}")

    def boolean(self, key: str, default: bool = False) -> bool:
        raw = self._get(key, default)
        if raw is None:
            return default
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"[{self.name}] {key} must be a boolean, got {raw!r}")

    def text(self, key: str, default: str = "") -> str:
        raw = self._get(key, default)
        return default if raw is None else raw.strip()

    def finish(self):
        unknown = set(self.raw) - self.seen
        if unknown:
            raise ConfigError(f"[{self.name}] unknown key(s): {', '.join(sorted(unknown))}")


def _clock(sec: _Section, default_label: str) -> ClockModel:
    model = ClockModel(
        initial_offset=sec.number("initial_offset_s"),
        frac_freq_offset=sec.number("frac_freq_offset"),
        freq_drift=sec.number("freq_drift_per_s"),
        noise=_parse_noise(sec.text("noise"), f"[{sec.name}]"),
        label=sec.text("label", default_label),
    )
    sec.finish()
    return model


def _source(sec: _Section, default_label: str) -> PairSourceSpec:
    spec = PairSourceSpec(
        pump_wavelength=sec.number("pump_nm", None),
        signal_center=sec.number("signal_center_nm", None),
        signal_bandwidth_fwhm=sec.number("signal_fwhm_nm", 3.5),
        pair_rate=sec.number("pair_rate_hz", None),
        correlation_jitter_fwhm=sec.number("correlation_jitter_fwhm_ps", 71.8),
        label=sec.text("label", default_label),
        center_uncertainty_nm=sec.number("center_uncertainty_nm", 0.0),
    )
    sec.finish()
    return spec


def parse_config(text: str) -> Scenario:
    """Parse and validate scenario text; raise ConfigError on any problem."""
    cp = configparser.ConfigParser(interpolation=None, strict=True,
                                   inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"config syntax error: {e}")

    present = set(cp.sections())
    missing = [s for s in _REQUIRED_SECTIONS if s not in present]
    if missing:
        raise ConfigError("missing required section(s): " + ", ".join(missing))
    unknown = present - set(_REQUIRED_SECTIONS) - set(_OPTIONAL_SECTIONS)
    if unknown:
        raise ConfigError("unknown section(s): " + ", ".join(sorted(unknown)))

    def section(name: str) -> _Section:
        return _Section(name, dict(cp[name]) if name in present else {})

    sc = section("scenario")
    n_runs = sc.integer("n_runs", None)
    master_seed = sc.integer("master_seed", None)
    common_reference = sc.boolean("common_reference", False)
    use_transfer = sc.boolean("use_transfer", False)
    sc.finish()

    clock_a = _clock(section("clock_a"), "a")
    clock_b = _clock(section("clock_b"), "b")
    source_a = _source(section("source_a"), "A")
    source_b = _source(section("source_b"), "B")

    li = section("link")
    link = LinkParams(
        fiber_on=li.boolean("fiber_on", True),
        fiber_km=li.number("fiber_km", 50.0),
        dispersion_ps_nm_km=li.number("dispersion_ps_nm_km", 17.0),
        loss_db_per_km=li.number("loss_db_per_km", 0.2),
        group_delay_ps_km=li.number("group_delay_ps_km", 4.9e6),
        ref_wavelength_nm=li.number("ref_wavelength_nm", 1560.0),
        fbg_dispersion_ps_nm=li.number("fbg_dispersion_ps_nm", -850.0),
        fbg_placement=li.text("fbg_placement", "idler"),
        signal_extra_loss_db=li.number("signal_extra_loss_db", 0.0),
        idler_loss_db=li.number("idler_loss_db", 0.0),
        forward_extra_delay_ps=li.number("forward_extra_delay_ps", 0.0),
        backward_extra_delay_ps=li.number("backward_extra_delay_ps", 0.0),
        temp_delay_ps_km_k=li.number("temp_delay_ps_km_k", 40.0),
        temp_dispersion_ps_nm_km_k=li.number("temp_dispersion_ps_nm_km_k", -0.0025),
        fbg_temp_delay_ps_k=li.number("fbg_temp_delay_ps_k", 0.0),
        fbg_temp_dispersion_ps_nm_k=li.number("fbg_temp_dispersion_ps_nm_k", 0.0),
    )
    li.finish()

    de = section("detectors")
    det = DetectorSpec(
        efficiency=de.number("efficiency", 0.65),
        jitter_fwhm=de.number("jitter_fwhm_ps", 68.0),
        dark_rate=de.number("dark_rate_hz", 100.0),
        dead_time=de.number("dead_time_ns", 50.0),
    )
    de.finish()

    ti = section("timer")
    timer = TimerSpec(
        lsb=ti.number("lsb_ps", 1.0),
        record_length=ti.number("record_length_s", 2.5),
        cycle_period=ti.number("cycle_period_s", 7.0),
        max_rate=ti.number("max_rate_hz", 40e3),
    )
    ti.finish()

    co = section("correlation")
    correlation = CorrelationParams(
        coarse_bin=co.number("coarse_bin_ps", 1000.0),
        search_span=co.number("search_span_ps", 1e9),
        fine_bin=co.number("fine_bin_ps", 2.0),
        fine_span=co.number("fine_span_ps", 2000.0),
        significance_threshold=co.number("significance_threshold", 5.0),
    )
    co.finish()

    am = section("ambient")
    ambient = AmbientModel(
        mean_temp=am.number("mean_temp_k", 293.15),
        sine_amplitude=am.number("sine_amplitude_k", 0.0),
        sine_period=am.number("sine_period_s", 86400.0),
        phase=am.number("phase_rad", 0.0),
    )
    am.finish()

    tr = section("transfer")
    transfer = TransferSpec(
        white_pm_level=tr.number("white_pm_adev_1s", 0.0),
        floor_level=tr.number("floor_adev", 0.0),
        sine_amplitude=tr.number("sine_amplitude_s", 0.0),
        sine_period=tr.number("sine_period_s", 1.0),
    )
    tr.finish()
    if not use_transfer:
        transfer = None

    try:
        return Scenario(
            clock_a=clock_a, clock_b=clock_b,
            source_a=source_a, source_b=source_b,
            link=link, detectors=(det, det, det, det), timer=timer,
            correlation=correlation, ambient=ambient, transfer=transfer,
            common_reference=common_reference,
            n_runs=n_runs, master_seed=master_seed,
        )
    except ValueError as e:
        raise ConfigError(str(e))
