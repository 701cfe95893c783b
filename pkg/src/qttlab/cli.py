"""Command-line interface.

Subcommands:

* ``simulate``  -- run a campaign from a preset or config file; writes
                   ``offsets.csv`` (and optionally per-run tag files).
* ``coincide``  -- correlate two binary tag files; prints the fitted peak
                   and writes the fine histogram CSV.
* ``stability`` -- offsets CSV in, stability CSV out (adev/mdev/tdev).
* ``bias``      -- print the closed-form wavelength-mismatch bias table
                   for a scenario.
* ``selftest``  -- run the acceptance criteria, one PASS/FAIL line each.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, csvio, tagio
from .coincidence import CorrelationParams, coarse_offset, fine_histogram, fit_peak
from .config import Scenario, parse_config
from .errors import QttlabError
from .presets import PRESET_NAMES, preset_text
from .stability import curve
from .twoway import (bias_predict, realize_clocks, resolve_threads,
                     run_campaign, simulate_record, CAMPAIGN_LEAD_IN_S)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qttlab",
                                 description="two-way photon-pair time transfer simulator")
    ap.add_argument("--version", action="version", version=f"qttlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_scenario_args(p):
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("--config", type=Path, help="scenario config file")
        g.add_argument("--preset", choices=PRESET_NAMES, help="built-in scenario")

    sim = sub.add_parser("simulate", help="run a measurement campaign")
    add_scenario_args(sim)
    sim.add_argument("--out", type=Path, default=Path("."), help="output directory")
    sim.add_argument("--seed", type=int, help="override master seed")
    sim.add_argument("--runs", type=int, help="override run count")
    sim.add_argument("--save-tags", type=int, default=0, metavar="N",
                     help="also write QTT1 tag files for the first N runs")

    co = sub.add_parser("coincide", help="correlate two tag files")
    co.add_argument("file_a", type=Path)
    co.add_argument("file_b", type=Path)
    co.add_argument("--out", type=Path, help="histogram CSV path")
    co.add_argument("--center", type=float,
                    help="skip the coarse search and use this lag (ps)")
    add_scenario_args_optional(co)

    st = sub.add_parser("stability", help="stability curve from an offsets CSV")
    st.add_argument("input", type=Path)
    st.add_argument("--estimator", choices=("adev", "mdev", "tdev"), default="tdev")
    st.add_argument("--out", type=Path, help="stability CSV path")

    bi = sub.add_parser("bias", help="closed-form wavelength-mismatch bias")
    add_scenario_args(bi)

    se = sub.add_parser("selftest", help="run the acceptance suite")
    se.add_argument("--criteria", help="comma-separated subset, e.g. 1,3,5b")
    return ap


def add_scenario_args_optional(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--config", type=Path, help="scenario config for correlation params")
    g.add_argument("--preset", choices=PRESET_NAMES)


def _load_scenario(args) -> Scenario:
    if getattr(args, "preset", None):
        return parse_config(preset_text(args.preset))
    return parse_config(args.config.read_text())


def _cmd_simulate(args) -> int:
    scenario = _load_scenario(args)
    series = run_campaign(scenario, n_runs=args.runs, seed=args.seed,
                          threads=resolve_threads())
    args.out.mkdir(parents=True, exist_ok=True)
    out_csv = args.out / "offsets.csv"
    csvio.write_offsets_csv(series, out_csv)
    if args.save_tags > 0:
        master = scenario.master_seed if args.seed is None else args.seed
        n_total = scenario.n_runs if args.runs is None else args.runs
        cycle = scenario.timer.cycle_period
        span = CAMPAIGN_LEAD_IN_S + n_total * cycle + 2.0
        clock_a, clock_b = realize_clocks(scenario, span, master)
        for r in range(min(args.save_tags, n_total)):
            tags = simulate_record(scenario, r, CAMPAIGN_LEAD_IN_S + r * cycle,
                                   master, clock_a, clock_b)
            for ch, stream in tags.items():
                tagio.write_tags(stream, args.out / f"run{r:03d}_{ch.lower()}.qtt")
    n_ok = sum(1 for r in series.records if r.sample is not None)
    print(f"{n_ok}/{len(series.records)} runs ok -> {out_csv}")
    return 0


def _cmd_coincide(args) -> int:
    a = tagio.read_tags(args.file_a)
    b = tagio.read_tags(args.file_b)
    if args.preset or args.config:
        params = _load_scenario(args).correlation
    else:
        params = CorrelationParams()
    center = coarse_offset(a, b, params) if args.center is None else args.center
    hist = fine_histogram(a, b, center, params)
    result = fit_peak(hist, threshold=params.significance_threshold)
    if args.out:
        csvio.write_histogram_csv(hist, args.out)
    print(f"center_ps = {result.center!r}")
    print(f"center_uncertainty_ps = {result.center_uncertainty!r}")
    print(f"fwhm_ps = {result.fwhm!r}")
    print(f"n_coincidences = {result.n_coincidences}")
    print(f"background_per_bin = {result.background_per_bin!r}")
    print(f"fit_ok = {result.fit_ok}")
    return 0


def _cmd_stability(args) -> int:
    schema = csvio.sniff_schema(args.input)
    if schema == "offsets":
        series = csvio.read_offsets_csv(args.input)
        data, coverage = series.longest_uniform_stretch()
        cv = curve(data, estimator=args.estimator)
        print(f"analyzed {len(data)} contiguous samples "
              f"({100 * coverage:.0f}% coverage), tau0 = {data.tau0!r} s")
    elif schema == "stability":
        # already a curve; pass through so downstream tooling can re-consume
        cv = csvio.read_stability_csv(args.input)
        print(f"input is already a stability CSV ({cv.estimator}); re-emitting")
    else:
        raise QttlabError("histogram CSV is not a time series; "
                          "stability needs an offsets CSV")
    out = args.out or args.input.with_suffix(f".{args.estimator}.csv")
    csvio.write_stability_csv(cv, out)
    for tau, v, n in zip(cv.taus, cv.values, cv.n_terms):
        print(f"tau {tau:12g} s  {cv.estimator} {v:.6e}  (n={n})")
    print(f"-> {out}")
    return 0


def _cmd_bias(args) -> int:
    s = _load_scenario(args)
    ld = s.link.fiber_km * s.link.dispersion_ps_nm_km
    pred = bias_predict(s.link.fiber_km, s.link.dispersion_ps_nm_km,
                        s.source_a.signal_center, s.source_b.signal_center,
                        s.source_a.center_uncertainty_nm,
                        s.source_b.center_uncertainty_nm)
    print(f"{'fiber length':24s} {pred.length_km:g} km")
    print(f"{'dispersion':24s} {pred.dispersion_ps_nm_km:g} ps/nm/km  "
          f"(L*D = {ld:g} ps/nm)")
    print(f"{'signal center A':24s} {pred.lambda_a:.4f} nm")
    print(f"{'signal center B':24s} {pred.lambda_b:.4f} nm")
    print(f"{'mismatch':24s} {pred.lambda_a - pred.lambda_b:+.4f} nm")
    print(f"{'predicted bias':24s} {pred.tau_prime:.1f} ps +- {pred.uncertainty:.1f} ps")
    return 0


def _cmd_selftest(args) -> int:
    from .acceptance import run_all
    only = set(args.criteria.split(",")) if args.criteria else None
    results = run_all(only)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "coincide": _cmd_coincide,
    "stability": _cmd_stability,
    "bias": _cmd_bias,
    "selftest": _cmd_selftest,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except QttlabError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
