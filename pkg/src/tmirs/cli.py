"""Command-line front end.

Subcommands:
  sweep     BER map over an (elevation, azimuth) grid -> CSV / JSON / PGM
  validate  cancellation report at the legitimate direction -> JSON
  verify    random cross-check of the harmonic engine against the time-domain oracle
  design    write a designed schedule as JSON

Exit codes: 0 ok, 1 validation failure, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace

from .design import DesignMode, schedule_to_dict
from .link import Equalizer, LinkConfig
from .sweep import (
    FULL_SCALE_SYMBOLS,
    AngleRange,
    SweepSpec,
    build_schedule,
    run_sweep,
    run_validate,
    spec_from_config,
    with_symbols,
)
from .verify import equivalence_errors

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_BAD_INPUT = 2

logger = logging.getLogger("tmirs")


class BadInput(Exception):
    pass


def parse_grid(text: str) -> tuple[AngleRange | None, AngleRange | None, float | None]:
    """``STEP`` keeps the ranges and changes both steps; ``T0:T1:DT,P0:P1:DP`` sets both ranges."""
    text = text.strip()
    if "," not in text and ":" not in text:
        return None, None, float(text)
    try:
        el_txt, az_txt = text.split(",")
        el = AngleRange(*(float(v) for v in el_txt.split(":")))
        az = AngleRange(*(float(v) for v in az_txt.split(":")))
    except (TypeError, ValueError) as exc:
        raise BadInput(f"bad --grid {text!r}: {exc}") from None
    return el, az, None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (angles in degrees)")
    p.add_argument("--mode", help="linear_column | linear_row | planar | enhanced_linear")
    p.add_argument("--seed", type=int, help="master seed for design and link noise")
    p.add_argument("--symbols", type=int, help="OFDM symbols per grid point")
    p.add_argument("--full-scale", action="store_true", help=f"use {FULL_SCALE_SYMBOLS} symbols")
    p.add_argument("--snr-db", type=float, help="data-symbol power over noise power (dB); 'inf' disables noise")
    p.add_argument("--hop-period", type=int, help="symbols between parameter hops (enhanced mode)")
    p.add_argument("--delta-tau", type=float, help="common on-duration (linear/planar)")
    p.add_argument("--grid", help="STEP or T0:T1:DT,P0:P1:DP in degrees")
    p.add_argument("--equalizer", choices=[e.value for e in Equalizer])
    p.add_argument("--workers", type=int, help="worker processes (default: CPU count)")
    p.add_argument("--max-points", type=int, help="refuse sweeps larger than this")
    p.add_argument("--out-csv")
    p.add_argument("--out-pgm")
    p.add_argument("--out-json", help="metadata (sweep) or report (validate) JSON")
    p.add_argument("--out-schedule", help="write the designed schedule as JSON")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tmirs", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    sweep = sub.add_parser("sweep", help="BER map over an angular grid")
    _add_common(sweep)
    sweep.add_argument("--validate-only", action="store_true", help="only run the schedule validation")
    validate = sub.add_parser("validate", help="schedule cancellation report")
    _add_common(validate)
    design = sub.add_parser("design", help="write the designed schedule")
    _add_common(design)
    verify = sub.add_parser("verify", help="engine vs time-domain oracle on random instances")
    verify.add_argument("--instances", type=int, default=200)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--tolerance", type=float, default=1e-9)
    verify.add_argument("-v", "--verbose", action="store_true")
    return parser


def spec_from_args(args: argparse.Namespace) -> SweepSpec:
    cfg = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise BadInput(f"cannot read config {args.config}: {exc}") from None
    spec = spec_from_config(cfg)

    design = spec.design
    if args.mode:
        design = replace(design, mode=DesignMode.parse(args.mode))
    if args.seed is not None:
        design = replace(design, seed=args.seed)
        spec = replace(spec, link=replace(spec.link, master_seed=args.seed))
    if args.hop_period is not None:
        design = replace(design, hop_period=args.hop_period)
    if args.delta_tau is not None:
        design = replace(design, delta_tau=args.delta_tau)
    spec = replace(spec, design=design)

    link = spec.link
    if args.snr_db is not None:
        link = LinkConfig(args.snr_db, link.equalizer, link.master_seed)
    if args.equalizer:
        link = LinkConfig(link.symbol_snr_db, Equalizer.parse(args.equalizer), link.master_seed)
    spec = replace(spec, link=link)

    if args.full_scale:
        spec = with_symbols(spec, FULL_SCALE_SYMBOLS)
    if args.symbols is not None:
        spec = with_symbols(spec, args.symbols)
    if args.grid:
        el, az, step = parse_grid(args.grid)
        if step is not None:
            el = AngleRange(spec.elevation.start, spec.elevation.stop, step)
            az = AngleRange(spec.azimuth.start, spec.azimuth.stop, step)
        spec = replace(spec, elevation=el, azimuth=az)
    for name in ("workers", "max_points", "out_csv", "out_pgm", "out_json", "out_schedule"):
        value = getattr(args, name)
        if value is not None:
            spec = replace(spec, **{name: value})
    return spec


def _cmd_validate(spec: SweepSpec) -> int:
    report = run_validate(spec, spec.out_json)
    if spec.out_json is None:
        print(json.dumps(report.to_dict(), indent=2))
    status = "pass" if report.passed else "FAIL"
    print(f"{status}: residual {report.structural_residual:.3e} outside offsets {report.surviving_offsets}",
          file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VALIDATION


def _cmd_sweep(spec: SweepSpec) -> int:
    bermap = run_sweep(spec)
    ber = bermap.ber
    r, c = divmod(int(ber.argmin()), ber.shape[1])
    print(
        f"{spec.n_points} points, mode {bermap.metadata['mode']}, "
        f"min BER {ber.min():.3g} at ({bermap.elevations_deg[r]:g}, {bermap.azimuths_deg[c]:g}) deg, "
        f"{bermap.metadata['runtime_s']:.1f} s"
    )
    return EXIT_OK


def _cmd_design(spec: SweepSpec) -> int:
    schedule = build_schedule(spec.geometry, spec.ofdm, spec.design)
    doc = json.dumps(schedule_to_dict(spec.geometry, schedule), indent=1)
    if spec.out_schedule:
        with open(spec.out_schedule, "w", encoding="utf-8") as fh:
            fh.write(doc)
    else:
        print(doc)
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    if args.instances < 1:
        raise BadInput("--instances must be positive")
    errors = equivalence_errors(args.instances, args.seed)
    worst = max(e for _, e in errors)
    for mode in DesignMode:
        errs = [e for m, e in errors if m is mode]
        if errs:
            print(f"{mode.value:16s} {len(errs):4d} instances, max rel. error {max(errs):.3e}")
    ok = worst <= args.tolerance and math.isfinite(worst)
    print(f"{'pass' if ok else 'FAIL'}: worst {worst:.3e} (tolerance {args.tolerance:g})")
    return EXIT_OK if ok else EXIT_VALIDATION


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            return _cmd_verify(args)
        spec = spec_from_args(args)
        if args.command == "validate" or getattr(args, "validate_only", False):
            return _cmd_validate(spec)
        if args.command == "design":
            return _cmd_design(spec)
        return _cmd_sweep(spec)
    except (BadInput, ValueError, OSError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
