"""Command line entry point: ``piqfc simulate|analyze|fit-efficiency|pipeline``.

Exit codes: 0 success (a non-converged reconstruction is flagged inside the
report), 2 bad input or configuration, 3 computation failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, load_config
from .measurement import RecordFormatError, format_records, parse_records
from .pipeline import analyze, match_records, run_pipeline, simulate
from .qfc_channel import (
    FitDivergedError,
    InsufficientDataError,
    UnreachableTargetError,
    fit_efficiency,
    parse_calibration,
    power_for_efficiency,
)
from .quantum_core import QuantumCoreError
from .report import dumps_report
from .tomography import TomographyError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_COMPUTE = 3


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read_text(path: str, what: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"cannot read {what} {path!r}: {exc.strerror}") from None


def _load_config(args):
    _read_text(args.config, "config")
    try:
        cfg = load_config(args.config)
        return cfg.with_overrides(seed=args.seed, resamples=getattr(args, "resamples", None))
    except ConfigError as exc:
        raise CliError(EXIT_INPUT, f"{args.config}: {exc}") from None


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    try:
        sims = simulate(cfg)
    except (ValueError, QuantumCoreError) as exc:
        raise CliError(EXIT_COMPUTE, f"simulation failed: {exc}") from None
    named = len(cfg.scenarios) > 1
    text = "".join(
        format_records(recs, name if named else None) for name, (recs, _) in sims.items()
    )
    _emit(text, args.out)
    info = sys.stdout if args.out else sys.stderr
    for name, (recs, success) in sims.items():
        line = f"{name}: total counts {sum(r.count for r in recs)}"
        if success is not None:
            line += f", QFC success probability {success:.6g}"
        print(line, file=info)
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _load_config(args)
    try:
        blocks = parse_records(_read_text(args.records, "records"))
        records = match_records(cfg, blocks)
    except (RecordFormatError, ValueError) as exc:
        raise CliError(EXIT_INPUT, f"{args.records}: {exc}") from None
    try:
        report = analyze(cfg, records)
    except TomographyError as exc:
        raise CliError(EXIT_COMPUTE, f"{type(exc).__name__}: {exc}") from None
    _emit(dumps_report(report), args.out)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _load_config(args)
    try:
        report = run_pipeline(cfg)
    except (TomographyError, ValueError) as exc:
        raise CliError(EXIT_COMPUTE, f"{type(exc).__name__}: {exc}") from None
    _emit(dumps_report(report), args.out)
    return EXIT_OK


def cmd_fit_efficiency(args) -> int:
    try:
        data = parse_calibration(_read_text(args.data, "calibration data"))
    except ValueError as exc:
        raise CliError(EXIT_INPUT, f"{args.data}: {exc}") from None
    try:
        fit = fit_efficiency(data)
    except InsufficientDataError as exc:
        raise CliError(EXIT_INPUT, f"InsufficientData: {exc}") from None
    except FitDivergedError as exc:
        raise CliError(EXIT_COMPUTE, f"FitDiverged: {exc}") from None
    except ValueError as exc:
        raise CliError(EXIT_INPUT, f"{args.data}: {exc}") from None

    result = {
        "eta_max": fit.model.eta_max,
        "g_per_W": fit.model.g,
        "rms_residual": fit.residual,
        "iterations": fit.iterations,
        "n_points": len(data),
        "peak_power_W": fit.model.peak_power_W,
    }
    lines = [
        f"eta_max = {fit.model.eta_max:.6g}",
        f"g = {fit.model.g:.6g} /W",
        f"rms residual = {fit.residual:.3g}",
    ]
    if args.target is not None:
        try:
            power = power_for_efficiency(fit.model, args.target)
        except UnreachableTargetError as exc:
            print("\n".join(lines))
            raise CliError(EXIT_COMPUTE, f"UnreachableTarget: {exc}") from None
        result["target_efficiency"] = args.target
        result["target_power_W"] = power
        lines.append(f"pump power for efficiency {args.target:g}: {power:.6g} W")
    print("\n".join(lines))
    if args.out:
        _emit(json.dumps(result, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="piqfc",
        description="Polarization-insensitive QFC simulation and tomography analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate coincidence counts for a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="record file (default: stdout)")
    p.add_argument("--seed", type=int, help="override [run] seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="reconstruct and score recorded counts")
    p.add_argument("--records", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="report file (default: stdout)")
    p.add_argument("--seed", type=int, help="override [run] seed")
    p.add_argument("--resamples", type=int, help="override [run] bootstrap_resamples")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit-efficiency", help="fit eta_max sin^2(sqrt(g P)) to calibration data")
    p.add_argument("data", help="text file of 'power_W efficiency' lines")
    p.add_argument("--target", type=float, help="report the pump power reaching this efficiency")
    p.add_argument("--out", help="write the fit as JSON")
    p.set_defaults(func=cmd_fit_efficiency)

    p = sub.add_parser("pipeline", help="simulate and analyze every scenario of a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="report file (default: stdout)")
    p.add_argument("--seed", type=int, help="override [run] seed")
    p.add_argument("--resamples", type=int, help="override [run] bootstrap_resamples")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"piqfc {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
