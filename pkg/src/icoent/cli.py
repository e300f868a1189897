"""Command-line entry point: one subcommand per experiment driver.

Exit status convention: 0 success, 1 configuration error, 2 numerical
failure, 3 verification failure.  A flat key=value config file can supply any
flag default; explicit flags override the file.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .errors import BracketingError, DomainError, MonotonicityError, NumericalError
from .experiments import (
    RunConfig,
    SpectrumStore,
    run_fermi_verify,
    run_field_sweep,
    run_frh,
    run_quench,
    run_separation,
    run_temp_sweep,
)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_NUMERICAL_ERROR = 2
EXIT_VERIFICATION_FAILURE = 3

_CONFIG_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def exit_code_for_exception(exc: BaseException) -> int:
    """Map an exception raised during a run to the documented exit status."""
    if isinstance(exc, (MonotonicityError, BracketingError, NumericalError, np.linalg.LinAlgError)):
        return EXIT_NUMERICAL_ERROR
    if isinstance(exc, (DomainError, ValueError)):
        return EXIT_CONFIG_ERROR
    raise exc


def _parse_config_file(path: str) -> dict:
    """Flat key=value file mirroring the flags; '#' starts a comment."""
    values: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _coerce(key: str, value: str):
    if key not in _CONFIG_FIELD_TYPES:
        raise DomainError(f"unknown config key {key!r}")
    if key in ("pattern", "pair", "face"):
        return value
    if key == "out_dir":
        return Path(value)
    if key == "refine":
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise DomainError(f"config flag {key} expects a boolean, got {value!r}")
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        raise DomainError(f"config value for {key} is not numeric: {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", dest="out_dir", help="output directory")
    common.add_argument("--seed", type=int, help="global RNG seed (recorded in all outputs)")
    common.add_argument("--config", help="flat key=value config file; flags override it")
    common.add_argument("--h", dest="h", type=float, help="transverse field in units of J")
    common.add_argument("--restarts", type=int, help="distance optimizer mutation restarts")
    common.add_argument("--witness-restarts", dest="witness_restarts", type=int)
    common.add_argument("--max-iter", dest="max_iter", type=int)
    common.add_argument("--witness-max-iter", dest="witness_max_iter", type=int)
    common.add_argument("--no-refine", dest="refine", action="store_false", default=None)

    parser = argparse.ArgumentParser(
        prog="icoent",
        description="Entanglement thresholds and lifetimes of the icosahedral transverse-field Ising model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("field-sweep", parents=[common], help="detectors vs transverse field at T -> 0")
    p.add_argument("--h-min", dest="h_min", type=float)
    p.add_argument("--h-max", dest="h_max", type=float)
    p.add_argument("--h-step", dest="h_step", type=float)

    p = sub.add_parser("temp-sweep", parents=[common], help="detectors and ball distances vs temperature")
    p.add_argument("--t-min", dest="t_min", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--t-points", dest="t_points", type=int)
    p.add_argument("--pair", help="pair selection like 1+2 (default: smallest adjacent pair)")
    p.add_argument("--face", help="triple selection like 1+2+3 (default: smallest face)")

    p = sub.add_parser("quench", parents=[common], help="detectors vs time after a product-state quench")
    p.add_argument("--pattern", help="12-character up/down string, 0 = spin-up")
    p.add_argument("--time-max", dest="time_max", type=float)
    p.add_argument("--time-step", dest="time_step", type=float)
    p.add_argument("--pair", help="pair selection like 1+2 (default: smallest adjacent pair)")
    p.add_argument("--face", help="triple selection like 1+2+3 (default: smallest face)")

    sub.add_parser("separation", parents=[common], help="detectors vs spatial separation at T -> 0")
    sub.add_parser("frh", parents=[common], help="minimal reduced-state eigenvalue per eigenstate")

    p = sub.add_parser("fermi-verify", parents=[common], help="verify fermionic biseparable constructions")
    p.add_argument("--m", dest="m", type=int, help="mode count, 3 or 4")
    p.add_argument("--n-seeds", dest="n_seeds", type=int)

    return parser


def _build_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if getattr(args, "config", None):
        for key, raw in _parse_config_file(args.config).items():
            values[key] = _coerce(key, raw)
    for key in _CONFIG_FIELD_TYPES:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value
    if "out_dir" in values:
        values["out_dir"] = Path(values["out_dir"])
    return RunConfig(**values)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG_ERROR

    try:
        config = _build_config(args)
    except (DomainError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    store = SpectrumStore()
    try:
        if args.command == "field-sweep":
            result = run_field_sweep(config, store)
            print(f"wrote {result.csv_path}")
            print(f"h2_star = {result.h2_star}")
        elif args.command == "temp-sweep":
            result = run_temp_sweep(config, store)
            print(f"wrote {result.csv_path}")
            print(f"thresholds: {result.thresholds}")
        elif args.command == "quench":
            result = run_quench(config, store)
            print(f"wrote {result.csv_path}")
        elif args.command == "separation":
            result = run_separation(config, store)
            print(f"wrote {result.csv_path}")
        elif args.command == "frh":
            result = run_frh(config, store)
            print(f"wrote {result.csv_path}")
        elif args.command == "fermi-verify":
            result = run_fermi_verify(config)
            print(f"wrote {result.report_path}")
            if not result.passed:
                print("verification FAILED", file=sys.stderr)
                return EXIT_VERIFICATION_FAILURE
        else:  # pragma: no cover - argparse enforces the choices
            return EXIT_CONFIG_ERROR
    except BaseException as exc:  # mapped to the documented exit codes
        if isinstance(exc, (KeyboardInterrupt, SystemExit)):
            raise
        code = exit_code_for_exception(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
