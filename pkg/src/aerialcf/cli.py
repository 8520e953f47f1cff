"""Command-line entry point.

Subcommands: run (sweep -> CSV), mc-validate (chain vs closed form ->
JSON), cdf (per-drop minimum-rate CDF -> CSV).  Flags override config
fields.  Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .errors import SolverError, ValidationError
from .expcli import ExperimentConfig, cdf_experiment, mc_validate, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aerialcf",
        description="Cell-free aerial network simulator and optimizer",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "mc-validate", "cdf"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output file (CSV or JSON)")
        p.add_argument("--sweep", help="sweep parameter name")
        p.add_argument("--values", help="comma-separated sweep values")
        p.add_argument("--scheme")
        p.add_argument("--optimize")
        p.add_argument("--drops", type=int)
        p.add_argument("--mc-trials", type=int, dest="mc_trials")
    return parser


def _parse_values(text: str, param: str):
    vals = [v.strip() for v in text.split(",") if v.strip()]
    if param == "environment":
        return vals
    out = []
    for v in vals:
        out.append(float(v) if "." in v else int(v))
    return out


def load_config(args) -> ExperimentConfig:
    config = (
        ExperimentConfig.from_json_file(args.config)
        if args.config
        else ExperimentConfig()
    )
    overrides = {}
    for name in ("seed", "scheme", "optimize", "drops", "mc_trials"):
        v = getattr(args, name, None)
        if v is not None:
            overrides[name] = v
    if args.sweep is not None:
        overrides["sweep_param"] = args.sweep
        if args.values is None:
            raise ValidationError("--sweep requires --values")
        overrides["sweep_values"] = tuple(_parse_values(args.values, args.sweep))
    elif args.values is not None:
        raise ValidationError("--values requires --sweep")
    return replace(config, **overrides) if overrides else config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args)
    except (ValidationError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "run":
            rows = run(config, out_path=args.out)
            print(f"{len(rows)} rows written" if args.out else f"{len(rows)} rows")
        elif args.command == "mc-validate":
            report = mc_validate(config, out_path=args.out)
            if not args.out:
                print(json.dumps(report, indent=2))
        else:
            rows = cdf_experiment(config, out_path=args.out)
            print(f"{len(rows)} CDF points")
    except ValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
