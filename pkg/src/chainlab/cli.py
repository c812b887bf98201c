"""Command-line entry point: one subcommand per experiment kind, plus `verify`."""
from __future__ import annotations

import argparse
import json
import sys

from . import runner, verify

# per-kind settings that reproduce the desk-scale checks when no config file is given
PRESETS = {
    "simulate-profile": {"params": {"n": 16, "b": 1.0}, "times": [0.0, 0.25]},
    "lemma3-sweep": {"sweep": {"ns": [2 ** k for k in range(6, 13)], "bs": [0.0, 1 / 3, 0.5]}},
    "corrector-norms": {"sweep": {"ns": [2 ** k for k in range(6, 13)], "bs": [0.2, 1 / 3, 0.8]}},
    "asymptotics-sweep": {"sweep": {"ns": [2 ** k for k in range(4, 13)], "bs": [0.0, 1 / 3, 2 / 3, 1.0]}},
    "kernel-table": {"params": {"b": 1.0}, "times": [0.25]},
    "crossover-compare": {"params": {"n": 16, "b": 0.0}, "sweep": {"ns": [16, 32]}},
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chainlab", description="Crossover experiments for the energy-current chain.")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in runner.KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", metavar="PATH", help="YAML experiment file")
        p.add_argument("--out", metavar="DIR", default=None, help="root directory for run outputs (default: runs)")
        p.add_argument("--seed", type=int, default=None, help="master seed, overrides the config")
        p.add_argument("--threads", type=int, default=None, help="worker threads, overrides the config")
        p.add_argument("--verify", action="store_true", help="also run the invariant suites")
    v = sub.add_parser("verify", help="run the invariant suites only")
    v.add_argument("--suite", choices=sorted(verify.SUITES), action="append", help="restrict to these suites")
    return parser


def _config(args) -> runner.ExperimentConfig:
    raw = {}
    if args.config:
        import yaml

        with open(args.config) as fh:
            raw = yaml.safe_load(fh) or {}
        if raw.get("kind", args.command) != args.command:
            raise runner.ConfigError("kind", f"config is for {raw['kind']!r}, not {args.command!r}")
    else:
        raw = dict(PRESETS[args.command])
    raw["kind"] = args.command
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.threads is not None:
        raw["threads"] = args.threads
    return runner.ExperimentConfig.from_dict(raw)


def _print_checks(checks: dict) -> None:
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify":
        suites = args.suite or sorted(verify.SUITES)
        checks = {}
        for s in suites:
            checks.update(verify.SUITES[s]())
        _print_checks(checks)
        return 0 if all(checks.values()) else 1
    try:
        cfg = _config(args)
    except runner.ConfigError as exc:
        print(f"configuration error in {exc.field}: {exc}", file=sys.stderr)
        return 2
    result = runner.run(cfg, args.out)
    checks = dict(result.report.get("checks", {}))
    if args.verify:
        checks.update(verify.run_all())
    _print_checks(checks)
    print(json.dumps({"directory": str(result.directory), "passed": all(checks.values())}))
    return 0 if all(checks.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
