"""Command-line entry point.

Exit codes: 0 on success, 2 for configuration or usage errors, 3 when a
requested problem exceeds the memory cap.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import harness
from .errors import ConfigError, MemoryCapError

_COMMANDS = {
    "saw": harness.cmd_saw,
    "fold": harness.cmd_fold,
    "tune-penalty": harness.cmd_tune_penalty,
}


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", metavar="FILE",
                     help="settings file with one key = value per line")
    sub.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override one setting (repeatable)")
    sub.add_argument("--seed", type=int, help="root random seed")
    sub.add_argument("--out-dir", help="archive directory to create")
    sub.add_argument("--threads", type=int, help="worker threads (recorded)")
    sub.add_argument("--memory-cap-bytes", type=int,
                     help="refuse problems whose tables exceed this size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quditfold",
        description="Lattice-walk and peptide-folding experiments on "
        "mixed-radix quantum statevectors.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    sub = subs.add_parser("saw", help="self-avoiding-loop sampling experiment")
    _add_common(sub)
    sub = subs.add_parser("fold", help="tetrahedral peptide folding experiment")
    _add_common(sub)
    sub = subs.add_parser("tune-penalty",
                          help="sweep the walk penalty coefficient")
    _add_common(sub)
    sub = subs.add_parser("report", help="summarize an existing archive")
    sub.add_argument("archive", help="archive directory")
    return parser


def _config_from_args(args: argparse.Namespace) -> harness.ExperimentConfig:
    overrides: dict[str, str] = {}
    if args.config:
        overrides.update(harness.load_config_file(args.config))
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    for flag in ("seed", "out_dir", "threads", "memory_cap_bytes"):
        value = getattr(args, flag)
        if value is not None:
            overrides[flag] = str(value)
    return harness.apply_overrides(harness.ExperimentConfig(), overrides)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors via exit(2)
        code = exc.code
        return code if isinstance(code, int) else 2
    try:
        if args.command == "report":
            for line in harness.report_lines(args.archive):
                print(line)
            return 0
        config = _config_from_args(args)
        config = replace(config, problem=args.command)
        archive = _COMMANDS[args.command](config)
        path = archive.write()
        print(f"archive written: {path}")
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MemoryCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
