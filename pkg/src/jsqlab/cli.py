"""Command-line entry point: ``jsqlab <command> [flags]``.

Exit codes: 0 pass, 1 a check failed, 2 invalid configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments
from .errors import ConfigError, NumericalError
from .report import build_report, csv_text, dumps, write_text

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

# flag name -> config key
FLAG_KEYS = {
    "seed": "seed", "n": "n", "beta": "beta", "kappa": "kappa", "kappa1": "kappa1", "kappa2": "kappa2",
    "alpha": "alpha", "grid": "grid", "horizon": "horizon", "burn_in": "burn_in", "trunc_b": "trunc_b",
    "cap_c": "cap_c",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with 2 and plain text; keep the JSON contract
        raise ConfigError(message, "USAGE")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jsqlab", description="JSQ heavy-traffic experiments and checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for command in experiments.DEFAULTS:
        p = sub.add_parser(command)
        p.add_argument("--config", type=Path, help="JSON file of flat (dotted) config keys")
        p.add_argument("--out", type=Path, help="report path; CSV companions share its stem")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key, e.g. --set sde.step=5e-4")
        p.add_argument("--seed")
        for flag in ("n", "beta", "kappa", "kappa1", "kappa2", "alpha", "grid", "horizon", "burn-in",
                     "trunc-b", "cap-c"):
            p.add_argument(f"--{flag}")
        if command == "verify-drift":
            p.add_argument("--scan", action="store_true", help="also sweep alpha and (kappa1, kappa2)")
    return parser


def _attach_values(argv: list[str]) -> list[str]:
    """Rewrite ``--flag VALUE`` as ``--flag=VALUE`` so values such as ``-3:0:50,0:3:50`` are not read as flags."""
    valued = {"--" + f for f in ("config", "out", "set", "seed", *[k.replace("_", "-") for k in FLAG_KEYS])}
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in valued and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def _config_layers(command: str, args: argparse.Namespace) -> dict:
    file_layer = {}
    if args.config is not None:
        try:
            file_layer = json.loads(args.config.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config} is not valid JSON: {exc}", "CONFIG") from exc
        if not isinstance(file_layer, dict):
            raise ConfigError("config file must hold a JSON object", "CONFIG")
    flags = {}
    for attr, key in FLAG_KEYS.items():
        value = getattr(args, attr, None)
        if value is not None:
            flags[key] = value
    if getattr(args, "scan", False):
        flags["scan"] = True
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}", "USAGE")
        flags[key.strip()] = value
    return experiments.resolve_config(command, file_layer, flags)


def _emit(path: Path | None, report: dict, tables) -> None:
    text = dumps(report)
    if path is None:
        sys.stdout.write(text)
        return
    write_text(path, text)
    for table in tables:
        companion = path.with_name(f"{path.stem}.{table.suffix}.csv")
        write_text(companion, csv_text(table.columns, table.rows, table.comment))


def _error_record(command: str | None, exc: Exception, code: str) -> dict:
    return {"schema_version": 1, "command": command, "error": {"code": code, "type": type(exc).__name__,
                                                               "message": str(exc)}}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    command = argv[0] if argv and not argv[0].startswith("-") else None
    out_path = None
    try:
        args = build_parser().parse_args(_attach_values(argv))
        command = args.command
        out_path = args.out
        experiments.worker_count()
        cfg = _config_layers(command, args)
        if command == "accept":
            from .acceptance import run_suite

            outcome = run_suite(cfg, echo=lambda line: print(line, file=sys.stderr, flush=True))
        else:
            outcome = experiments.run(command, cfg)
        _emit(out_path, build_report(command, cfg, outcome.results, outcome.passed), outcome.tables)
        return EXIT_PASS if outcome.passed else EXIT_FAIL
    except ConfigError as exc:
        record, status = _error_record(command, exc, exc.code), EXIT_CONFIG
    except NumericalError as exc:
        record, status = _error_record(command, exc, getattr(exc, "code", "NUMERICAL")), EXIT_NUMERICAL
    text = dumps(record)
    sys.stderr.write(text)
    if out_path is not None:
        try:
            write_text(out_path, text)
        except OSError:
            pass
    return status


if __name__ == "__main__":
    sys.exit(main())
