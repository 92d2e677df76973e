"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 run failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .. import activations as act
from ..errors import ConfigError
from ..spaces import KINDS
from . import config as cfgmod
from . import runner, verify

EXIT_OK, EXIT_USAGE, EXIT_RUN, EXIT_VERIFY = 0, 1, 2, 3

SPACE_PARAMS = {
    "euclidean": "d",
    "matrix": "n, m",
    "lp_seq": "p, N, s",
    "c0_seq": "N, s",
    "lp_fun": "p, a, b, nodes, order",
    "c_fun": "a, b, nodes, order",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tvsfnn", description="Shallow functional-input networks: runs, sweeps, checks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="run one configuration")
    r.add_argument("--config", required=True)
    r.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config field (dotted path); value parsed as JSON when possible")
    r.add_argument("--output", help="directory for records.jsonl and the report")
    s = sub.add_parser("sweep", help="run the cartesian grid of the config's sweep lists")
    s.add_argument("--config", required=True)
    s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    s.add_argument("--output", help="output directory (default: the config's output field)")
    s.add_argument("--threads", type=int, help="worker threads across grid points")
    v = sub.add_parser("verify", help="run a named verification suite")
    v.add_argument("suite")
    v.add_argument("--json", help="also write the JSON report here")
    sp = sub.add_parser("spaces", help="space kinds")
    sp.add_argument("action", choices=["list"])
    ap = sub.add_parser("activations", help="activation ids")
    ap.add_argument("action", choices=["list"])
    return p


def _usage(exc: ConfigError) -> int:
    print(json.dumps(exc.to_dict(), sort_keys=True), file=sys.stderr)
    return EXIT_USAGE


def _cmd_run(args) -> int:
    cfg = cfgmod.load(args.config, args.set)
    record, runtime, report = runner.execute(cfg)
    line = runner.dumps(record)
    print(line)
    out = args.output or cfg["output"]
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "records.jsonl").write_text(line + "\n")
        (out / "timings.json").write_text(json.dumps({"runtime_ms": [runtime]}) + "\n")
        if report is not None and cfg["report"]:
            (out / "report.json").write_text(json.dumps(report, sort_keys=True) + "\n")
    return EXIT_OK if record["status"] == "ok" else EXIT_RUN


def _cmd_sweep(args) -> int:
    cfg = cfgmod.load(args.config, args.set)
    if args.threads is not None and args.threads < 1:
        raise ConfigError("--threads must be >= 1", field="--threads")
    records, summary = runner.sweep(cfg, output=args.output, threads=args.threads)
    for record in records:
        print(runner.dumps(record))
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return EXIT_OK if summary["failures"] == 0 else EXIT_RUN


def _cmd_verify(args) -> int:
    if args.suite not in verify.SUITES:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(verify.SUITES)}", file=sys.stderr)
        return EXIT_USAGE
    report = verify.verify(args.suite)
    print(verify.render(report))
    print(json.dumps(report, sort_keys=True))
    if args.json:
        Path(args.json).write_text(json.dumps(report, sort_keys=True, indent=1) + "\n")
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "spaces":
            for kind in KINDS:
                print(f"{kind:10s} params: {SPACE_PARAMS[kind]}")
            return EXIT_OK
        for tag in act.CATALOG:
            hint = {"poly": "poly:c0,c1,...", "table": "table:path.csv"}.get(tag, tag)
            print(f"{tag:8s} {hint}{'' if tag in act.SMOOTH_TAGS else '  (non-smooth)'}")
        return EXIT_OK
    except ConfigError as exc:
        return _usage(exc)


if __name__ == "__main__":
    sys.exit(main())
