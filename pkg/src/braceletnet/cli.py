"""Command line front end.

Three subcommands drive a simulated gateway built from a config file
(the packaged default when --config is omitted):

  scan      SYN-probe a port range and print the scan report
  brute     run a credential sweep from wordlists and print its report
  scenario  replay a script of mixed attack and telemetry steps

Reports go to stdout as pipe-delimited lines (or JSON with --json).
--log FILE writes the gateway event log; --figures DIR renders PNG
charts beside the text output without changing a byte of it.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .attacks import (
    AttackError,
    BruteSpec,
    PortState,
    ScanSpec,
    ScenarioError,
    run_brute_force,
    run_port_scan,
    run_scenario_file,
)
from .gateway import ConfigError, Gateway, default_config_path, from_config_file
from .net import NetParseError
from .scandet import SpeedClass


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None,
                        help="gateway config file (default: packaged default.conf)")
    parser.add_argument("--log", type=Path, default=None, metavar="FILE",
                        help="write the gateway event log to FILE")
    parser.add_argument("--figures", type=Path, default=None, metavar="DIR",
                        help="render PNG charts into DIR")
    parser.add_argument("--json", action="store_true",
                        help="print a JSON report instead of delimited lines")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="braceletnet",
        description="Simulated secure telemetry gateway: scans, sweeps, scenarios.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser("scan", help="SYN-probe a port range")
    scan.add_argument("--target", default="192.168.25.2")
    scan.add_argument("--ports", default="1-1000", metavar="LO-HI")
    scan.add_argument("--speed", default="T4", choices=[s.value for s in SpeedClass])
    scan.add_argument("--detect-services", action="store_true",
                      help="report service names and banners on open ports")
    scan.add_argument("--source", default=None, help="attacker source address")
    _add_common(scan)

    brute = sub.add_parser("brute", help="run a credential sweep")
    brute.add_argument("--target", default="192.168.25.2")
    brute.add_argument("--port", type=int, default=22)
    brute.add_argument("--users", type=Path, required=True, metavar="FILE")
    brute.add_argument("--passwords", type=Path, required=True, metavar="FILE")
    brute.add_argument("--tasks", type=int, default=1)
    brute.add_argument("--stop-first", action="store_true",
                       help="stop at the first valid credential")
    brute.add_argument("--verbose", action="store_true",
                       help="report every attempt, not just the summary")
    brute.add_argument("--source", default=None, help="attacker source address")
    _add_common(brute)

    scenario = sub.add_parser("scenario", help="replay a scenario script")
    scenario.add_argument("script", type=Path)
    _add_common(scenario)

    return parser


def _build_gateway(config: Path | None) -> Gateway:
    return from_config_file(config if config is not None else default_config_path())


def _read_wordlist(path: Path) -> tuple[str, ...]:
    words = tuple(w for w in path.read_text().splitlines() if w)
    if not words:
        raise AttackError(f"wordlist is empty: {path}")
    return words


def _parse_port_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("-")
    if sep and lo.isdigit() and hi.isdigit():
        return int(lo), int(hi)
    if not sep and text.isdigit():
        return int(text), int(text)
    raise AttackError(f"ports must look like LO-HI, got {text!r}")


def _finish(args: argparse.Namespace, gateway: Gateway, text: str,
            json_payload: dict, *, scan=None, brute=None) -> int:
    if args.json:
        print(json.dumps(json_payload, indent=2, sort_keys=True))
    else:
        sys.stdout.write(text)
    if args.log is not None:
        args.log.write_text(gateway.log_text())
    if args.figures is not None:
        from .plots import render_report_figures

        render_report_figures(args.figures, scan=scan, brute=brute, gateway=gateway)
    return 0


def _cmd_scan(args: argparse.Namespace) -> int:
    gateway = _build_gateway(args.config)
    lo, hi = _parse_port_range(args.ports)
    kwargs = {} if args.source is None else {"source": args.source}
    report = run_port_scan(gateway, ScanSpec(
        target=args.target, port_lo=lo, port_hi=hi,
        speed=SpeedClass(args.speed), detect_services=args.detect_services, **kwargs))
    payload = {
        "target": report.spec.target,
        "range": [lo, hi],
        "speed": report.spec.speed.value,
        "source": report.spec.source,
        "open": [[port, *report.banners[port]] for port in sorted(report.banners)
                 if report.states[port] is PortState.OPEN],
        "closed": sorted(p for p, s in report.states.items() if s is PortState.CLOSED),
        "filtered": sorted(p for p, s in report.states.items() if s is PortState.FILTERED),
    }
    return _finish(args, gateway, report.to_text(), payload, scan=report)


def _cmd_brute(args: argparse.Namespace) -> int:
    gateway = _build_gateway(args.config)
    kwargs = {} if args.source is None else {"source": args.source}
    report = run_brute_force(gateway, BruteSpec(
        users=_read_wordlist(args.users),
        passwords=_read_wordlist(args.passwords),
        target=args.target, port=args.port, tasks=args.tasks,
        stop_first=args.stop_first, verbose=args.verbose, **kwargs))
    payload = {
        "target": report.spec.target,
        "port": report.spec.port,
        "found": [list(hit) for hit in report.found],
        "banned_at": report.banned_at,
        "summary": {
            "attempts": report.attempts,
            "delivered": report.delivered,
            "blocked": report.blocked,
            "refused": report.refused,
            "found": len(report.found),
        },
    }
    return _finish(args, gateway, report.to_text(), payload, brute=report)


def _cmd_scenario(args: argparse.Namespace) -> int:
    gateway = _build_gateway(args.config)
    outcome = run_scenario_file(args.script, gateway=gateway)
    payload = {"report_lines": outcome.report.splitlines()}
    return _finish(args, gateway, outcome.report, payload)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "scan":
            return _cmd_scan(args)
        if args.command == "brute":
            return _cmd_brute(args)
        return _cmd_scenario(args)
    except (AttackError, ScenarioError, ConfigError, NetParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
