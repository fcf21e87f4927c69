"""Command-line interface.

Usage::

    ternary-stab <verify-ring|defect|extract|report|bound>
        [--config file.json] [--out path] [--seed N]
        [--d N --l N --rows N --cols N] ...

Flags override config-file values. Exit codes: 0 all checks passed,
1 a mathematical check failed, 2 invalid input, 3 numeric or resource
failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from datetime import datetime, timezone

from .errors import TernaryStabError
from .reporting import (
    SCHEMA_BY_COMMAND,
    ConfigError,
    RunConfig,
    build_bound_table,
    build_defect_rows,
    build_extract_report,
    build_ring_report,
    build_stability_report,
    load_config_file,
    validate_payload,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_NUMERIC = 3


def parse_control_spec(spec: str) -> dict:
    """Parse ``constant:DELTA``, ``pnorm:EPS,P`` or a JSON descriptor."""
    spec = spec.strip()
    if spec.startswith("{"):
        try:
            return json.loads(spec)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad control JSON: {exc}") from None
    kind, _, rest = spec.partition(":")
    try:
        if kind == "constant":
            return {"kind": "constant", "delta": float(rest)}
        if kind == "pnorm":
            eps_s, p_s = rest.split(",")
            return {"kind": "pnorm", "eps": float(eps_s), "p": float(p_s)}
    except ValueError:
        pass
    raise ConfigError(
        f"cannot parse control spec {spec!r}; use constant:DELTA, "
        f"pnorm:EPS,P or a JSON descriptor"
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ternary-stab",
        description="Defect evaluation, direct-method extraction and bound "
                    "certification on matrix C*-ternary rings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--seed", type=int, help="RNG seed (required here or in the config)")
        p.add_argument("--d", type=int, help="equation parameter d")
        p.add_argument("--l", type=int, help="equation parameter l")
        p.add_argument("--rows", type=int, help="ring shape rows")
        p.add_argument("--cols", type=int, help="ring shape cols")
        p.add_argument("--samples", type=int, help="sample count for sweeps")
        p.add_argument("--n-max", dest="n_max", type=int, help="iteration depth cap")

    p = sub.add_parser("verify-ring", help="randomized ternary-ring axiom sweep")
    common(p)

    p = sub.add_parser("defect", help="sampled defects vs the advertised control (CSV)")
    common(p)
    p.add_argument("--scenario", help="catalogue scenario kind")
    p.add_argument("--control", help="override control: constant:DELTA | pnorm:EPS,P | JSON")

    p = sub.add_parser("extract", help="extract the limiting map with traces (JSON)")
    common(p)
    p.add_argument("--scenario", help="catalogue scenario kind")

    p = sub.add_parser("report", help="full pipeline over catalogue scenarios (JSON)")
    common(p)
    p.add_argument("--scenarios", help="comma-separated scenario kinds")
    p.add_argument("--bound-only", action="store_true", default=None,
                   help="emit closed-form bound values only")

    p = sub.add_parser("bound", help="closed-form / series bound table")
    common(p)
    p.add_argument("--control", help="control: constant:DELTA | pnorm:EPS,P | JSON")
    p.add_argument("--norms", help="comma-separated norm grid")
    return parser


def _config_from_args(args) -> RunConfig:
    file_dict = load_config_file(args.config) if args.config else {}
    overrides = {}
    for key in ("seed", "d", "l", "rows", "cols", "samples", "n_max"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    if getattr(args, "scenario", None):
        overrides["scenario"] = args.scenario
    if getattr(args, "scenarios", None):
        overrides["scenarios"] = [s.strip() for s in args.scenarios.split(",") if s.strip()]
    if getattr(args, "control", None):
        overrides["control"] = parse_control_spec(args.control)
    if getattr(args, "norms", None):
        try:
            overrides["norm_grid"] = [float(v) for v in args.norms.split(",")]
        except ValueError:
            raise ConfigError(f"bad --norms value {args.norms!r}") from None
    if getattr(args, "bound_only", None):
        overrides["bound_only"] = True
    return RunConfig.from_sources(file_dict, overrides)


def _emit_text(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_payload(payload: dict, command: str, out: str | None,
                  started: float) -> None:
    schema = SCHEMA_BY_COMMAND[command]
    payload["timing"] = {
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "wall_clock_seconds": time.monotonic() - started,
    }
    validate_payload(schema, payload)
    _emit_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", out)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    started = time.monotonic()
    try:
        cfg = _config_from_args(args)
        if args.command == "verify-ring":
            payload, code = build_ring_report(cfg)
            _emit_payload(payload, args.command, args.out, started)
            return code
        if args.command == "defect":
            lines, code = build_defect_rows(cfg)
            _emit_text("\n".join(lines) + "\n", args.out)
            return code
        if args.command == "extract":
            payload, code = build_extract_report(cfg)
            _emit_payload(payload, args.command, args.out, started)
            return code
        if args.command == "report":
            payload, code = build_stability_report(cfg)
            _emit_payload(payload, args.command, args.out, started)
            return code
        if args.command == "bound":
            lines, code = build_bound_table(cfg)
            _emit_text("\n".join(lines) + "\n", args.out)
            return code
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except TernaryStabError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
