"""Command line entry point.

Subcommands:

    run        simulate a scenario file, write trace CSV and summary JSON
    fuzz-link  hammer the frame decoder with seeded random bytes
    table      print the built-in lane-count speed-limit table
    validate   parse and check a scenario file without running it

Exit codes: 0 success, 2 validation or parse error, 3 I/O error,
1 internal invariant violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import random
import sys
import traceback

from .errors import ScenarioParseError, ValidationError
from .link import decode_stream
from .scenario_io import load_scenario, write_summary, write_trace
from .sim import run_scenario
from .supervisor import SpeedLimitTable

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2
EXIT_IO = 3

_FUZZ_CHUNK = 4096


def _cmd_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    trace, summary = run_scenario(scenario)
    write_trace(trace, args.out)
    print(f"wrote {args.out} ({len(trace)} records)")
    if args.summary:
        write_summary(summary, args.summary)
        print(f"wrote {args.summary}")
    print(
        f"{scenario.name}: final_position={summary.final_position:.1f} m, "
        f"max_overshoot={summary.max_overshoot:.2f} m/s, "
        f"activations={summary.brake_activation_count}"
    )
    return EXIT_OK


def _cmd_fuzz_link(args: argparse.Namespace) -> int:
    if args.bytes < 0:
        raise ValidationError("bytes", "must be non-negative")
    rng = random.Random(args.seed)
    remaining = args.bytes
    acc = b""
    messages = 0
    malformed = 0
    consumed = 0
    while remaining > 0:
        chunk = rng.randbytes(min(_FUZZ_CHUNK, remaining))
        remaining -= len(chunk)
        fed = len(acc) + len(chunk)
        msgs, acc, errors = decode_stream(acc, chunk)
        if fed - len(acc) < 0:
            raise RuntimeError("decoder conservation violated: retained more than fed")
        consumed += fed - len(acc)
        messages += len(msgs)
        malformed += errors
    if consumed + len(acc) != args.bytes:
        raise RuntimeError("decoder conservation violated over the whole stream")
    print(
        f"fed {args.bytes} random bytes (seed {args.seed}): "
        f"{messages} messages, {malformed} malformed frames, {len(acc)} bytes retained"
    )
    return EXIT_OK


def _cmd_table(args: argparse.Namespace) -> int:
    table = SpeedLimitTable()
    print("lanes  limit_m_per_s  limit_km_per_h")
    for lanes, limit in table.entries:
        print(f"{lanes:>5}  {limit:>13.4f}  {limit * 3.6:>14.1f}")
    print(f"fallback: {table.fallback_limit:.4f} m/s (used before the first lane observation)")
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    print(
        f"OK: {scenario.name} ({scenario.duration:g} s, "
        f"{len(scenario.road_segments)} segment(s), seed {scenario.seed})"
    )
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scss",
        description="Simulate an automatic overspeed brake intervention system.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate a scenario and write its outputs")
    p_run.add_argument("--scenario", required=True, help="scenario file to simulate")
    p_run.add_argument("--out", required=True, help="trace CSV output path")
    p_run.add_argument("--summary", help="summary JSON output path")
    p_run.add_argument("--seed", type=int, help="override the scenario's seed")
    p_run.set_defaults(func=_cmd_run)

    p_fuzz = sub.add_parser("fuzz-link", help="feed seeded random bytes to the frame decoder")
    p_fuzz.add_argument("--bytes", type=int, required=True, help="how many random bytes to feed")
    p_fuzz.add_argument("--seed", type=int, default=0, help="random stream seed")
    p_fuzz.set_defaults(func=_cmd_fuzz_link)

    p_table = sub.add_parser("table", help="print the default speed-limit table")
    p_table.add_argument("--show", action="store_true", help="print the table (default action)")
    p_table.set_defaults(func=_cmd_table)

    p_val = sub.add_parser("validate", help="check a scenario file without running it")
    p_val.add_argument("--scenario", required=True, help="scenario file to check")
    p_val.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ScenarioParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception:  # pragma: no cover - internal bug escape hatch
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
