"""rucs-sim command line: run scenarios, analyze runs, generate traces."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .analysis import MissingLogs, analyze_run
from .runner import ServiceUnreachable, run_scenario
from .scenario import ScenarioInvalid, load_scenario
from .traces import field_test_traces, write_trace

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_SCENARIO_INVALID = 2
EXIT_SERVICE_UNREACHABLE = 3
EXIT_MISSING_LOGS = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rucs-sim", description="RUCS simulation harness")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="replay a scenario against a running service")
    run.add_argument("--scenario", required=True, help="preset name (field-test) or config path")
    run.add_argument("--url", required=True, help="service base URL")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True, help="run directory")
    run.add_argument(
        "--latency-profile",
        choices=["none", "4g"],
        default="none",
        help="injected network delay model (4g: 100 ms +/- 40 ms)",
    )

    analyze = sub.add_parser("analyze", help="build the report for a finished run")
    analyze.add_argument("--run", required=True, help="run directory")
    analyze.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    gen = sub.add_parser("gen-trace", help="generate GPS trace files")
    gen.add_argument("--preset", choices=["field-test"], default="field-test")
    gen.add_argument("--out", required=True, help="output directory for trace CSVs")
    gen.add_argument("--duration", type=float, default=20.0)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = load_scenario(args.scenario)
            if args.latency_profile == "4g":
                config.with_4g_profile()
            out = run_scenario(config, args.url, seed=args.seed, out_dir=Path(args.out))
            print(f"run complete: {out}")
        elif args.command == "analyze":
            report = analyze_run(Path(args.run), make_figures=not args.no_figures)
            print(f"report written: {report}")
        elif args.command == "gen-trace":
            out_dir = Path(args.out)
            for label, points in field_test_traces(duration_s=args.duration).items():
                path = out_dir / f"{label}.csv"
                write_trace(points, path)
                print(f"wrote {path}")
    except ScenarioInvalid as e:
        print(f"scenario invalid: {e}", file=sys.stderr)
        return EXIT_SCENARIO_INVALID
    except ServiceUnreachable as e:
        print(f"service unreachable: {e}", file=sys.stderr)
        return EXIT_SERVICE_UNREACHABLE
    except MissingLogs as e:
        print(f"missing logs: {e}", file=sys.stderr)
        return EXIT_MISSING_LOGS
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
