"""Command-line interface.

    staybroker run <scenario> [--seed N] [--trace PATH] [--horizon T] [--json]
    staybroker check <trace>
    staybroker digest <trace>
    staybroker serve [--topology FILE|NAME] [--host H] [--port P] [--static-dir D]

Exit codes: 0 pass, 1 property failure, 2 error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..errors import ScenarioError, StayBrokerError
from .checker import check_trace_text
from .runner import run_scenario, trace_digest
from .scenario import load_scenario

EXIT_OK, EXIT_PROPERTY, EXIT_ERROR = 0, 1, 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="staybroker",
        description="Agent-based reservation brokering for rural guesthouses",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario deterministically")
    run.add_argument("scenario", help="bundled name, random-<N>, or a file path")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--horizon", type=int, default=None)
    run.add_argument("--trace", type=Path, default=None, help="trace output path")
    run.add_argument("--report", type=Path, default=None, help="report JSON path")
    run.add_argument("--json", action="store_true", help="print the report as JSON")

    check = sub.add_parser("check", help="check a trace against the invariant catalog")
    check.add_argument("trace", type=Path)

    digest = sub.add_parser("digest", help="print the SHA-256 of a trace file")
    digest.add_argument("trace", type=Path)

    serve = sub.add_parser("serve", help="serve the HTTP API over a live system")
    serve.add_argument("--topology", default="figure4",
                       help="topology/scenario file or bundled scenario name")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--static-dir", type=Path, default=None,
                       help="directory with the built web UI")
    serve.add_argument("--data-dir", type=Path, default=None,
                       help="persist store state under this directory")
    return parser


def _print_report(report: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(report, indent=2, sort_keys=True))
        return
    print(f"scenario {report['scenario']} seed {report['seed']} "
          f"quiescent={report['quiescent']}")
    for request in report["requests"]:
        line = (f"  request {request['ref']} user={request['user_id']} "
                f"status={request['status']} proposals={request['proposals']}")
        outcome = request.get("outcome")
        if outcome:
            line += f" outcome={outcome.get('outcome')}"
            if outcome.get("booking_id"):
                line += f" booking={outcome['booking_id']}"
        print(line)
        for i, ranked in enumerate(request["ranked"], start=1):
            print(f"    #{i} {ranked['proposal_id']} price={ranked['total_price']} "
                  f"via {'+'.join(ranked['guesthouses'])}")
    for update in report["updates"]:
        state = "applied" if update["applied"] else f"rejected ({update.get('error')})"
        print(f"  update {update['guesthouse_id']}: {state}")
    for error in report["errors"]:
        print(f"  error {error['ref']}: {error['error']}")
    for prop in report["properties"]:
        mark = "PASS" if prop["passed"] else "FAIL"
        detail = f" -- {prop['detail']}" if prop["detail"] else ""
        print(f"  property {prop['name']}: {mark}{detail}")


def _cmd_run(args) -> int:
    try:
        scenario = load_scenario(args.scenario, seed=args.seed)
    except ScenarioError as exc:
        print("scenario validation failed:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  {problem}", file=sys.stderr)
        return EXIT_ERROR
    result = run_scenario(scenario, seed=args.seed, horizon=args.horizon)
    trace_path = args.trace or Path(f"{scenario.name}.trace.jsonl")
    result.write_trace(trace_path)
    if args.report:
        args.report.write_text(json.dumps(result.report, indent=2, sort_keys=True) + "\n")
    _print_report(result.report, args.json)
    print(f"trace written to {trace_path} "
          f"(digest {trace_digest(result.trace_text())[:16]}...)")
    return EXIT_OK if result.ok else EXIT_PROPERTY


def _cmd_check(args) -> int:
    try:
        text = args.trace.read_text()
    except OSError as exc:
        print(f"cannot read trace: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        results = check_trace_text(text)
    except ValueError as exc:
        print(f"unparseable trace: {exc}", file=sys.stderr)
        return EXIT_ERROR
    ok = True
    for prop in results:
        mark = "PASS" if prop["passed"] else "FAIL"
        detail = f" -- {prop['detail']}" if prop["detail"] else ""
        print(f"property {prop['name']}: {mark}{detail}")
        ok = ok and prop["passed"]
    return EXIT_OK if ok else EXIT_PROPERTY


def _cmd_digest(args) -> int:
    try:
        data = args.trace.read_bytes()
    except OSError as exc:
        print(f"cannot read trace: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(trace_digest(data))
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from ..service.app import create_app, topology_from_source

    try:
        topology = topology_from_source(args.topology)
    except (ScenarioError, StayBrokerError, OSError) as exc:
        print(f"cannot load topology: {exc}", file=sys.stderr)
        return EXIT_ERROR
    app = create_app(topology, static_dir=args.static_dir, data_dir=args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "run": _cmd_run,
        "check": _cmd_check,
        "digest": _cmd_digest,
        "serve": _cmd_serve,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
