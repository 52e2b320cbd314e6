"""Command-line client for the analysis service.

The CLI parses arguments into service requests and renders the responses;
all computation happens behind the HTTP interface.  By default requests run
against an in-process instance of the service (no server needed); --server
points the same client at a remote deployment.

Exit codes are stable: 0 schedulable/ok, 1 unschedulable or no feasible
interface row, 2 analysis inconclusive (no fixpoint or a cross-validation
mismatch), 64 usage error, 65 model error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional

import httpx

EXIT_OK = 0
EXIT_UNSCHEDULABLE = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64
EXIT_MODEL = 65


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _parse_pairs(text: Optional[List[str]]) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for chunk in text or []:
        for pair in chunk.split(","):
            pair = pair.strip()
            if not pair:
                continue
            if "=" not in pair:
                raise CliError(EXIT_USAGE, f"expected name=value, got {pair!r}")
            name, value = pair.split("=", 1)
            out[name.strip()] = value.strip()
    return out


def _parse_ranges(text: Optional[List[str]]) -> Dict[str, List[str]]:
    out: Dict[str, List[str]] = {}
    for name, value in _parse_pairs(text).items():
        if ".." not in value:
            raise CliError(EXIT_USAGE, f"expected {name}=lo..hi, got {value!r}")
        lo, hi = value.split("..", 1)
        out[name] = [lo.strip(), hi.strip()]
    return out


def _parse_step(text: Optional[str]):
    if text is None:
        return None
    if "=" in text:
        return {k: v for k, v in _parse_pairs([text]).items()}
    return text.strip()


def _load_model(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(EXIT_MODEL, f"cannot read model file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_MODEL, f"model file is not valid JSON: {exc}") from exc


def _client(server: Optional[str]) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server.rstrip("/"), timeout=None)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service.app import app

    return TestClient(app)


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code == 200:
        return resp.json()
    try:
        body = resp.json()
    except ValueError:
        body = {}
    message = body.get("message") or body.get("detail") or resp.text
    if resp.status_code == 400:
        raise CliError(EXIT_USAGE, str(message))
    if resp.status_code == 422:
        raise CliError(EXIT_MODEL, str(message))
    raise CliError(EXIT_MODEL, f"service error {resp.status_code}: {message}")


def _dump_json(data: object) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _write(path: Optional[str], content: str) -> None:
    if path:
        Path(path).write_text(content, encoding="utf-8")


def _emit(args, human: str, payload: object) -> None:
    if args.format == "json":
        sys.stdout.write(_dump_json(payload))
    else:
        sys.stdout.write(human)
    if getattr(args, "out", None):
        _write(args.out, _dump_json(payload))


# -- commands -------------------------------------------------------------


def cmd_check(args, client) -> int:
    payload = {
        "model": _load_model(args.model),
        "at": _parse_pairs(args.at),
    }
    if args.depth is not None:
        payload["depth"] = args.depth
    data = _post(client, "/check", payload)
    lines = [f"verdict: {data['verdict']}"]
    if data.get("busy_period_end") is not None:
        lines.append(f"busy period end: {data['busy_period_end']}")
    lines.append(f"utilization: {data['utilization']}")
    for task, resp in sorted(data["worst_response"].items()):
        lines.append(f"worst response {task}: {resp if resp is not None else '-'}")
    lines.append(f"symbolic verdict: {data['symbolic_verdict']}")
    lines.append(f"consistency: {data['consistency']}")
    if data["consistency"] != "ok":
        lines.append(f"  detail: {data['consistency_detail']}")
    _emit(args, "\n".join(lines) + "\n", data)
    if data["consistency"] != "ok":
        return EXIT_INCONCLUSIVE
    return EXIT_OK if data["verdict"] == "schedulable" else EXIT_UNSCHEDULABLE


def cmd_simulate(args, client) -> int:
    payload = {
        "model": _load_model(args.model),
        "at": _parse_pairs(args.at),
        "trace": bool(args.trace),
        "honor_offsets": bool(args.offsets),
    }
    if args.horizon is not None:
        payload["horizon"] = args.horizon
    if args.demand_scale is not None:
        payload["demand_scale"] = args.demand_scale
    data = _post(client, "/simulate", payload)
    result = data["result"]
    if args.trace and data.get("trace_tsv") is not None:
        _write(args.trace, data["trace_tsv"])
    lines = [
        f"schedulable: {result['schedulable']}",
        f"busy period end: {result['busy_period_end']}",
        f"events: {len(result['events'])}",
    ]
    for m in result["misses"]:
        lines.append(f"miss: task {m['task']} at {m['time']}")
    _emit(args, "\n".join(lines) + "\n", result)
    return EXIT_OK if result["schedulable"] else EXIT_UNSCHEDULABLE


def cmd_analyze(args, client) -> int:
    payload = {
        "model": _load_model(args.model),
        "at": _parse_pairs(args.at),
    }
    if args.depth is not None:
        payload["depth"] = args.depth
    data = _post(client, "/analyze", payload)
    lines = [
        data["constraint"],
        f"fixpoint: {data['reached_fixpoint']}",
        f"explored states: {data['explored_states']}",
        f"restarts: {data['restarts']}",
    ]
    _emit(args, "\n".join(lines) + "\n", data)
    return EXIT_OK if data["reached_fixpoint"] else EXIT_INCONCLUSIVE


def cmd_cartography(args, client) -> int:
    payload = {
        "model": _load_model(args.model),
        "jobs": args.jobs,
        "discrete": _parse_pairs(args.at),
    }
    box = _parse_ranges(args.box)
    if box:
        payload["box"] = box
    step = _parse_step(args.step)
    if step is not None:
        payload["step"] = step
    if args.depth is not None:
        payload["depth"] = args.depth
    data = _post(client, "/cartography", payload)
    if args.out:
        _write(args.out, _dump_json({"tiles": data["tiles"],
                                     "uncovered_points": data["uncovered_points"]}))
        _write(str(Path(args.out).with_suffix(".grid.csv")), data["grid_csv"])
    human = (
        f"tiles: {len(data['tiles'])}\n"
        f"uncovered points: {len(data['uncovered_points'])}\n"
        f"schedulable grid points: {data['schedulable_points']}"
        f"/{data['total_points']}\n"
    )
    if args.format == "tsv":
        sys.stdout.write(data["grid_csv"])
    else:
        _emit_no_out(args, human, data)
    return EXIT_OK


def cmd_interface(args, client) -> int:
    payload = {
        "model": _load_model(args.model),
        "jobs": args.jobs,
        "integer_endpoints": not args.rational,
    }
    discrete = _parse_ranges(args.discrete)
    if discrete:
        payload["discrete"] = discrete
    box = _parse_ranges(args.box)
    if box:
        payload["box"] = box
    step = _parse_step(args.step)
    if step is not None:
        payload["step"] = step
    if args.depth is not None:
        payload["depth"] = args.depth
    if args.name:
        payload["component_name"] = args.name
    data = _post(client, "/interface", payload)
    if args.out:
        _write(args.out, _dump_json(data["doc"]))
    if args.format == "json":
        sys.stdout.write(_dump_json(data["doc"]))
    else:
        sys.stdout.write(data["table"])
    return EXIT_OK if data["feasible_rows"] > 0 else EXIT_UNSCHEDULABLE


def _emit_no_out(args, human: str, payload: object) -> None:
    if args.format == "json":
        sys.stdout.write(_dump_json(payload))
    else:
        sys.stdout.write(human)


# -- argument wiring --------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rtpta",
        description="Parametric schedulability analysis of real-time components",
    )
    parser.add_argument(
        "--server",
        help="URL of a running analysis service (default: run in-process)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_at=True):
        p.add_argument("model", help="component model JSON file")
        if with_at:
            p.add_argument(
                "--at",
                action="append",
                metavar="name=value[,...]",
                help="parameter values (defaults: declared references)",
            )
        p.add_argument("--depth", type=int, help="exploration depth bound")
        p.add_argument(
            "--format", choices=["json", "tsv", "table"], default="table"
        )
        p.add_argument("--out", help="write the JSON result to this path")

    p = sub.add_parser("check", help="oracle + symbolic verdict at one point")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="exact busy-period simulation")
    common(p)
    p.add_argument("--horizon", help="time bound (required at utilization >= 1)")
    p.add_argument("--trace", help="write the event log TSV to this path")
    p.add_argument(
        "--offsets", action="store_true", help="honor offsets (windowed run)"
    )
    p.add_argument(
        "--demand-scale", dest="demand_scale",
        help="scale job demand below the WCET (exploratory)",
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="inverse method at a reference point")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("cartography", help="tile a parameter box")
    common(p)
    p.add_argument("--box", action="append", metavar="name=lo..hi[,...]")
    p.add_argument("--step", help="grid step (single value or name=q,...)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_cartography)

    p = sub.add_parser("interface", help="synthesize the timed interface")
    common(p, with_at=False)
    p.add_argument("--discrete", action="append", metavar="name=lo..hi[,...]")
    p.add_argument("--box", action="append", metavar="name=lo..hi[,...]")
    p.add_argument("--step", help="grid step (single value or name=q,...)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument(
        "--rational",
        action="store_true",
        help="skip the integers-only adjacency merge",
    )
    p.add_argument("--name", help="component name for the document")
    p.set_defaults(func=cmd_interface)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        with _client(args.server) as client:
            return args.func(args, client)
    except CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.code
    except httpx.HTTPError as exc:
        sys.stderr.write(f"error: cannot reach the analysis service: {exc}\n")
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
