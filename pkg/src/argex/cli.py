"""Command-line client for the extraction service.

Every command speaks HTTP to the service app: against --server when given,
otherwise against an in-process instance of the same app. Progress goes to
standard error; results go to standard output. Exit codes: 2 for usage
errors, 1 for data errors, 3 for generator or server transport failures.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import httpx

logger = logging.getLogger("argex.cli")

EXIT_DATA = 1
EXIT_USAGE = 2
EXIT_TRANSPORT = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_DATA):
        super().__init__(message)
        self.code = code


def _make_client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=None)
    from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app(), base_url="http://argex.internal")


def _post(client, path: str, payload: dict) -> dict:
    try:
        response = client.post(path, json=payload)
    except httpx.TransportError as exc:
        raise CliError(f"transport failure talking to the service: {exc}", EXIT_TRANSPORT)
    if response.status_code >= 500:
        raise CliError(f"server error {response.status_code}: {response.text}", EXIT_TRANSPORT)
    if response.status_code >= 400:
        raise CliError(f"request rejected ({response.status_code}): {response.text}", EXIT_DATA)
    return response.json()


def _floats(value: str, n: int, flag: str) -> tuple[float, ...]:
    parts = value.split(",")
    if len(parts) != n:
        raise CliError(f"{flag} expects {n} comma-separated numbers, got {value!r}", EXIT_USAGE)
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise CliError(f"{flag} expects numbers, got {value!r}", EXIT_USAGE) from None


def _seeds(value: str) -> list[int]:
    try:
        return [int(p) for p in value.split(",")]
    except ValueError:
        raise CliError(f"--seeds expects integers, got {value!r}", EXIT_USAGE) from None


def cmd_run(args) -> int:
    config_path = Path(args.config)
    if not config_path.is_file():
        raise CliError(f"config file {args.config!r} does not exist")
    config = json.loads(config_path.read_text())
    if args.condition:
        config["condition"] = args.condition
    if args.seeds:
        config["seeds"] = _seeds(args.seeds)
    if args.workers:
        config["workers"] = args.workers
    if args.bins:
        config["bins"] = args.bins
    if args.grid:
        config["grid"] = list(_floats(args.grid, 3, "--grid"))
    if args.bounds:
        config["bounds"] = list(_floats(args.bounds, 2, "--bounds"))
    if args.generator:
        config["generator"] = args.generator
    if args.out:
        config["out_dir"] = args.out

    logger.info("running condition %s", config.get("condition"))
    with _make_client(args.server) as client:
        result = _post(client, "/runs", {"config": config})
    logger.info("artifact written to %s", result["run_dir"])
    print(json.dumps(result, sort_keys=True, indent=2))
    return 0


def cmd_calibrate(args) -> int:
    if not Path(args.log).is_file():
        raise CliError(f"prediction log {args.log!r} does not exist")
    payload: dict = {"log_path": args.log, "bins": args.bins}
    if args.grid:
        payload["grid"] = list(_floats(args.grid, 3, "--grid"))
    with _make_client(args.server) as client:
        result = _post(client, "/calibration/fit", payload)
    logger.info(
        "fitted temperature %.4g (ECE %.4g -> %.4g)",
        result["temperature"],
        result["ece_before"],
        result["ece_after"],
    )
    text = json.dumps(result, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        logger.info("report written to %s", args.out)
    print(text)
    return 0


def cmd_report(args) -> int:
    payload: dict = {"run_dir": args.run}
    if args.seed is not None:
        payload["seed"] = args.seed
    if args.bins:
        payload["bins"] = args.bins
    with _make_client(args.server) as client:
        result = _post(client, "/reports/calibration", payload)

    out_dir = Path(args.out) if args.out else Path(args.run) / "report"
    out_dir.mkdir(parents=True, exist_ok=True)
    distribution = {
        "bins": result["bins"],
        "before": result["histogram_before"],
        "after": result["histogram_after"],
    }
    reliability = {
        "bins": result["bins"],
        "temperature": result["temperature"],
        "before": result["reliability_before"],
        "after": result["reliability_after"],
    }
    (out_dir / "probability_distribution.json").write_text(
        json.dumps(distribution, sort_keys=True, indent=2) + "\n"
    )
    (out_dir / "reliability_diagram.json").write_text(
        json.dumps(reliability, sort_keys=True, indent=2) + "\n"
    )
    logger.info("report data written to %s", out_dir)
    print(json.dumps({"out_dir": str(out_dir), **distribution}, sort_keys=True, indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    generator = None
    if args.generator:
        from .corpus import parse_corpus
        from .generator import MockGenerator, OracleGenerator
        from .ontology import load_ontology
        from .pipeline import _load_logit_script

        script = _load_logit_script(args.logit_script) if args.logit_script else None
        if args.generator == "mock":
            generator = MockGenerator(seed=args.seed, script=script)
        elif args.generator == "oracle":
            if not (args.ontology and args.corpus):
                raise CliError("--generator oracle needs --ontology and --corpus", EXIT_USAGE)
            ontology = load_ontology(args.ontology)
            documents = {d.doc_id: d for d in parse_corpus(args.corpus, ontology)}
            generator = OracleGenerator(documents=documents, script=script)
        else:
            raise CliError("--generator must be mock or oracle when serving", EXIT_USAGE)
    app = create_app(generator=generator, generator_name=args.generator)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_protocol_check(args) -> int:
    from . import protocol
    from .generator import MockGenerator, RemoteGenerator, validate_response

    if args.generator.startswith("remote:"):
        generator = RemoteGenerator(args.generator.removeprefix("remote:"))
    elif args.generator == "mock":
        generator = MockGenerator(seed=args.seed)
    else:
        raise CliError("--generator must be mock or remote:<address>", EXIT_USAGE)

    failures = 0
    with open(args.requests, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            request = protocol.decode_request(line)
            response = generator.generate(request)
            diagnostics = validate_response(response, request)
            status = "ok" if not diagnostics else "FAIL " + "; ".join(diagnostics)
            print(f"request {lineno}: {status}")
            failures += bool(diagnostics)
    if failures:
        raise CliError(f"{failures} request(s) failed validation")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="argex",
        description="Confidence-scheduled document-level event argument extraction.",
    )
    parser.add_argument("--server", help="service URL; default runs the service in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment condition")
    run.add_argument("--config", required=True, help="JSON run configuration")
    run.add_argument("--condition", help="override the configured condition")
    run.add_argument("--seeds", help="comma-separated seed list override")
    run.add_argument("--workers", type=int, help="document-level parallelism")
    run.add_argument("--bins", type=int, help="reliability bin count override")
    run.add_argument("--grid", help="temperature grid START,STOP,STEP")
    run.add_argument("--bounds", help="constraint bounds LOWER,UPPER (skips selection)")
    run.add_argument("--generator", help="mock | oracle | remote:<address>")
    run.add_argument("--out", help="artifact directory override")
    run.set_defaults(func=cmd_run)

    calibrate = sub.add_parser("calibrate", help="fit a temperature on a prediction log")
    calibrate.add_argument("--log", required=True, help="JSONL log of logits + correctness")
    calibrate.add_argument("--grid", help="temperature grid START,STOP,STEP")
    calibrate.add_argument("--bins", type=int, default=10)
    calibrate.add_argument("--out", help="write the report JSON here")
    calibrate.set_defaults(func=cmd_calibrate)

    report = sub.add_parser("report", help="emit distribution and reliability data for a run")
    report.add_argument("--run", required=True, help="run artifact directory")
    report.add_argument("--seed", type=int, help="seed directory to report on")
    report.add_argument("--bins", type=int, help="rebin at this bin count")
    report.add_argument("--out", help="output directory (default <run>/report)")
    report.set_defaults(func=cmd_report)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8400)
    serve.add_argument("--generator", help="host a generator at /v1/generate (mock | oracle)")
    serve.add_argument("--seed", type=int, default=0)
    serve.add_argument("--ontology")
    serve.add_argument("--corpus")
    serve.add_argument("--logit-script", dest="logit_script")
    serve.set_defaults(func=cmd_serve)

    check = sub.add_parser("protocol-check", help="validate generator responses to a request corpus")
    check.add_argument("--requests", required=True, help="JSONL file of wire-format requests")
    check.add_argument("--generator", default="mock", help="mock | remote:<address>")
    check.add_argument("--seed", type=int, default=0)
    check.set_defaults(func=cmd_protocol_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except httpx.TransportError as exc:
        print(f"error: transport failure: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT


if __name__ == "__main__":
    sys.exit(main())
