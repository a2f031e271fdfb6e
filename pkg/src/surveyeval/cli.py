"""Thin-client CLI over the evaluation service.

Subcommands mirror the pipeline stages: ingest, decompose, embed,
evaluate, arena, report, criteria, plus verify and serve. By default the
service runs in-process; point --server at a running instance to drive
it remotely.

Exit codes: 0 success, 2 validation error, 3 provider error,
4 verification mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import PipelineConfig, load_config
from .errors import MalformedConfig, SurveyEvalError
from .service.client import ServiceClient

EXIT_FOR_KIND = {"validation": 2, "provider": 3, "verify": 4}
_STATUS_KINDS = {400: "validation", 404: "validation", 409: "verify",
                 422: "validation", 502: "provider"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surveyeval",
        description="Similarity-weighted evaluation of machine-generated surveys.",
    )
    parser.add_argument("--config", help="path to a key=value config file")
    parser.add_argument("--server", help="base URL of a running service "
                                         "(default: run in-process)")
    parser.add_argument("--work-dir", help="override the config work_dir")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--offline", action="store_true",
                        help="cache-only: fail instead of calling providers")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a manifest and its documents")
    p.add_argument("--manifest", required=True)
    p.add_argument("--mine-topics", action="store_true",
                   help="fill empty topics from titles via the judge")

    p = sub.add_parser("decompose", help="write per-survey decomposition files")
    p.add_argument("--manifest", required=True)

    p = sub.add_parser("embed", help="embed all units and persist the index")
    p.add_argument("--manifest", required=True)

    p = sub.add_parser("evaluate", help="score all surveys and write the report")
    p.add_argument("--manifest", required=True)
    p.add_argument("--verify", action="store_true",
                   help="recompute all values from verdict logs afterwards")

    p = sub.add_parser("arena", help="pairwise win rates against paired humans")
    p.add_argument("--manifest", required=True)
    p.add_argument("--dimension", action="append", dest="dimensions",
                   choices=["outline", "content", "reference"])

    p = sub.add_parser("verify", help="audit an existing report")

    p = sub.add_parser("report", help="render a stored report")
    p.add_argument("--report-path", help="default: <work_dir>/report.json")
    p.add_argument("--format", choices=["json", "markdown"], default="markdown")
    p.add_argument("--out", help="write rendering to a file instead of stdout")

    p = sub.add_parser("criteria", help="draft grading criteria with the judge")
    p.add_argument("--out", required=True, help="where to write the criteria JSON")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    overrides = {
        "work_dir": args.work_dir,
        "seed": args.seed,
        "offline": True if args.offline else None,
    }
    return load_config(args.config, overrides)


def _client(args: argparse.Namespace, config: PipelineConfig) -> ServiceClient:
    if args.server:
        return ServiceClient.remote(args.server)
    return ServiceClient.in_process(config)


def _fail(kind: str, message: str) -> int:
    print(f"error ({kind}): {message}", file=sys.stderr)
    return EXIT_FOR_KIND.get(kind, 2)


def _call(client: ServiceClient, path: str, body: dict) -> tuple[dict | None, int]:
    status, payload = client.post(path, body)
    if status == 200:
        return payload, 0
    kind = payload.get("kind") or _STATUS_KINDS.get(status, "validation")
    message = payload.get("message") or json.dumps(payload)
    return None, _fail(kind, message)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _build_config(args)
    except MalformedConfig as exc:
        return _fail("validation", str(exc))

    if args.command == "serve":
        import uvicorn

        from .service.app import create_app

        uvicorn.run(create_app(config), host=args.host, port=args.port)
        return 0

    try:
        client = _client(args, config)
    except SurveyEvalError as exc:
        return _fail(exc.kind, str(exc))

    if args.command == "ingest":
        payload, code = _call(client, "/ingest", {
            "manifest_path": args.manifest, "mine_topics": args.mine_topics,
        })
        if payload is None:
            return code
        print(f"corpus {payload['corpus_id']}: {payload['entries']} surveys, "
              f"{payload['pair_count']} pairs")
        for system, count in payload["pairs_per_system"].items():
            print(f"  {system}: {count} pairs")
        for warning in payload["warnings"]:
            print(f"  warning: {warning}")
        return 0

    if args.command == "decompose":
        payload, code = _call(client, "/decompose", {"manifest_path": args.manifest})
        if payload is None:
            return code
        print(f"decomposed {payload['surveys']} surveys into {payload['out_dir']}")
        return 0

    if args.command == "embed":
        payload, code = _call(client, "/embed", {"manifest_path": args.manifest})
        if payload is None:
            return code
        print(f"indexed {payload['unit_count']} units (dimension "
              f"{payload['dimension']}) at {payload['index_path']}")
        print(f"index digest: {payload['index_digest']}")
        return 0

    if args.command == "evaluate":
        payload, code = _call(client, "/evaluate", {
            "manifest_path": args.manifest, "verify": args.verify,
        })
        if payload is None:
            return code
        print(f"report written to {payload['report_path']}")
        if payload.get("verify") is not None:
            return _print_verify(payload["verify"])
        return 0

    if args.command == "arena":
        payload, code = _call(client, "/arena", {
            "manifest_path": args.manifest, "dimensions": args.dimensions,
        })
        if payload is None:
            return code
        print(payload["markdown"], end="")
        print(f"arena results written to {payload['arena_path']}")
        return 0

    if args.command == "verify":
        payload, code = _call(client, "/verify", {})
        if payload is None:
            return code
        return _print_verify(payload)

    if args.command == "report":
        payload, code = _call(client, "/report", {
            "report_path": args.report_path, "format": args.format,
        })
        if payload is None:
            return code
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(payload["rendered"])
            print(f"wrote {args.out}")
        else:
            print(payload["rendered"], end="")
        return 0

    if args.command == "criteria":
        payload, code = _call(client, "/criteria", {"out_path": args.out})
        if payload is None:
            return code
        print(f"criteria written to {payload['criteria_path']} "
              f"({', '.join(payload['kinds'])})")
        return 0

    raise AssertionError(f"unhandled command {args.command!r}")


def _print_verify(result: dict) -> int:
    if result["mismatches"]:
        print(f"verification FAILED: {len(result['mismatches'])} mismatches "
              f"over {result['checked']} checks", file=sys.stderr)
        for mismatch in result["mismatches"]:
            print(f"  {mismatch}", file=sys.stderr)
        return 4
    print(f"verification ok: {result['checked']} checks, zero mismatches")
    return 0


if __name__ == "__main__":
    sys.exit(main())
