"""Command-line client for the influence-maximization service.

The CLI never computes anything itself: it reads local input files, posts
request models to the HTTP API and writes the returned CSV text verbatim.
By default the service runs in-process (no server needed); pass --server
to talk to a remote instance started with ``causalim serve``.

Exit codes: 0 success, 1 usage or configuration error, 2 verification
failure, 3 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import asyncio
import sys

import httpx

from .experiments import parse_config_text

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY_FAILED = 2
EXIT_BUDGET = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


class _Client:
    """POSTs to a remote server, or into the in-process ASGI app."""

    def __init__(self, server: str | None):
        self.server = server
        if server is None:
            from .service import app
            self._transport = httpx.ASGITransport(app=app)

    def post(self, path: str, payload: dict) -> httpx.Response:
        if self.server is not None:
            with httpx.Client(base_url=self.server, timeout=None) as client:
                return client.post(path, json=payload)

        async def _go():
            async with httpx.AsyncClient(transport=self._transport,
                                         base_url="http://causalim",
                                         timeout=None) as client:
                return await client.post(path, json=payload)

        return asyncio.run(_go())


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write(path: str, text: str) -> None:
    with open(path, "wb") as fh:
        fh.write(text.encode("utf-8"))


def _fail(message: str, code: int = EXIT_USAGE) -> int:
    print(f"causalim: error: {message}", file=sys.stderr)
    return code


def _call(client: _Client, path: str, payload: dict):
    """Run one request; returns (exit_code, body_or_None)."""
    try:
        resp = client.post(path, payload)
    except httpx.HTTPError as exc:
        return _fail(f"cannot reach service: {exc}"), None
    if resp.status_code == 200:
        return EXIT_OK, resp.json()
    try:
        detail = resp.json().get("detail")
    except ValueError:
        detail = resp.text
    if isinstance(detail, dict):
        code = detail.get("code", "")
        message = detail.get("message", str(detail))
        if code == "budget-exceeded":
            return _fail(message, EXIT_BUDGET), None
        return _fail(message), None
    return _fail(str(detail)), None


def _merge(args: argparse.Namespace, config: dict, fields: list[str]) -> dict:
    """Request payload: CLI flag beats config file beats server default."""
    payload = {}
    for name in fields:
        value = getattr(args, name, None)
        if value is not None:
            payload[name] = value
        elif name in config:
            payload[name] = config[name]
    return payload


def _add_select_flags(sub):
    sub.add_argument("--graph", required=True, help="hypergraph file")
    sub.add_argument("--attrs", required=True, help="node attribute CSV")
    sub.add_argument("--ite", help="estimated-effect CSV (otherwise estimated on the fly)")
    sub.add_argument("--method", choices=["cauim-greedy", "cauim-celf",
                                          "celf-count", "random"])
    sub.add_argument("--k", type=int)
    sub.add_argument("--p", type=float)
    sub.add_argument("--model", choices=["gic", "sicp"])
    sub.add_argument("--horizon", type=int)
    sub.add_argument("--select-rounds", type=int, dest="select_rounds")
    sub.add_argument("--eval-rounds", type=int, dest="eval_rounds")
    sub.add_argument("--repetitions", "-R", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--noise-sigma", type=float, dest="noise_sigma")
    sub.add_argument("--l2", type=float)
    sub.add_argument("--stop-on-negative", action=argparse.BooleanOptionalAction,
                     dest="stop_on_negative")
    sub.add_argument("--workers", type=int)


_SELECT_FIELDS = ["method", "k", "p", "model", "horizon", "select_rounds",
                  "eval_rounds", "repetitions", "seed", "noise_sigma", "l2",
                  "stop_on_negative", "workers"]


def build_parser() -> _Parser:
    parser = _Parser(prog="causalim",
                     description="Influence maximization on hypergraphs with "
                                 "causal-effect node weights")
    parser.add_argument("--server", help="remote service URL (default: in-process)")
    parser.add_argument("--config", help="flat key = value configuration file")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="synthesize a graph and node attributes")
    gen.add_argument("--nodes", type=int)
    gen.add_argument("--edges", type=int)
    gen.add_argument("--covariate-dim", type=int, dest="covariate_dim")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--effect-bias", type=float, dest="effect_bias")
    gen.add_argument("--effect-scale", type=float, dest="effect_scale")
    gen.add_argument("--spillover-scale", type=float, dest="spillover_scale")
    gen.add_argument("--noise-scale", type=float, dest="noise_scale")
    gen.add_argument("--out-graph", required=True)
    gen.add_argument("--out-attrs", required=True)

    est = commands.add_parser("estimate", help="recover per-node treatment effects")
    est.add_argument("--graph", required=True)
    est.add_argument("--attrs", required=True)
    est.add_argument("--l2", type=float)
    est.add_argument("--out-ite", required=True)

    sel = commands.add_parser("select", help="run a seed-selection experiment")
    _add_select_flags(sel)
    sel.add_argument("--out-trace", required=True)
    sel.add_argument("--out-results", required=True)
    sel.add_argument("--out-timings")

    sw = commands.add_parser("sweep", help="sweep noise, p or MC iterations")
    _add_select_flags(sw)
    sw.add_argument("--param", choices=["noise", "p", "iter"], required=True)
    sw.add_argument("--grid", help="comma-separated grid values")
    sw.add_argument("--out-sweep", required=True)
    sw.add_argument("--out-timings")

    ver = commands.add_parser("verify", help="run the bound-verification campaign")
    ver.add_argument("--instances", type=int, dest="theorem1_instances")
    ver.add_argument("--t2-instances", type=int, dest="theorem2_instances")
    ver.add_argument("--corollary-instances", type=int, dest="corollary_instances")
    ver.add_argument("--gamma", type=float)
    ver.add_argument("--seed", type=int)
    ver.add_argument("--tau-all-one", action=argparse.BooleanOptionalAction,
                     dest="tau_all_one")
    ver.add_argument("--max-nodes", type=int, dest="max_nodes")
    ver.add_argument("--max-edges", type=int, dest="max_edges")
    ver.add_argument("--cap", type=int)
    ver.add_argument("--workers", type=int)
    ver.add_argument("--out-reports", required=True)

    srv = commands.add_parser("serve", help="start the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config: dict = {}
    if args.config:
        try:
            config = parse_config_text(_read(args.config))
        except (OSError, ValueError) as exc:
            return _fail(f"config: {exc}")

    if args.command == "serve":
        import uvicorn
        uvicorn.run("causalim.service:app", host=args.host, port=args.port)
        return EXIT_OK

    client = _Client(args.server or config.get("server"))
    try:
        if args.command == "gen":
            payload = _merge(args, config, ["nodes", "edges", "covariate_dim",
                                            "seed", "effect_bias", "effect_scale",
                                            "spillover_scale", "noise_scale"])
            code, body = _call(client, "/api/gen", payload)
            if code == EXIT_OK:
                _write(args.out_graph, body["graph_text"])
                _write(args.out_attrs, body["attrs_csv"])
                print(f"wrote {args.out_graph} ({body['node_count']} nodes, "
                      f"{body['edge_count']} hyperedges) and {args.out_attrs}")
            return code

        if args.command == "estimate":
            payload = _merge(args, config, ["l2"])
            payload["graph_text"] = _read(args.graph)
            payload["attrs_csv"] = _read(args.attrs)
            code, body = _call(client, "/api/estimate", payload)
            if code == EXIT_OK:
                _write(args.out_ite, body["ite_csv"])
                note = ""
                if body["correlation_with_true"] is not None:
                    note = f" (corr with truth {body['correlation_with_true']:.4f})"
                if body["fallback_used"]:
                    note += " [pooled fallback]"
                print(f"wrote {args.out_ite}{note}")
            return code

        if args.command in ("select", "sweep"):
            payload = _merge(args, config, _SELECT_FIELDS)
            payload["graph_text"] = _read(args.graph)
            payload["attrs_csv"] = _read(args.attrs)
            if args.ite:
                payload["ite_csv"] = _read(args.ite)
            if args.command == "select":
                code, body = _call(client, "/api/select", payload)
                if code == EXIT_OK:
                    _write(args.out_trace, body["trace_csv"])
                    _write(args.out_results, body["results_csv"])
                    if args.out_timings:
                        _write(args.out_timings, body["timings_csv"])
                    print(f"wrote {args.out_trace} and {args.out_results}")
                return code
            payload["param"] = args.param
            grid = args.grid if args.grid is not None else config.get("grid")
            if grid:
                try:
                    payload["grid"] = [float(v) for v in str(grid).split(",") if v.strip()]
                except ValueError:
                    return _fail(f"bad grid {grid!r}")
            code, body = _call(client, "/api/sweep", payload)
            if code == EXIT_OK:
                _write(args.out_sweep, body["sweep_csv"])
                if args.out_timings:
                    _write(args.out_timings, body["timings_csv"])
                print(f"wrote {args.out_sweep}")
            return code

        if args.command == "verify":
            payload = _merge(args, config, [
                "theorem1_instances", "theorem2_instances", "corollary_instances",
                "gamma", "seed", "tau_all_one", "max_nodes", "max_edges",
                "cap", "workers"])
            code, body = _call(client, "/api/verify", payload)
            if code != EXIT_OK:
                return code
            _write(args.out_reports, body["reports_csv"])
            print(body["summary"], end="")
            print(f"wrote {args.out_reports}")
            return EXIT_OK if body["all_hold"] else EXIT_VERIFY_FAILED

    except OSError as exc:
        return _fail(str(exc))
    return _fail(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
