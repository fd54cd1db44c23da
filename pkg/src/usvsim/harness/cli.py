"""Command-line entry point.

    usvsim run <scenario> [--seed N] [--trace out.jsonl] [--csv out.csv]
    usvsim list-scenarios
    usvsim serve <scenario> [--tcp PORT] [--ws PORT] [--speed X]
    usvsim depth-eval --frames DIR --refs DIR --lambda L --alpha A --out DIR

<scenario> is a config file path or one of the bundled scenario names.
``run`` exits 0 only when every threshold configured in the scenario
passes.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .. import backend_name, depth
from .config import ConfigError, Scenario, load_scenario
from .depth_eval import DepthEvalError, depth_eval
from .metrics import MetricsReport
from .runner import run_scenario
from .scenarios import BUILTIN_SCENARIOS, builtin_scenario
from .server import TelemetryServer

EXIT_OK = 0
EXIT_THRESHOLDS = 1
EXIT_CONFIG = 2


def _resolve_scenario(ref: str) -> Scenario:
    if ref in BUILTIN_SCENARIOS:
        return builtin_scenario(ref)
    path = Path(ref)
    if not path.exists():
        raise ConfigError("scenario", "name",
                          f"{ref!r} is neither a file nor a bundled scenario "
                          f"({', '.join(BUILTIN_SCENARIOS)})")
    return load_scenario(path)


def _cmd_run(args) -> int:
    scenario = _resolve_scenario(args.scenario)
    result = run_scenario(scenario, seed=args.seed,
                          trace_path=args.trace, csv_path=args.csv)
    _print_metrics(result.scenario.name, result.metrics)
    return EXIT_OK if result.metrics.passed else EXIT_THRESHOLDS


def _print_metrics(name: str, metrics: MetricsReport) -> None:
    print(f"scenario {name}: {'PASS' if metrics.passed else 'FAIL'}")
    for line in metrics.summary_lines():
        print("  " + line)


def _cmd_list(_args) -> int:
    for name in BUILTIN_SCENARIOS:
        print(name)
    return EXIT_OK


def _cmd_serve(args) -> int:
    scenario = _resolve_scenario(args.scenario)
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    try:
        server = TelemetryServer(scenario, tcp_port=args.tcp, ws_port=args.ws,
                                 speed=args.speed)
    except OSError as exc:
        print(f"error: cannot bind: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    server.start()
    print(f"serving {scenario.name}: tcp :{server.tcp_port}, "
          f"ws :{server.ws_port}/link, speed {args.speed}x "
          f"(kernels: {backend_name()})")
    try:
        while not server.wait(0.5):
            pass
    except KeyboardInterrupt:
        print("interrupted; flushing metrics", file=sys.stderr)
        server.stop()
        server.wait(5.0)
    if server.metrics is not None:
        _print_metrics(scenario.name, server.metrics)
        return EXIT_OK if server.metrics.passed else EXIT_THRESHOLDS
    return EXIT_OK


def _cmd_depth_eval(args) -> int:
    weights = depth.LossWeights(lam=args.lam, alpha=args.alpha)
    results = depth_eval(args.frames, args.refs, weights, args.out,
                         feats_dir=args.feats, pre_feats_dir=args.pre_feats)
    print(f"evaluated {len(results)} frame(s) -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="usvsim",
        description="Differential-thrust camera-boat simulator and tools")
    parser.add_argument("--log-level", default="info",
                        choices=("debug", "info", "warning", "error"))
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario headless")
    p_run.add_argument("scenario", help="config path or bundled name")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--trace", type=Path, default=None,
                       help="write the JSONL trace here")
    p_run.add_argument("--csv", type=Path, default=None,
                       help="write the CSV trace projection here")
    p_run.set_defaults(fn=_cmd_run)

    p_list = sub.add_parser("list-scenarios", help="list bundled scenarios")
    p_list.set_defaults(fn=_cmd_list)

    p_serve = sub.add_parser("serve", help="serve a scenario live")
    p_serve.add_argument("scenario")
    p_serve.add_argument("--tcp", type=int, default=14550)
    p_serve.add_argument("--ws", type=int, default=8080)
    p_serve.add_argument("--speed", type=float, default=1.0)
    p_serve.add_argument("--seed", type=int, default=None)
    p_serve.set_defaults(fn=_cmd_serve)

    p_depth = sub.add_parser("depth-eval", help="evaluate depth-map frames")
    p_depth.add_argument("--frames", required=True, type=Path)
    p_depth.add_argument("--refs", required=True, type=Path)
    p_depth.add_argument("--lambda", dest="lam", type=float, required=True,
                         help="alignment loss weight")
    p_depth.add_argument("--alpha", type=float, required=True,
                         help="cosine similarity threshold")
    p_depth.add_argument("--out", required=True, type=Path)
    p_depth.add_argument("--feats", type=Path, default=None)
    p_depth.add_argument("--pre-feats", type=Path, default=None)
    p_depth.set_defaults(fn=_cmd_depth_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return args.fn(args)
    except (ConfigError, DepthEvalError, depth.DepthError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
