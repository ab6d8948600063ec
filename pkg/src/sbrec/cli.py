"""Command-line front end.

Thin client over the orchestration layer: every subcommand parses flags
into config overrides, resolves the config, and delegates.  ``recommend``
can also talk to a running service instead of loading the model locally,
and ``serve`` starts the HTTP service.

Subcommands: synth, train, eval, sweep, recommend, serve, dump-graph.
"""

from __future__ import annotations

import argparse
import json
import sys
import urllib.request
from pathlib import Path

from sbrec import __version__
from sbrec.checkpoint import CheckpointError
from sbrec.config import ConfigError, resolve_config
from sbrec.data.io import LoadError
from sbrec.experiments import (
    engine_from_run_dir,
    load_engine,
    run_eval,
    run_sweep,
    run_synth,
    run_train,
)
from sbrec.graph import build_graph, format_edge_list


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file (flags win over file values)")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        dest="assignments", help="override any config key")
    parser.add_argument("--output-dir", dest="output_dir", help="artifact directory")
    parser.add_argument("--seed", type=int)


def _add_pipeline(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--sessions", dest="sessions_path", help="session views CSV")
    parser.add_argument("--purchases", dest="purchases_path", help="purchases CSV")
    parser.add_argument("--features", dest="features_path", help="item features CSV")
    parser.add_argument("--k", type=int, help="recency fraction divisor")
    parser.add_argument("--mode", choices=["purchase-label", "next-item"])
    parser.add_argument("--p", type=int, help="session suffix length kept")
    parser.add_argument("--t", type=float, help="order scale of the adaptive weights")
    parser.add_argument("--dim", type=int, help="embedding dimension")
    parser.add_argument("--steps", type=int, help="propagation steps")
    parser.add_argument("--variant", help="comma-separated: base | aw | si | msi")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--batch-size", dest="batch_size", type=int)
    parser.add_argument("--checkpoint", help="checkpoint path (default: <output-dir>/checkpoint.bin)")
    parser.add_argument("--top-k", dest="top_k", type=int)


_FLAG_KEYS = (
    "output_dir", "seed", "sessions_path", "purchases_path", "features_path",
    "k", "mode", "p", "t", "dim", "steps", "variant", "epochs", "batch_size",
    "checkpoint", "top_k",
)


def _collect_config(args: argparse.Namespace) -> dict:
    overrides: dict = {}
    for key in _FLAG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    for assignment in getattr(args, "assignments", []):
        if "=" not in assignment:
            raise ConfigError(f"--set expects KEY=VALUE, got {assignment!r}")
        key, _, value = assignment.partition("=")
        overrides[key.strip()] = value.strip()
    return resolve_config(getattr(args, "config", None), overrides)


def _parse_list(text: str, cast) -> list:
    try:
        return [cast(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _read_stdin_items() -> list[int]:
    raw = sys.stdin.read().replace(",", " ").split()
    if not raw:
        raise ConfigError("no item ids on standard input")
    try:
        return [int(tok) for tok in raw]
    except ValueError:
        raise ConfigError("standard input must hold integer item ids") from None


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = _collect_config(args)
    manifest = run_synth(cfg)
    for role in ("sessions", "purchases", "features"):
        print(f"{role}: {manifest['files'][role]['path']}")
    print(f"manifest: {manifest['manifest_path']}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _collect_config(args)
    summary = run_train(cfg)
    print(f"trained {summary['epochs_run']} epochs "
          f"(best epoch {summary['best_epoch']}, final loss {summary['final_loss']:.4f})")
    if summary["val_recall20"] is not None:
        print(f"validation recall@20 {summary['val_recall20']:.4f} "
              f"mrr@20 {summary['val_mrr20']:.4f}")
    print(f"checkpoint: {summary['checkpoint_path']}")
    print(f"train log: {summary['log_path']}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _collect_config(args)
    result = run_eval(cfg)
    print(result["report"].format_table())
    print(f"report: {result['csv_path']}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.parallel is not None:
        args.assignments.append(f"sweep_parallel={args.parallel}")
    cfg = _collect_config(args)
    result = run_sweep(
        cfg,
        _parse_list(args.t_list, float),
        _parse_list(args.p_list, int),
        _parse_list(args.k_list, int),
    )
    failures = sum(1 for row in result["rows"] if row["error"])
    print(f"sweep wrote {len(result['rows'])} cells to {result['grid_path']}"
          + (f" ({failures} failed)" if failures else ""))
    return 0


def cmd_recommend(args: argparse.Namespace) -> int:
    items = _read_stdin_items()
    if args.dump_graph:
        print(format_edge_list(build_graph(items)), file=sys.stderr)
    if args.server:
        body = json.dumps({"items": items, "top_k": args.top_k or 20}).encode()
        req = urllib.request.Request(
            args.server.rstrip("/") + "/recommend",
            data=body, headers={"Content-Type": "application/json"},
        )
        with urllib.request.urlopen(req) as resp:
            payload = json.loads(resp.read())
        for entry in payload["items"]:
            print(f"{entry['item_id']}\t{entry['score']:.6f}")
        return 0
    if args.run_dir:
        engine = engine_from_run_dir(args.run_dir)
    elif args.checkpoint:
        catalog = args.catalog or str(Path(args.checkpoint).parent / "catalog.json")
        engine = load_engine(args.checkpoint, catalog)
    else:
        raise ConfigError("recommend needs --run-dir, --checkpoint, or --server")
    for item, score in engine.recommend(items, args.top_k or 20):
        print(f"{item}\t{score:.6f}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from sbrec.service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def cmd_dump_graph(args: argparse.Namespace) -> int:
    print(format_edge_list(build_graph(_read_stdin_items())))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbrec",
        description="Session-based next-item recommendation: data synthesis, "
                    "training, evaluation, sweeps, and serving.",
    )
    parser.add_argument("--version", action="version", version=f"sbrec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    _add_common(p)
    for flag, key in (
        ("--item-count", "item_count"), ("--block-count", "block_count"),
        ("--session-count", "session_count"), ("--day-count", "day_count"),
    ):
        p.add_argument(flag, dest="assign_" + key, type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="prepare data and train a model")
    _add_common(p)
    _add_pipeline(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test day")
    _add_common(p)
    _add_pipeline(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="train/evaluate a (k, t, p) grid")
    _add_common(p)
    _add_pipeline(p)
    p.add_argument("--t-list", required=True, help="comma-separated order scales")
    p.add_argument("--p-list", required=True, help="comma-separated suffix lengths")
    p.add_argument("--k-list", required=True, help="comma-separated fraction divisors")
    p.add_argument("--parallel", type=int, help="worker processes for sweep cells")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("recommend", help="rank items for a session read from stdin")
    p.add_argument("--run-dir", help="training output directory (checkpoint + catalog)")
    p.add_argument("--checkpoint", help="checkpoint path")
    p.add_argument("--catalog", help="catalog sidecar path")
    p.add_argument("--server", help="base URL of a running service to query instead")
    p.add_argument("--top-k", dest="top_k", type=int, default=20)
    p.add_argument("--dump-graph", action="store_true",
                   help="print the session graph edge list to stderr")
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("dump-graph", help="print the session graph for items on stdin")
    p.set_defaults(func=cmd_dump_graph)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    # synth convenience flags map onto config keys
    for key in ("item_count", "block_count", "session_count", "day_count"):
        value = getattr(args, "assign_" + key, None)
        if value is not None:
            args.assignments.append(f"{key}={value}")
    try:
        return args.func(args)
    except (ConfigError, LoadError, CheckpointError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
