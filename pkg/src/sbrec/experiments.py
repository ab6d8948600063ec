"""Experiment orchestration shared by the CLI and the HTTP service.

Each ``run_*`` function takes a fully resolved config mapping (see
:mod:`sbrec.config`), performs one lifecycle step, writes its artifacts
into the config's output directory, and returns a plain summary that both
front ends can render.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from sbrec.checkpoint import load_checkpoint, save_checkpoint
from sbrec.config import (
    checkpoint_path,
    hyper_from_config,
    synth_config_from,
    train_config_from,
    write_resolved,
)
from sbrec.data.io import SideInfoTable, load_item_features, load_purchases, load_sessions
from sbrec.data.prepare import (
    Catalog,
    Example,
    MODE_PURCHASE_LABEL,
    build_vocabulary,
    chronological_split,
    expand_examples,
    take_recent_fraction,
)
from sbrec.data.synthetic import generate_synthetic
from sbrec.evaluation import evaluate
from sbrec.model import HyperParams, ModelParams, SideIndex, forward_scores
from sbrec.training import train


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Data preparation
# ---------------------------------------------------------------------------


@dataclass
class PreparedData:
    train_examples: list[Example]
    test_examples: list[Example]
    catalog: Catalog
    side: SideInfoTable | None
    stats: dict[str, Any]


def prepare_dataset(cfg: dict[str, Any]) -> PreparedData:
    """Load, split chronologically, take the recency fraction, expand, index."""
    sessions = load_sessions(cfg["sessions_path"])
    purchases = None
    if cfg["mode"] == MODE_PURCHASE_LABEL:
        purchases = load_purchases(cfg["purchases_path"])
    train_sessions, test_sessions = chronological_split(sessions)
    n_full_train = len(train_sessions)
    train_sessions = take_recent_fraction(train_sessions, cfg["k"])

    train_examples, train_stats = expand_examples(train_sessions, purchases, cfg["mode"], cfg["p"])
    test_examples, test_stats = expand_examples(test_sessions, purchases, cfg["mode"], cfg["p"])

    side = load_item_features(cfg["features_path"]) if cfg["features_path"] else None
    catalog = build_vocabulary(train_examples, side)

    view_lengths = [len(s) for s in train_sessions]
    stats = {
        "n_sessions": len(sessions),
        "n_train_sessions_full": n_full_train,
        "n_train_sessions": len(train_sessions),
        "n_test_sessions": len(test_sessions),
        "n_train_examples": len(train_examples),
        "n_test_examples": len(test_examples),
        "n_catalog_items": catalog.item_count,
        "n_trained_items": sum(catalog.trained_mask),
        "avg_train_session_views": float(np.mean(view_lengths)) if view_lengths else 0.0,
        "avg_train_session_views_plus_purchase": (
            float(np.mean(view_lengths)) + 1.0 if view_lengths else 0.0
        ),
        "train_dropped_sessions": train_stats.n_sessions_dropped,
        "train_missing_purchases": train_stats.n_missing_purchase,
        "train_out_of_order_purchases": train_stats.n_out_of_order_purchases,
        "test_dropped_sessions": test_stats.n_sessions_dropped,
        "test_missing_purchases": test_stats.n_missing_purchase,
    }
    return PreparedData(train_examples, test_examples, catalog, side, stats)


# ---------------------------------------------------------------------------
# Lifecycle steps
# ---------------------------------------------------------------------------


def run_synth(cfg: dict[str, Any]) -> dict[str, Any]:
    out_dir = Path(cfg["output_dir"])
    files = generate_synthetic(synth_config_from(cfg), cfg["seed"], out_dir)
    manifest = {
        "seed": cfg["seed"],
        "generator": {
            key: cfg[key]
            for key in (
                "item_count", "block_count", "session_count", "day_count",
                "mean_session_length", "concentration", "noise_categories",
                "windowed_block", "window_start", "window_end",
            )
        },
        "files": {
            "sessions": {"path": str(files.sessions_path), "sha256": _sha256_file(files.sessions_path)},
            "purchases": {"path": str(files.purchases_path), "sha256": _sha256_file(files.purchases_path)},
            "features": {"path": str(files.features_path), "sha256": _sha256_file(files.features_path)},
        },
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    write_resolved(cfg, out_dir)
    manifest["manifest_path"] = str(manifest_path)
    return manifest


def _write_catalog_sidecar(catalog: Catalog, side: SideInfoTable | None, path: Path) -> None:
    payload = {
        "items": list(catalog.item_ids),
        "trained": [int(flag) for flag in catalog.trained_mask],
        "n_side_pairs": catalog.n_side_pairs,
        "side_pairs": {
            str(it): list(side.pairs_for(it)) for it in catalog.item_ids
        } if side is not None else {},
        "fingerprint": catalog.fingerprint().hex(),
    }
    path.write_text(json.dumps(payload) + "\n")


def load_catalog_sidecar(path) -> tuple[Catalog, SideIndex]:
    payload = json.loads(Path(path).read_text())
    catalog = Catalog(
        item_ids=tuple(payload["items"]),
        trained_mask=tuple(bool(f) for f in payload["trained"]),
        n_side_pairs=payload["n_side_pairs"],
    )
    if catalog.fingerprint().hex() != payload["fingerprint"]:
        raise ValueError(f"{path}: catalog sidecar fingerprint mismatch")
    side_pairs = payload["side_pairs"]
    side_index = tuple(
        tuple(side_pairs.get(str(it), ())) for it in catalog.item_ids
    )
    return catalog, side_index


def run_train(cfg: dict[str, Any]) -> dict[str, Any]:
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    prepared = prepare_dataset(cfg)
    if not prepared.train_examples:
        raise ValueError("run_train: no training examples after preparation")
    hyper = hyper_from_config(cfg)
    result = train(prepared.train_examples, prepared.catalog, prepared.side, hyper,
                   train_config_from(cfg))

    ckpt = checkpoint_path(cfg)
    save_checkpoint(result.params, hyper, prepared.catalog, ckpt)
    log_path = out_dir / "train_log.csv"
    result.log.write_csv(log_path)
    config_path = write_resolved(cfg, out_dir)
    _write_catalog_sidecar(prepared.catalog, prepared.side, out_dir / "catalog.json")

    last = result.log.epochs[-1]
    return {
        "checkpoint_path": str(ckpt),
        "log_path": str(log_path),
        "config_path": str(config_path),
        "catalog_path": str(out_dir / "catalog.json"),
        "epochs_run": len(result.log.epochs),
        "best_epoch": result.best_epoch,
        "stopped_early": result.stopped_early,
        "final_loss": last.loss,
        "val_recall20": None if np.isnan(last.recall20) else last.recall20,
        "val_mrr20": None if np.isnan(last.mrr20) else last.mrr20,
        "n_train_examples": result.n_train,
        "n_val_examples": result.n_val,
        "stats": prepared.stats,
    }


def run_eval(cfg: dict[str, Any]) -> dict[str, Any]:
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    prepared = prepare_dataset(cfg)
    if not prepared.test_examples:
        raise ValueError("run_eval: no test examples after preparation")
    params, hyper = load_checkpoint(checkpoint_path(cfg), prepared.catalog)
    report = evaluate(params, prepared.test_examples, prepared.catalog, prepared.side,
                      hyper, k=cfg["top_k"])

    table_path = out_dir / "report.txt"
    table_path.write_text(report.format_table() + "\n")
    csv_path = out_dir / "report.csv"
    with open(csv_path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(report.csv_rows())
    # separate file so an eval into a training directory keeps the training
    # provenance intact
    (out_dir / "eval_config.json").write_text(
        json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    return {
        "report": report,
        "table_path": str(table_path),
        "csv_path": str(csv_path),
        "stats": prepared.stats,
    }


def sweep_cells(t_list, p_list, k_list) -> list[tuple[int, float, int]]:
    """Cartesian cells in deterministic order with duplicates removed."""
    cells = []
    seen = set()
    for k in k_list:
        for t in t_list:
            for p in p_list:
                cell = (int(k), float(t), int(p))
                if cell not in seen:
                    seen.add(cell)
                    cells.append(cell)
    return cells


def _run_sweep_cell(cell_cfg: dict[str, Any]) -> dict[str, Any]:
    top_k = cell_cfg["top_k"]
    row: dict[str, Any] = {
        "k": cell_cfg["k"], "t": cell_cfg["t"], "p": cell_cfg["p"],
        "variant": cell_cfg["variant"],
        f"recall{top_k}": "", f"mrr{top_k}": "", "error": "",
    }
    try:
        run_train(cell_cfg)
        report = run_eval(cell_cfg)["report"]
        row[f"recall{top_k}"] = f"{report.recall_at_k:.6f}"
        row[f"mrr{top_k}"] = f"{report.mrr_at_k:.6f}"
    except Exception as exc:  # keep sweeping, record the failure
        row["error"] = str(exc)
    return row


def run_sweep(cfg: dict[str, Any], t_list, p_list, k_list) -> dict[str, Any]:
    """Train and evaluate every (k, t, p) cell; failures are recorded per row.

    Cells run sequentially unless ``sweep_parallel`` > 1, in which case that
    many worker processes run cells concurrently.  Each cell derives its own
    seed and output directory, so the grid is identical either way.
    """
    if not t_list or not p_list or not k_list:
        raise ValueError("run_sweep: t_list, p_list, k_list must be nonempty")
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)

    cell_cfgs = []
    for idx, (k, t, p) in enumerate(sweep_cells(t_list, p_list, k_list)):
        cell_cfg = dict(cfg)
        cell_cfg.update(
            k=k, t=t, p=p,
            seed=cfg["seed"] + idx,
            output_dir=str(out_dir / "cells" / f"k{k}_t{t:g}_p{p}"),
            checkpoint="",
        )
        cell_cfgs.append(cell_cfg)

    workers = int(cfg.get("sweep_parallel", 1))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_sweep_cell, cell_cfgs))
    else:
        rows = [_run_sweep_cell(c) for c in cell_cfgs]

    grid_path = out_dir / "sweep.csv"
    header = ["k", "t", "p", "variant", f"recall{cfg['top_k']}", f"mrr{cfg['top_k']}", "error"]
    with open(grid_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    write_resolved(cfg, out_dir)
    return {"rows": rows, "grid_path": str(grid_path)}


# ---------------------------------------------------------------------------
# Recommendation engine (checkpoint + catalog sidecar)
# ---------------------------------------------------------------------------


@dataclass
class Engine:
    """A loaded model ready to rank items for ad-hoc sessions."""

    params: ModelParams
    hyper: HyperParams
    catalog: Catalog
    side_index: SideIndex
    checkpoint: str

    def recommend(self, items: list[int], top_k: int) -> list[tuple[int, float]]:
        enc = [idx for idx in (self.catalog.encode(it) for it in items) if idx is not None]
        if not enc:
            raise ValueError("recommend: none of the input items are in the catalog")
        _, scores = forward_scores(enc, self.side_index, self.params, self.hyper)
        s = scores.data[0]
        order = np.lexsort((np.arange(s.size), -s))[:top_k]
        return [(self.catalog.item_ids[i], float(s[i])) for i in order]

    def info(self) -> dict[str, Any]:
        return {
            "checkpoint": self.checkpoint,
            "dim": self.hyper.dim,
            "steps": self.hyper.steps,
            "order_scale": self.hyper.order_scale,
            "max_len": self.hyper.max_len,
            "use_adaptive": self.hyper.use_adaptive,
            "use_si": self.hyper.use_si,
            "use_msi": self.hyper.use_msi,
            "include_last": self.hyper.include_last,
            "n_items": self.catalog.item_count,
        }


def load_engine(checkpoint: str, catalog_file: str) -> Engine:
    catalog, side_index = load_catalog_sidecar(catalog_file)
    params, hyper = load_checkpoint(checkpoint, catalog)
    return Engine(params=params, hyper=hyper, catalog=catalog,
                  side_index=side_index, checkpoint=str(checkpoint))


def engine_from_run_dir(run_dir) -> Engine:
    run_dir = Path(run_dir)
    return load_engine(str(run_dir / "checkpoint.bin"), str(run_dir / "catalog.json"))
