"""Synthetic clickstream generator for desk-scale experiments.

Items are partitioned into blocks and sessions follow a block-diagonal
Markov chain: each step stays inside the current item's block with
probability ``concentration`` and otherwise jumps uniformly over the whole
catalog, so the realised intra-block transition mass sits strictly above
the configured concentration.  The purchase is one more Markov step after
the last view.  Output uses the exact CSV layout the loaders expect, and a
fixed seed reproduces the files byte for byte.

One block can be restricted to a window of the session stream (for
cold-start experiments: an early-only block vanishes from recent training
fractions, a late-appearing block is rare in every training fraction).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

MS_PER_DAY = 86_400_000
MAX_SESSION_LENGTH = 100


@dataclass(frozen=True)
class SyntheticConfig:
    item_count: int = 200
    block_count: int = 10
    session_count: int = 3000
    day_count: int = 30
    mean_session_length: float = 5.0
    concentration: float = 0.9
    noise_categories: int = 3
    windowed_block: int = -1      # -1: no availability window
    window_start: float = 0.0     # fraction of the session stream
    window_end: float = 1.0
    start_day: str = "2021-06-01"

    def __post_init__(self):
        if self.item_count < 1:
            raise ValueError("synthetic config: item_count must be >= 1")
        if self.block_count < 1:
            raise ValueError("synthetic config: block_count must be >= 1")
        if self.block_count > self.item_count:
            raise ValueError("synthetic config: block_count cannot exceed item_count")
        if self.session_count < 1:
            raise ValueError("synthetic config: session_count must be >= 1")
        if self.day_count < 1:
            raise ValueError("synthetic config: day_count must be >= 1")
        if self.mean_session_length < 1:
            raise ValueError("synthetic config: mean_session_length must be >= 1")
        if not 0.0 < self.concentration <= 1.0:
            raise ValueError("synthetic config: concentration must be in (0, 1]")
        if self.noise_categories < 0:
            raise ValueError("synthetic config: noise_categories must be >= 0")
        if self.windowed_block >= self.block_count:
            raise ValueError("synthetic config: windowed_block out of range")
        if not 0.0 <= self.window_start <= self.window_end <= 1.0:
            raise ValueError("synthetic config: need 0 <= window_start <= window_end <= 1")
        if self.windowed_block >= 0 and self.block_count < 2:
            raise ValueError("synthetic config: windowing needs at least two blocks")


@dataclass(frozen=True)
class SyntheticFiles:
    sessions_path: Path
    purchases_path: Path
    features_path: Path


def _block_slices(item_count: int, block_count: int) -> list[np.ndarray]:
    # item ids are 1-based; block sizes as equal as possible
    ids = np.arange(1, item_count + 1)
    return [np.array(chunk) for chunk in np.array_split(ids, block_count)]


def _format_date(ms: int) -> str:
    dt = datetime.fromtimestamp(ms // 1000, tz=timezone.utc)
    return f"{dt:%Y-%m-%d %H:%M:%S}.{ms % 1000:03d}"


def generate_synthetic(cfg: SyntheticConfig, seed: int, out_dir) -> SyntheticFiles:
    """Write train_sessions.csv, train_purchases.csv, item_features.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    blocks = _block_slices(cfg.item_count, cfg.block_count)
    block_of = np.empty(cfg.item_count + 1, dtype=np.intp)
    for b, members in enumerate(blocks):
        block_of[members] = b

    all_items = np.arange(1, cfg.item_count + 1)
    if cfg.windowed_block >= 0:
        restricted = all_items[block_of[all_items] != cfg.windowed_block]
    else:
        restricted = all_items

    base_dt = datetime.fromisoformat(cfg.start_day)
    if base_dt.tzinfo is None:
        base_dt = base_dt.replace(tzinfo=timezone.utc)
    base_ms = int(base_dt.timestamp() * 1000)

    # sessions are assigned to days evenly by index; slots keep each session's
    # events inside its day and end times monotone within a day
    day_of = [i * cfg.day_count // cfg.session_count for i in range(cfg.session_count)]
    day_counts: dict[int, int] = {}
    for d in day_of:
        day_counts[d] = day_counts.get(d, 0) + 1
    day_rank = []
    seen: dict[int, int] = {}
    for d in day_of:
        day_rank.append(seen.get(d, 0))
        seen[d] = seen.get(d, 0) + 1

    def step(current: int, pool: np.ndarray) -> int:
        if rng.random() < cfg.concentration:
            members = blocks[block_of[current]]
            return int(members[rng.integers(len(members))])
        return int(pool[rng.integers(len(pool))])

    session_rows: list[tuple[int, int, str]] = []
    purchase_rows: list[tuple[int, int, str]] = []
    for i in range(cfg.session_count):
        frac = i / cfg.session_count
        in_window = cfg.window_start <= frac < cfg.window_end
        pool = all_items if (cfg.windowed_block < 0 or in_window) else restricted

        length = min(int(rng.geometric(1.0 / cfg.mean_session_length)), MAX_SESSION_LENGTH)
        items = [int(pool[rng.integers(len(pool))])]
        for _ in range(length - 1):
            items.append(step(items[-1], pool))
        purchased = step(items[-1], pool)

        day = day_of[i]
        slot = MS_PER_DAY // (day_counts[day] + 1)
        # event spacing shrinks on crowded days so a session never spills
        # past its slot (or its calendar day)
        spacing = max(1, min(1000, slot // (MAX_SESSION_LENGTH + 2)))
        start_ms = base_ms + day * MS_PER_DAY + (day_rank[i] + 1) * slot
        sid = i + 1
        for j, item in enumerate(items):
            session_rows.append((sid, item, _format_date(start_ms + j * spacing)))
        purchase_rows.append((sid, purchased, _format_date(start_ms + length * spacing)))

    feature_rows: list[tuple[int, int, int]] = []
    for item in range(1, cfg.item_count + 1):
        feature_rows.append((item, 1, int(block_of[item]) + 1))
        for c in range(cfg.noise_categories):
            if rng.random() < 0.8:
                feature_rows.append((item, c + 2, int(rng.integers(1, 6))))

    files = SyntheticFiles(
        sessions_path=out_dir / "train_sessions.csv",
        purchases_path=out_dir / "train_purchases.csv",
        features_path=out_dir / "item_features.csv",
    )
    _write_csv(files.sessions_path, ["session_id", "item_id", "date"], session_rows)
    _write_csv(files.purchases_path, ["session_id", "item_id", "date"], purchase_rows)
    _write_csv(
        files.features_path,
        ["item_id", "feature_category_id", "feature_value_id"],
        feature_rows,
    )
    return files


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
