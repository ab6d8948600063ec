"""Readers for the three-file session dataset layout.

All files are CSV with a header row:

* sessions:  ``session_id,item_id,date`` (one row per view)
* purchases: ``session_id,item_id,date`` (at most one row per session)
* features:  ``item_id,feature_category_id,feature_value_id``

Dates are ISO-8601 timestamps; naive timestamps are treated as UTC.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path


class LoadError(ValueError):
    """Malformed input file; the message carries the file and line number."""


@dataclass(frozen=True)
class Session:
    """A time-ordered sequence of item views."""

    session_id: int
    events: tuple[tuple[int, int], ...]  # (item_id, timestamp ms), nondecreasing ts

    @property
    def end_time(self) -> int:
        return self.events[-1][1]

    @property
    def items(self) -> tuple[int, ...]:
        return tuple(item for item, _ in self.events)

    def __len__(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class SideInfoTable:
    """Item metadata as (category, value) pairs with a dense pair index."""

    pairs_by_item: dict[int, tuple[int, ...]]      # item -> sorted dense pair indices
    pair_ids: tuple[tuple[int, int], ...]          # dense index -> (category, value)

    @property
    def n_pairs(self) -> int:
        return len(self.pair_ids)

    @property
    def n_categories(self) -> int:
        return len({cat for cat, _ in self.pair_ids})

    def items(self):
        return self.pairs_by_item.keys()

    def pairs_for(self, item_id: int) -> tuple[int, ...]:
        return self.pairs_by_item.get(item_id, ())

    def mean_pairs_per_item(self) -> float:
        if not self.pairs_by_item:
            return 0.0
        return sum(len(p) for p in self.pairs_by_item.values()) / len(self.pairs_by_item)


def _parse_timestamp_ms(text: str, path: Path, line_no: int) -> int:
    try:
        dt = datetime.fromisoformat(text)
    except ValueError:
        raise LoadError(f"{path}:{line_no}: unparseable date {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(round(dt.timestamp() * 1000))


def _parse_int(text: str, field: str, path: Path, line_no: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise LoadError(f"{path}:{line_no}: bad {field} {text!r}") from None


def _open_rows(path: Path, expected_header: list[str]):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise LoadError(f"{path}: file is empty") from None
        if header != expected_header:
            raise LoadError(f"{path}: expected header {expected_header}, got {header}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected_header):
                raise LoadError(f"{path}:{line_no}: expected {len(expected_header)} fields, got {len(row)}")
            yield line_no, row


def load_sessions(path) -> list[Session]:
    """Load view events grouped into Sessions, sorted by end time ascending.

    Events within a session are sorted by timestamp (stable, so file order
    breaks timestamp ties).  An empty data section is an error.
    """
    path = Path(path)
    groups: dict[int, list[tuple[int, int]]] = {}
    n_rows = 0
    for line_no, row in _open_rows(path, ["session_id", "item_id", "date"]):
        sid = _parse_int(row[0], "session_id", path, line_no)
        item = _parse_int(row[1], "item_id", path, line_no)
        if item <= 0:
            raise LoadError(f"{path}:{line_no}: item_id must be positive, got {item}")
        ts = _parse_timestamp_ms(row[2], path, line_no)
        groups.setdefault(sid, []).append((item, ts))
        n_rows += 1
    if n_rows == 0:
        raise LoadError(f"{path}: no session rows")
    sessions = [
        Session(sid, tuple(sorted(events, key=lambda e: e[1])))
        for sid, events in groups.items()
    ]
    sessions.sort(key=lambda s: (s.end_time, s.session_id))
    return sessions


def load_purchases(path) -> dict[int, tuple[int, int]]:
    """Load the one-purchase-per-session map: session_id -> (item_id, ts ms)."""
    path = Path(path)
    purchases: dict[int, tuple[int, int]] = {}
    for line_no, row in _open_rows(path, ["session_id", "item_id", "date"]):
        sid = _parse_int(row[0], "session_id", path, line_no)
        item = _parse_int(row[1], "item_id", path, line_no)
        if item <= 0:
            raise LoadError(f"{path}:{line_no}: item_id must be positive, got {item}")
        ts = _parse_timestamp_ms(row[2], path, line_no)
        if sid in purchases:
            raise LoadError(f"{path}:{line_no}: duplicate purchase for session {sid}")
        purchases[sid] = (item, ts)
    return purchases


def load_item_features(path) -> SideInfoTable:
    """Load item feature triples into a SideInfoTable.

    Identical duplicate triples are dropped silently.  The distinct
    (category, value) universe is enumerated in sorted order so the dense
    pair index is deterministic.
    """
    path = Path(path)
    raw: dict[int, set[tuple[int, int]]] = {}
    n_rows = 0
    for line_no, row in _open_rows(path, ["item_id", "feature_category_id", "feature_value_id"]):
        item = _parse_int(row[0], "item_id", path, line_no)
        cat = _parse_int(row[1], "feature_category_id", path, line_no)
        val = _parse_int(row[2], "feature_value_id", path, line_no)
        raw.setdefault(item, set()).add((cat, val))
        n_rows += 1
    if n_rows == 0:
        raise LoadError(f"{path}: no feature rows")
    universe = sorted({pair for pairs in raw.values() for pair in pairs})
    index = {pair: i for i, pair in enumerate(universe)}
    pairs_by_item = {
        item: tuple(sorted(index[p] for p in pairs)) for item, pairs in raw.items()
    }
    return SideInfoTable(pairs_by_item=pairs_by_item, pair_ids=tuple(universe))
