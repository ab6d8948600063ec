"""Chronological split, recency-fraction sampling, truncation, example
expansion, and vocabulary construction."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

from sbrec.data.io import Session, SideInfoTable

MODE_PURCHASE_LABEL = "purchase-label"
MODE_NEXT_ITEM = "next-item"

MS_PER_DAY = 86_400_000


@dataclass(frozen=True)
class Example:
    """One prediction instance: an input item sequence and its target."""

    input_items: tuple[int, ...]
    target_item: int
    session_id: int


@dataclass(frozen=True)
class Catalog:
    """Bijection between item ids and dense indices, plus training coverage.

    Covers the union of items seen in training examples and items present in
    the side-information table; ``trained_mask[i]`` is True only when item i
    occurs in some training example input or target.  ``n_side_pairs`` pins
    the side-embedding table size so checkpoints can be validated.
    """

    item_ids: tuple[int, ...]
    trained_mask: tuple[bool, ...]
    n_side_pairs: int
    _index: dict[int, int] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        if not self._index:
            object.__setattr__(self, "_index", {it: i for i, it in enumerate(self.item_ids)})

    @property
    def item_count(self) -> int:
        return len(self.item_ids)

    def encode(self, item_id: int) -> int | None:
        return self._index.get(item_id)

    def fingerprint(self) -> bytes:
        # covers ids, training coverage, and the side-pair universe, so a
        # checkpoint only loads against the exact preparation that built it
        h = hashlib.sha256()
        h.update(b"catalog-v1")
        h.update(str(self.n_side_pairs).encode())
        for it, flag in zip(self.item_ids, self.trained_mask):
            h.update(str(it).encode())
            h.update(b"+" if flag else b"-")
        return h.digest()


@dataclass
class ExpandStats:
    n_examples: int = 0
    n_sessions_dropped: int = 0          # produced no example
    n_missing_purchase: int = 0
    n_out_of_order_purchases: int = 0    # purchase timestamped before first view


def chronological_split(sessions: list[Session]) -> tuple[list[Session], list[Session]]:
    """Split off the final UTC calendar day present in the data as the test set.

    ``sessions`` must be sorted by end time ascending.  Raises if everything
    falls on a single day (the train side would be empty).
    """
    if not sessions:
        raise ValueError("chronological_split: no sessions")
    last_day = sessions[-1].end_time // MS_PER_DAY
    boundary = len(sessions)
    while boundary > 0 and sessions[boundary - 1].end_time // MS_PER_DAY == last_day:
        boundary -= 1
    if boundary == 0:
        raise ValueError("chronological_split: all sessions fall on one calendar day")
    return sessions[:boundary], sessions[boundary:]


def take_recent_fraction(train: list[Session], k: int) -> list[Session]:
    """Keep the most recent ceil(n / k) sessions; k = 1 keeps everything."""
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"take_recent_fraction: k must be a positive integer, got {k}")
    n = len(train)
    keep = -(-n // k)
    return list(train[n - keep:])


def truncate_session(items: Sequence[int], keep_last: int) -> list[int]:
    """Return the final ``keep_last`` items (all of them if already shorter)."""
    if keep_last < 1:
        raise ValueError(f"truncate_session: keep_last must be >= 1, got {keep_last}")
    if len(items) <= keep_last:
        return list(items)
    return list(items[len(items) - keep_last:])


def expand_examples(
    sessions: list[Session],
    purchases: dict[int, tuple[int, int]] | None,
    mode: str,
    keep_last: int,
) -> tuple[list[Example], ExpandStats]:
    """Turn sessions into prediction examples.

    purchase-label mode: one example per session, input = truncated views,
    target = the purchased item; sessions without a purchase record are
    skipped and counted.  next-item mode: one example per position j >= 2,
    input = truncated prefix, target = the j-th view.
    """
    if mode not in (MODE_PURCHASE_LABEL, MODE_NEXT_ITEM):
        raise ValueError(f"expand_examples: unknown mode {mode!r}")
    stats = ExpandStats()
    out: list[Example] = []
    for session in sessions:
        views = session.items
        if mode == MODE_PURCHASE_LABEL:
            record = (purchases or {}).get(session.session_id)
            if record is None:
                stats.n_missing_purchase += 1
                stats.n_sessions_dropped += 1
                continue
            target, purchase_ts = record
            if purchase_ts < session.events[0][1]:
                stats.n_out_of_order_purchases += 1
            out.append(Example(tuple(truncate_session(views, keep_last)), target, session.session_id))
        else:
            produced = 0
            for j in range(1, len(views)):
                prefix = truncate_session(views[:j], keep_last)
                out.append(Example(tuple(prefix), views[j], session.session_id))
                produced += 1
            if produced == 0:
                stats.n_sessions_dropped += 1
    stats.n_examples = len(out)
    return out, stats


def build_vocabulary(train_examples: list[Example], side: SideInfoTable | None) -> Catalog:
    """Catalog over training items plus all side-information items.

    Items known only from the side table get entries (so their embeddings
    exist) but a False trained_mask; test targets outside the catalog stay
    unrepresentable and are scored as automatic misses by the evaluator.
    """
    trained: set[int] = set()
    for ex in train_examples:
        trained.update(ex.input_items)
        trained.add(ex.target_item)
    universe = set(trained)
    if side is not None:
        universe.update(side.items())
    item_ids = tuple(sorted(universe))
    return Catalog(
        item_ids=item_ids,
        trained_mask=tuple(it in trained for it in item_ids),
        n_side_pairs=side.n_pairs if side is not None else 0,
    )
