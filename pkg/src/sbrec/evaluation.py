"""Top-K ranking evaluation with a cold-start breakdown.

Ranks are deterministic: descending score with ascending catalog index as
the tie-break.  Targets outside the catalog (and inputs that empty out
after dropping unknown items) cannot be scored and count as misses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sbrec.data.io import SideInfoTable
from sbrec.data.prepare import Catalog, Example
from sbrec.model import (
    HyperParams,
    ModelParams,
    SideDiagnostics,
    catalog_side_index,
    forward_scores,
)

SEGMENT_ALL = "all"
SEGMENT_SEEN = "seen_target"
SEGMENT_COLD = "cold_start_target"


@dataclass(frozen=True)
class SegmentMetrics:
    name: str
    n: int
    recall: float
    mrr: float


@dataclass(frozen=True)
class EvalReport:
    k: int
    n_examples: int
    n_unscoreable: int
    n_missing_side: int
    segments: tuple[SegmentMetrics, ...]

    def segment(self, name: str) -> SegmentMetrics:
        for seg in self.segments:
            if seg.name == name:
                return seg
        raise KeyError(name)

    @property
    def recall_at_k(self) -> float:
        return self.segment(SEGMENT_ALL).recall

    @property
    def mrr_at_k(self) -> float:
        return self.segment(SEGMENT_ALL).mrr

    def csv_rows(self) -> list[list[str]]:
        rows = [["segment", "n", f"recall{self.k}", f"mrr{self.k}"]]
        for seg in self.segments:
            rows.append([seg.name, str(seg.n), f"{seg.recall:.6f}", f"{seg.mrr:.6f}"])
        return rows

    def format_table(self) -> str:
        lines = [f"{'segment':<20} {'n':>8} {'recall@' + str(self.k):>12} {'mrr@' + str(self.k):>12}"]
        for seg in self.segments:
            lines.append(f"{seg.name:<20} {seg.n:>8} {seg.recall:>12.4f} {seg.mrr:>12.4f}")
        lines.append(f"unscoreable targets: {self.n_unscoreable}")
        return "\n".join(lines)


def rank_of_target(scores: np.ndarray, target_index: int) -> int:
    """1-based rank of the target under descending score, ascending index."""
    s = np.asarray(scores).reshape(-1)
    t = s[target_index]
    greater = int(np.count_nonzero(s > t))
    ties_before = int(np.count_nonzero(s[:target_index] == t))
    return 1 + greater + ties_before


class _Accumulator:
    __slots__ = ("n", "hits", "rr_sum")

    def __init__(self):
        self.n = 0
        self.hits = 0
        self.rr_sum = 0.0

    def add(self, rank: int | None, k: int) -> None:
        self.n += 1
        if rank is not None and rank <= k:
            self.hits += 1
            self.rr_sum += 1.0 / rank

    def metrics(self, name: str) -> SegmentMetrics:
        if self.n == 0:
            return SegmentMetrics(name, 0, 0.0, 0.0)
        return SegmentMetrics(name, self.n, self.hits / self.n, self.rr_sum / self.n)


def evaluate(
    params: ModelParams,
    examples: list[Example],
    catalog: Catalog,
    side: SideInfoTable | None,
    hyper: HyperParams,
    k: int = 20,
) -> EvalReport:
    """Score every example and report Recall@k / MRR@k overall and split by
    whether the target item was seen during training."""
    if not examples:
        raise ValueError("evaluate: empty test set")
    if k < 1:
        raise ValueError("evaluate: k must be >= 1")
    side_index = catalog_side_index(catalog, side)
    diag = SideDiagnostics()

    overall = _Accumulator()
    seen = _Accumulator()
    cold = _Accumulator()
    n_unscoreable = 0
    for ex in examples:
        enc = [idx for idx in (catalog.encode(it) for it in ex.input_items) if idx is not None]
        target = catalog.encode(ex.target_item)
        if target is None or not enc:
            n_unscoreable += 1
            overall.add(None, k)
            continue
        _, scores = forward_scores(enc, side_index, params, hyper, diag)
        rank = rank_of_target(scores.data[0], target)
        overall.add(rank, k)
        (seen if catalog.trained_mask[target] else cold).add(rank, k)

    return EvalReport(
        k=k,
        n_examples=len(examples),
        n_unscoreable=n_unscoreable,
        n_missing_side=diag.n_missing_side,
        segments=(
            overall.metrics(SEGMENT_ALL),
            seen.metrics(SEGMENT_SEEN),
            cold.metrics(SEGMENT_COLD),
        ),
    )
