"""Session graphs: directed item-transition structure with normalized adjacency.

A session ``[a, b, a, c]`` becomes a graph over its distinct items (in first
occurrence order) with one directed edge per consecutive pair.  Repeated
edges accumulate counts, repeated consecutive items create self-loops, and
each row of the outgoing / incoming adjacency is normalized by the node's
total outgoing / incoming edge count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class SessionGraph:
    nodes: tuple[int, ...]   # distinct items, first-occurrence order
    alias: tuple[int, ...]   # sequence position -> slot in nodes
    a_out: np.ndarray        # m x m, rows sum to 1 or 0
    a_in: np.ndarray         # m x m, rows sum to 1 or 0

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_positions(self) -> int:
        return len(self.alias)


def _normalize_rows(counts: np.ndarray) -> np.ndarray:
    sums = counts.sum(axis=1, keepdims=True)
    out = np.zeros_like(counts)
    np.divide(counts, sums, out=out, where=sums > 0)
    return out


def build_graph(items: Sequence[int]) -> SessionGraph:
    """Build the transition graph of an item sequence.

    ``a_out[u][v]`` is the fraction of u's outgoing transitions that go to v;
    ``a_in[u][v]`` is the fraction of u's incoming transitions that come from
    v.  A single-item session yields one node and all-zero matrices.
    """
    if len(items) == 0:
        raise ValueError("build_graph: empty item sequence")
    slot: dict[int, int] = {}
    for it in items:
        slot.setdefault(it, len(slot))
    alias = tuple(slot[it] for it in items)
    m = len(slot)
    out_counts = np.zeros((m, m))
    for u, v in zip(alias, alias[1:]):
        out_counts[u, v] += 1.0
    return SessionGraph(
        nodes=tuple(slot.keys()),
        alias=alias,
        a_out=_normalize_rows(out_counts),
        a_in=_normalize_rows(out_counts.T.copy()),
    )


def format_edge_list(graph: SessionGraph) -> str:
    """Readable edge dump for debugging: one ``u -> v`` line per edge."""
    lines = [f"nodes: {list(graph.nodes)}", f"alias: {list(graph.alias)}"]
    for i, u in enumerate(graph.nodes):
        for j, v in enumerate(graph.nodes):
            if graph.a_out[i, j] > 0:
                lines.append(
                    f"{u} -> {v}  out={graph.a_out[i, j]:.4f} in={graph.a_in[j, i]:.4f}"
                )
    return "\n".join(lines)
