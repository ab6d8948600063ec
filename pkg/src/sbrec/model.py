"""Gated session-graph recommender with adaptive position weighting.

The forward pass has four stages: build the session graph, refine node
vectors with gated message passing over the in/out adjacency, pool the
session into representations, and score every catalog item by dot product.

Three optional paths extend the base composition:

* adaptive weighting: positions are pooled with softmax(c_j * exp(j / s))
  where c_j is the cosine of position j's state against the last position's
  state and s is the order scale; small s emphasises late positions,
  large s emphasises similarity.
* last-item side fusion: the last item's side-information vector is
  concatenated onto the local representation and projected back.
* mean side fusion: the session mean of side-information vectors is added
  to the global representation.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterator, Sequence

import numpy as np

from sbrec.autodiff import (
    Tensor,
    add,
    concat_cols,
    cosine_sim_rows,
    cross_entropy_with_softmax,
    gather_rows,
    hadamard,
    matmul,
    matmul_t,
    scale,
    sigmoid,
    softmax_row,
    sub,
    tanh,
    transpose,
)
from sbrec.data.io import SideInfoTable
from sbrec.data.prepare import Catalog
from sbrec.graph import SessionGraph, build_graph


@dataclass(frozen=True)
class HyperParams:
    """Model shape and variant switches.

    ``order_scale`` is the divisor in the position exponent of the adaptive
    weights; ``max_len`` is the session suffix length kept upstream by
    truncation (recorded here so checkpoints carry the full recipe).
    ``include_last`` controls whether the final position itself enters the
    adaptively weighted sum (it does by default, with cosine 1).
    """

    dim: int = 100
    steps: int = 1
    order_scale: float = 4.0
    max_len: int = 10
    use_adaptive: bool = False
    use_si: bool = False
    use_msi: bool = False
    include_last: bool = True

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("HyperParams: dim must be >= 1")
        if self.steps < 1:
            raise ValueError("HyperParams: steps must be >= 1")
        if self.order_scale <= 0:
            raise ValueError("HyperParams: order_scale must be positive")
        if self.max_len < 1:
            raise ValueError("HyperParams: max_len must be >= 1")

    @property
    def fuse_width(self) -> int:
        return (3 if self.use_adaptive else 2) * self.dim


PARAM_NAMES = (
    "item_embed",
    "side_pair_embed",
    "w_out",
    "b_out",
    "w_in",
    "b_in",
    "w_update",
    "u_update",
    "w_reset",
    "u_reset",
    "w_cand",
    "u_cand",
    "att_last",
    "att_each",
    "att_bias",
    "att_score",
    "w_fuse",
    "si_proj",
)


@dataclass
class ModelParams:
    """All learnable arrays, in the fixed order used by optimizer and checkpoints."""

    item_embed: Tensor
    side_pair_embed: Tensor
    w_out: Tensor
    b_out: Tensor
    w_in: Tensor
    b_in: Tensor
    w_update: Tensor
    u_update: Tensor
    w_reset: Tensor
    u_reset: Tensor
    w_cand: Tensor
    u_cand: Tensor
    att_last: Tensor
    att_each: Tensor
    att_bias: Tensor
    att_score: Tensor
    w_fuse: Tensor
    si_proj: Tensor

    def named(self) -> Iterator[tuple[str, Tensor]]:
        for name in PARAM_NAMES:
            yield name, getattr(self, name)

    def zero_grads(self) -> None:
        for _, t in self.named():
            t.zero_grad()

    def copy(self) -> "ModelParams":
        return ModelParams(
            **{name: Tensor(t.data.copy(), requires_grad=True) for name, t in self.named()}
        )


assert PARAM_NAMES == tuple(f.name for f in fields(ModelParams))


def init_params(hyper: HyperParams, catalog: Catalog, seed: int) -> ModelParams:
    """Uniform initialization in [-1/sqrt(dim), +1/sqrt(dim)], fixed per seed."""
    if catalog.item_count < 1:
        raise ValueError("init_params: catalog has no items")
    d = hyper.dim
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(d)

    def u(r: int, c: int) -> Tensor:
        return Tensor(rng.uniform(-bound, bound, size=(r, c)), requires_grad=True)

    return ModelParams(
        item_embed=u(catalog.item_count, d),
        side_pair_embed=u(catalog.n_side_pairs, d),
        w_out=u(d, d),
        b_out=u(1, d),
        w_in=u(d, d),
        b_in=u(1, d),
        w_update=u(2 * d, d),
        u_update=u(d, d),
        w_reset=u(2 * d, d),
        u_reset=u(d, d),
        w_cand=u(2 * d, d),
        u_cand=u(d, d),
        att_last=u(d, d),
        att_each=u(d, d),
        att_bias=u(1, d),
        att_score=u(d, 1),
        w_fuse=u(hyper.fuse_width, d),
        si_proj=u(2 * d, d),
    )


def ggnn_propagate(graph: SessionGraph, params: ModelParams, hyper: HyperParams) -> Tensor:
    """Gated message passing: returns the m x dim node state matrix.

    Per step, each node aggregates outgoing- and incoming-weighted neighbor
    states into a 2*dim message, then applies GRU-style update/reset gates.
    """
    h = gather_rows(params.item_embed, graph.nodes)
    a_out = Tensor(graph.a_out)
    a_in = Tensor(graph.a_in)
    for _ in range(hyper.steps):
        msg = concat_cols(
            add(matmul(matmul(a_out, h), params.w_out), params.b_out),
            add(matmul(matmul(a_in, h), params.w_in), params.b_in),
        )
        z = sigmoid(add(matmul(msg, params.w_update), matmul(h, params.u_update)))
        r = sigmoid(add(matmul(msg, params.w_reset), matmul(h, params.u_reset)))
        cand = tanh(add(matmul(msg, params.w_cand), matmul(hadamard(r, h), params.u_cand)))
        h = add(sub(h, hadamard(z, h)), hadamard(z, cand))
    return h


def adaptive_weights(position_states: Tensor, order_scale: float,
                     include_last: bool = True) -> Tensor:
    """Per-position pooling weights: softmax over cosine-to-last times
    exp(position / order_scale).

    Positions are 1-based over the (already truncated) sequence.  With
    ``include_last`` the final position participates with its identity
    cosine; otherwise weights cover positions 1..n-1 (n = 1 falls back to
    the single position).  Returns a 1 x k row summing to 1.
    """
    n = position_states.rows
    if n < 1:
        raise ValueError("adaptive_weights: need at least one position")
    if order_scale <= 0:
        raise ValueError("adaptive_weights: order_scale must be positive")
    count = n if (include_last or n == 1) else n - 1
    sel = position_states if count == n else gather_rows(position_states, range(count))
    last = gather_rows(position_states, [n - 1] * count)
    cos = cosine_sim_rows(sel, last)
    orders = Tensor(np.exp(np.arange(1, count + 1) / order_scale).reshape(-1, 1))
    return softmax_row(transpose(hadamard(cos, orders)))


@dataclass(frozen=True)
class SessionRepresentation:
    s_local: Tensor
    s_global: Tensor
    s_adaptive: Tensor | None
    s_hybrid: Tensor


@dataclass
class SideDiagnostics:
    n_missing_side: int = 0


SideIndex = tuple[tuple[int, ...], ...]


def catalog_side_index(catalog: Catalog, side: SideInfoTable | None) -> SideIndex:
    """Side pair indices per catalog index; empty tuples where absent."""
    if side is None:
        return tuple(() for _ in range(catalog.item_count))
    return tuple(side.pairs_for(it) for it in catalog.item_ids)


def side_vec(item_index: int, side_index: SideIndex, params: ModelParams,
             dim: int, diag: SideDiagnostics | None = None) -> Tensor:
    """Mean of the item's side-pair embeddings; zeros when no pairs exist."""
    pairs = side_index[item_index] if item_index < len(side_index) else ()
    if not pairs:
        if diag is not None:
            diag.n_missing_side += 1
        return Tensor(np.zeros((1, dim)))
    rows = gather_rows(params.side_pair_embed, pairs)
    return matmul(Tensor(np.full((1, len(pairs)), 1.0 / len(pairs))), rows)


def session_representations(
    graph: SessionGraph,
    node_states: Tensor,
    side_index: SideIndex,
    params: ModelParams,
    hyper: HyperParams,
    diag: SideDiagnostics | None = None,
) -> SessionRepresentation:
    """Pool node states into local / global / adaptive / hybrid vectors."""
    alias = graph.alias
    n = len(alias)
    pos = gather_rows(node_states, alias)
    s_local = gather_rows(node_states, [alias[-1]])

    last_rep = gather_rows(pos, [n - 1] * n)
    act = sigmoid(add(add(matmul(last_rep, params.att_last),
                          matmul(pos, params.att_each)), params.att_bias))
    alpha = matmul(act, params.att_score)
    s_global = matmul(transpose(alpha), pos)

    if hyper.use_msi:
        acc = None
        for slot in alias:
            v = side_vec(graph.nodes[slot], side_index, params, hyper.dim, diag)
            acc = v if acc is None else add(acc, v)
        s_global = add(s_global, scale(acc, 1.0 / n))

    s_adaptive = None
    if hyper.use_adaptive:
        weights = adaptive_weights(pos, hyper.order_scale, hyper.include_last)
        k = weights.cols
        sel = pos if k == n else gather_rows(pos, range(k))
        s_adaptive = matmul(weights, sel)

    if hyper.use_si:
        sv = side_vec(graph.nodes[alias[-1]], side_index, params, hyper.dim, diag)
        s_local = matmul(concat_cols(s_local, sv), params.si_proj)

    parts = [s_local, s_global] + ([s_adaptive] if s_adaptive is not None else [])
    s_hybrid = matmul(concat_cols(*parts), params.w_fuse)
    return SessionRepresentation(s_local, s_global, s_adaptive, s_hybrid)


def score_items(rep: SessionRepresentation, params: ModelParams) -> Tensor:
    """Raw dot-product score of the hybrid vector against every item embedding."""
    return matmul_t(rep.s_hybrid, params.item_embed)


def forward_scores(
    item_indices: Sequence[int],
    side_index: SideIndex,
    params: ModelParams,
    hyper: HyperParams,
    diag: SideDiagnostics | None = None,
) -> tuple[SessionRepresentation, Tensor]:
    """Full forward pass for one session given catalog item indices."""
    graph = build_graph(item_indices)
    states = ggnn_propagate(graph, params, hyper)
    rep = session_representations(graph, states, side_index, params, hyper, diag)
    return rep, score_items(rep, params)


def example_loss(
    item_indices: Sequence[int],
    target_index: int,
    side_index: SideIndex,
    params: ModelParams,
    hyper: HyperParams,
) -> Tensor:
    """Cross-entropy of the softmax-normalized scores against the target item."""
    _, scores = forward_scores(item_indices, side_index, params, hyper)
    return cross_entropy_with_softmax(scores, target_index)
