"""Pydantic request/response models for the HTTP service.

Field names and defaults mirror the flat run-config keys, so a request body
is exactly a set of config overrides.  Unknown fields are rejected.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from sbrec.config import DEFAULTS


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class HealthResponse(_StrictModel):
    status: Literal["ok"]
    model_loaded: bool


class SynthRequest(_StrictModel):
    output_dir: str
    seed: int = DEFAULTS["seed"]
    item_count: int = DEFAULTS["item_count"]
    block_count: int = DEFAULTS["block_count"]
    session_count: int = DEFAULTS["session_count"]
    day_count: int = DEFAULTS["day_count"]
    mean_session_length: float = DEFAULTS["mean_session_length"]
    concentration: float = DEFAULTS["concentration"]
    noise_categories: int = DEFAULTS["noise_categories"]
    windowed_block: int = DEFAULTS["windowed_block"]
    window_start: float = DEFAULTS["window_start"]
    window_end: float = DEFAULTS["window_end"]


class SynthResponse(_StrictModel):
    sessions_path: str
    purchases_path: str
    features_path: str
    manifest_path: str


class _PipelineFields(_StrictModel):
    sessions_path: str = DEFAULTS["sessions_path"]
    purchases_path: str = DEFAULTS["purchases_path"]
    features_path: str = DEFAULTS["features_path"]
    output_dir: str = DEFAULTS["output_dir"]
    checkpoint: str = DEFAULTS["checkpoint"]
    k: int = DEFAULTS["k"]
    mode: Literal["purchase-label", "next-item"] = DEFAULTS["mode"]
    p: int = DEFAULTS["p"]
    dim: int = DEFAULTS["dim"]
    steps: int = DEFAULTS["steps"]
    t: float = DEFAULTS["t"]
    variant: str = DEFAULTS["variant"]
    include_last: bool = DEFAULTS["include_last"]
    top_k: int = DEFAULTS["top_k"]
    seed: int = DEFAULTS["seed"]


class TrainRequest(_PipelineFields):
    epochs: int = DEFAULTS["epochs"]
    batch_size: int = DEFAULTS["batch_size"]
    learning_rate: float = DEFAULTS["learning_rate"]
    lr_decay_factor: float = DEFAULTS["lr_decay_factor"]
    lr_decay_every: int = DEFAULTS["lr_decay_every"]
    l2: float = DEFAULTS["l2"]
    patience: int = DEFAULTS["patience"]


class TrainResponse(_StrictModel):
    checkpoint_path: str
    log_path: str
    config_path: str
    catalog_path: str
    epochs_run: int
    best_epoch: int
    stopped_early: bool
    final_loss: float
    val_recall20: float | None
    val_mrr20: float | None
    n_train_examples: int
    n_val_examples: int
    stats: dict[str, Any]


class EvalRequest(_PipelineFields):
    pass


class SegmentRow(_StrictModel):
    segment: str
    n: int
    recall: float
    mrr: float


class EvalResponse(_StrictModel):
    k: int
    n_examples: int
    n_unscoreable: int
    segments: list[SegmentRow]
    table_path: str
    csv_path: str


class SweepRequest(TrainRequest):
    t_list: list[float] = Field(min_length=1)
    p_list: list[int] = Field(min_length=1)
    k_list: list[int] = Field(min_length=1)
    sweep_parallel: int = DEFAULTS["sweep_parallel"]


class SweepRow(_StrictModel):
    k: int
    t: float
    p: int
    variant: str
    recall: str
    mrr: str
    error: str


class SweepResponse(_StrictModel):
    rows: list[SweepRow]
    grid_path: str


class LoadModelRequest(_StrictModel):
    checkpoint: str
    catalog: str = ""   # empty: catalog.json next to the checkpoint


class ModelInfoResponse(_StrictModel):
    checkpoint: str
    dim: int
    steps: int
    order_scale: float
    max_len: int
    use_adaptive: bool
    use_si: bool
    use_msi: bool
    include_last: bool
    n_items: int


class RecommendRequest(_StrictModel):
    items: list[int] = Field(min_length=1)
    top_k: int = DEFAULTS["top_k"]


class ScoredItem(_StrictModel):
    item_id: int
    score: float


class RecommendResponse(_StrictModel):
    items: list[ScoredItem]
