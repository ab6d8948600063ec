"""Dataset ingestion, chronological splitting, and synthetic generation."""

from sbrec.data.io import (
    LoadError,
    Session,
    SideInfoTable,
    load_item_features,
    load_purchases,
    load_sessions,
)
from sbrec.data.prepare import (
    Catalog,
    Example,
    ExpandStats,
    MODE_NEXT_ITEM,
    MODE_PURCHASE_LABEL,
    build_vocabulary,
    chronological_split,
    expand_examples,
    take_recent_fraction,
    truncate_session,
)
from sbrec.data.synthetic import SyntheticConfig, SyntheticFiles, generate_synthetic

__all__ = [
    "Catalog",
    "Example",
    "ExpandStats",
    "LoadError",
    "MODE_NEXT_ITEM",
    "MODE_PURCHASE_LABEL",
    "Session",
    "SideInfoTable",
    "SyntheticConfig",
    "SyntheticFiles",
    "build_vocabulary",
    "chronological_split",
    "expand_examples",
    "generate_synthetic",
    "load_item_features",
    "load_purchases",
    "load_sessions",
    "take_recent_fraction",
    "truncate_session",
]
