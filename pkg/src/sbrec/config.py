"""Flat run configuration: documented defaults, JSON config file, overrides.

Every key has a default; unknown keys are rejected.  Values from a config
file override the defaults and explicit overrides (CLI flags, service
request fields) win over the file.  The fully resolved mapping is persisted
next to the run outputs so every artifact records its provenance.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from sbrec.data.prepare import MODE_NEXT_ITEM, MODE_PURCHASE_LABEL
from sbrec.data.synthetic import SyntheticConfig
from sbrec.model import HyperParams
from sbrec.training import TrainConfig


class ConfigError(ValueError):
    """Unknown key, unparseable value, or invalid combination."""


DEFAULTS: dict[str, Any] = {
    # data files and artifacts
    "sessions_path": "train_sessions.csv",
    "purchases_path": "train_purchases.csv",
    "features_path": "item_features.csv",
    "output_dir": "run_out",
    "checkpoint": "",            # empty: <output_dir>/checkpoint.bin
    # pipeline
    "k": 1,                      # recency fraction divisor
    "mode": MODE_PURCHASE_LABEL,
    "p": 10,                     # session suffix length kept
    # model
    "dim": 100,
    "steps": 1,
    "t": 4.0,                    # order scale of the adaptive weights
    "variant": "base",           # comma-separated tokens: base | aw | si | msi
    "include_last": True,
    # training
    "epochs": 10,
    "batch_size": 10,
    "learning_rate": 1e-2,
    "lr_decay_factor": 0.1,
    "lr_decay_every": 3,
    "l2": 1e-5,
    "patience": 3,
    "seed": 42,
    # evaluation
    "top_k": 20,
    # sweep
    "sweep_parallel": 1,
    # synthetic generator
    "item_count": 200,
    "block_count": 10,
    "session_count": 3000,
    "day_count": 30,
    "mean_session_length": 5.0,
    "concentration": 0.9,
    "noise_categories": 3,
    "windowed_block": -1,
    "window_start": 0.0,
    "window_end": 1.0,
}

VARIANT_TOKENS = ("base", "aw", "si", "msi")


def _coerce(key: str, value: Any) -> Any:
    """Cast a raw (possibly string) value to the type of the default."""
    default = DEFAULTS[key]
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        text = str(value).strip().lower()
        if text in ("true", "1", "yes"):
            return True
        if text in ("false", "0", "no"):
            return False
        raise ConfigError(f"config key {key!r}: expected a boolean, got {value!r}")
    if isinstance(default, int):
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"config key {key!r}: expected an integer, got {value!r}") from None
    if isinstance(default, float):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"config key {key!r}: expected a number, got {value!r}") from None
    return str(value)


def parse_variant(variant: str) -> tuple[bool, bool, bool]:
    """Map the variant token list to (use_adaptive, use_si, use_msi)."""
    tokens = [tok.strip() for tok in str(variant).split(",") if tok.strip()]
    if not tokens:
        raise ConfigError("config key 'variant': empty value")
    for tok in tokens:
        if tok not in VARIANT_TOKENS:
            raise ConfigError(f"config key 'variant': unknown token {tok!r}")
    if "base" in tokens and len(tokens) > 1:
        raise ConfigError("config key 'variant': 'base' cannot be combined with other tokens")
    return "aw" in tokens, "si" in tokens, "msi" in tokens


def resolve_config(config_file=None, overrides: dict[str, Any] | None = None) -> dict[str, Any]:
    """Merge defaults <- config file <- overrides, validating every key."""
    resolved = dict(DEFAULTS)
    if config_file:
        path = Path(config_file)
        try:
            loaded = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a flat JSON object")
        for key, value in loaded.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key: {key!r}")
            resolved[key] = _coerce(key, value)
    for key, value in (overrides or {}).items():
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key: {key!r}")
        resolved[key] = _coerce(key, value)

    if resolved["mode"] not in (MODE_PURCHASE_LABEL, MODE_NEXT_ITEM):
        raise ConfigError(f"config key 'mode': must be '{MODE_PURCHASE_LABEL}' or '{MODE_NEXT_ITEM}'")
    parse_variant(resolved["variant"])
    if resolved["k"] < 1:
        raise ConfigError("config key 'k': must be >= 1")
    if resolved["top_k"] < 1:
        raise ConfigError("config key 'top_k': must be >= 1")
    return resolved


def hyper_from_config(cfg: dict[str, Any]) -> HyperParams:
    use_adaptive, use_si, use_msi = parse_variant(cfg["variant"])
    return HyperParams(
        dim=cfg["dim"],
        steps=cfg["steps"],
        order_scale=cfg["t"],
        max_len=cfg["p"],
        use_adaptive=use_adaptive,
        use_si=use_si,
        use_msi=use_msi,
        include_last=cfg["include_last"],
    )


def train_config_from(cfg: dict[str, Any]) -> TrainConfig:
    return TrainConfig(
        epochs=cfg["epochs"],
        batch_size=cfg["batch_size"],
        learning_rate=cfg["learning_rate"],
        lr_decay_factor=cfg["lr_decay_factor"],
        lr_decay_every=cfg["lr_decay_every"],
        l2=cfg["l2"],
        patience=cfg["patience"],
        seed=cfg["seed"],
    )


def synth_config_from(cfg: dict[str, Any]) -> SyntheticConfig:
    return SyntheticConfig(
        item_count=cfg["item_count"],
        block_count=cfg["block_count"],
        session_count=cfg["session_count"],
        day_count=cfg["day_count"],
        mean_session_length=cfg["mean_session_length"],
        concentration=cfg["concentration"],
        noise_categories=cfg["noise_categories"],
        windowed_block=cfg["windowed_block"],
        window_start=cfg["window_start"],
        window_end=cfg["window_end"],
    )


def checkpoint_path(cfg: dict[str, Any]) -> Path:
    if cfg["checkpoint"]:
        return Path(cfg["checkpoint"])
    return Path(cfg["output_dir"]) / "checkpoint.bin"


def write_resolved(cfg: dict[str, Any], out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "config.json"
    path.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    return path
