import json

import pytest

from sbrec.config import (
    ConfigError,
    DEFAULTS,
    hyper_from_config,
    parse_variant,
    resolve_config,
    synth_config_from,
    train_config_from,
    write_resolved,
)


class TestResolution:
    def test_defaults_pass_validation(self):
        cfg = resolve_config()
        assert cfg == DEFAULTS

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config key: 'sessionz'"):
            resolve_config(None, {"sessionz": "x.csv"})

    def test_unknown_file_key_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"bogus": 1}))
        with pytest.raises(ConfigError, match="unknown config key"):
            resolve_config(path)

    def test_overrides_beat_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"k": 8, "dim": 16}))
        cfg = resolve_config(path, {"k": 64})
        assert cfg["k"] == 64
        assert cfg["dim"] == 16

    def test_string_values_coerced(self):
        cfg = resolve_config(None, {"k": "4", "t": "2.5", "include_last": "false"})
        assert cfg["k"] == 4 and cfg["t"] == 2.5 and cfg["include_last"] is False

    def test_bad_coercion_names_key(self):
        with pytest.raises(ConfigError, match="'k'"):
            resolve_config(None, {"k": "sixty-four"})

    def test_bad_mode_rejected(self):
        with pytest.raises(ConfigError, match="mode"):
            resolve_config(None, {"mode": "oracle"})

    def test_resolved_config_persisted(self, tmp_path):
        cfg = resolve_config(None, {"output_dir": str(tmp_path)})
        path = write_resolved(cfg, tmp_path)
        assert json.loads(path.read_text()) == cfg


class TestVariant:
    def test_base(self):
        assert parse_variant("base") == (False, False, False)

    def test_aw(self):
        assert parse_variant("aw") == (True, False, False)

    def test_si_msi_combined(self):
        assert parse_variant("si,msi") == (False, True, True)

    def test_all_three(self):
        assert parse_variant("aw,si,msi") == (True, True, True)

    def test_unknown_token(self):
        with pytest.raises(ConfigError, match="unknown token"):
            parse_variant("aw,tagnn")

    def test_base_cannot_combine(self):
        with pytest.raises(ConfigError, match="base"):
            parse_variant("base,aw")


class TestDerivedConfigs:
    def test_hyper_mapping(self):
        cfg = resolve_config(None, {"dim": 32, "steps": 2, "t": 3.0, "p": 5,
                                    "variant": "aw,msi", "include_last": False})
        hyper = hyper_from_config(cfg)
        assert hyper.dim == 32 and hyper.steps == 2
        assert hyper.order_scale == 3.0 and hyper.max_len == 5
        assert hyper.use_adaptive and hyper.use_msi and not hyper.use_si
        assert not hyper.include_last

    def test_train_mapping(self):
        cfg = resolve_config(None, {"epochs": 5, "batch_size": 17, "l2": 0.5})
        tc = train_config_from(cfg)
        assert tc.epochs == 5 and tc.batch_size == 17 and tc.l2 == 0.5

    def test_synth_mapping(self):
        cfg = resolve_config(None, {"item_count": 60, "block_count": 6,
                                    "windowed_block": 2, "window_end": 0.5})
        sc = synth_config_from(cfg)
        assert sc.item_count == 60 and sc.windowed_block == 2
        assert sc.window_end == 0.5
