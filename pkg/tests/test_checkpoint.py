import numpy as np
import pytest

from sbrec.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from sbrec.model import HyperParams, init_params

from conftest import make_catalog


@pytest.fixture
def setup(tmp_path):
    catalog = make_catalog(15, n_side_pairs=4)
    hyper = HyperParams(dim=6, steps=2, order_scale=3.5, max_len=8,
                        use_adaptive=True, use_si=True)
    params = init_params(hyper, catalog, seed=17)
    path = tmp_path / "model.bin"
    save_checkpoint(params, hyper, catalog, path)
    return catalog, hyper, params, path


class TestRoundTrip:
    def test_bit_exact(self, setup):
        catalog, hyper, params, path = setup
        loaded_params, loaded_hyper = load_checkpoint(path, catalog)
        assert loaded_hyper == hyper
        for (name, orig), (_, restored) in zip(params.named(), loaded_params.named()):
            assert np.array_equal(orig.data, restored.data), name
            assert restored.requires_grad

    def test_flags_survive(self, tmp_path):
        catalog = make_catalog(5)
        hyper = HyperParams(dim=3, use_msi=True, include_last=False)
        params = init_params(hyper, catalog, seed=1)
        path = tmp_path / "m.bin"
        save_checkpoint(params, hyper, catalog, path)
        _, loaded = load_checkpoint(path, catalog)
        assert loaded.use_msi and not loaded.use_adaptive and not loaded.include_last


class TestRejection:
    def test_truncated_file(self, setup):
        catalog, _, _, path = setup
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) - 13])
        with pytest.raises(CheckpointError, match="truncated"):
            load_checkpoint(path, catalog)

    def test_trailing_garbage(self, setup):
        catalog, _, _, path = setup
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(CheckpointError, match="trailing"):
            load_checkpoint(path, catalog)

    def test_wrong_magic(self, setup):
        catalog, _, _, path = setup
        blob = bytearray(path.read_bytes())
        blob[:4] = b"NOPE"
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError, match="not a checkpoint"):
            load_checkpoint(path, catalog)

    def test_wrong_version(self, setup):
        catalog, _, _, path = setup
        blob = bytearray(path.read_bytes())
        blob[4] = 99
        path.write_bytes(bytes(blob))
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(path, catalog)

    def test_different_catalog_refused(self, setup):
        _, _, _, path = setup
        other = make_catalog(16, n_side_pairs=4)
        with pytest.raises(CheckpointError, match="different catalog"):
            load_checkpoint(path, other)

    def test_different_side_universe_refused(self, setup):
        _, _, _, path = setup
        other = make_catalog(15, n_side_pairs=5)
        with pytest.raises(CheckpointError, match="different catalog"):
            load_checkpoint(path, other)
