import pytest

from sbrec.data.prepare import Catalog
from sbrec.data.synthetic import SyntheticConfig, generate_synthetic


def make_catalog(n_items: int, n_side_pairs: int = 0, trained_until: int | None = None) -> Catalog:
    """Catalog over item ids 1..n_items; items past trained_until are untrained."""
    cutoff = n_items if trained_until is None else trained_until
    return Catalog(
        item_ids=tuple(range(1, n_items + 1)),
        trained_mask=tuple(i < cutoff for i in range(n_items)),
        n_side_pairs=n_side_pairs,
    )


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory):
    """A small deterministic synthetic dataset shared across tests."""
    out = tmp_path_factory.mktemp("synth")
    cfg = SyntheticConfig(
        item_count=40,
        block_count=4,
        session_count=400,
        day_count=10,
        mean_session_length=4.0,
        concentration=0.9,
        noise_categories=2,
    )
    generate_synthetic(cfg, seed=11, out_dir=out)
    return out
