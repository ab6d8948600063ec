import hashlib

import pytest

from sbrec.data.io import load_item_features, load_purchases, load_sessions
from sbrec.data.synthetic import SyntheticConfig, generate_synthetic


def file_hashes(files):
    return [
        hashlib.sha256(p.read_bytes()).hexdigest()
        for p in (files.sessions_path, files.purchases_path, files.features_path)
    ]


class TestDeterminism:
    def test_same_seed_byte_identical(self, tmp_path):
        cfg = SyntheticConfig(item_count=30, block_count=3, session_count=120, day_count=6)
        first = generate_synthetic(cfg, seed=5, out_dir=tmp_path / "a")
        second = generate_synthetic(cfg, seed=5, out_dir=tmp_path / "b")
        assert file_hashes(first) == file_hashes(second)

    def test_different_seed_differs(self, tmp_path):
        cfg = SyntheticConfig(item_count=30, block_count=3, session_count=120, day_count=6)
        first = generate_synthetic(cfg, seed=5, out_dir=tmp_path / "a")
        second = generate_synthetic(cfg, seed=6, out_dir=tmp_path / "b")
        assert file_hashes(first) != file_hashes(second)


class TestStructure:
    def test_intra_block_transition_mass(self, tmp_path):
        # oracle: tally consecutive view pairs from the generated file and
        # measure the same-block fraction
        cfg = SyntheticConfig(item_count=200, block_count=10, session_count=800,
                              day_count=8, mean_session_length=6.0, concentration=0.9)
        files = generate_synthetic(cfg, seed=7, out_dir=tmp_path)
        block_of = {item: (item - 1) // 20 for item in range(1, 201)}
        same = total = 0
        for session in load_sessions(files.sessions_path):
            for u, v in zip(session.items, session.items[1:]):
                total += 1
                same += block_of[u] == block_of[v]
        assert total > 1000
        assert same / total >= cfg.concentration

    def test_items_per_block_even(self):
        cfg = SyntheticConfig(item_count=200, block_count=10, session_count=10, day_count=2)
        # contiguous 1-based ids, 20 per block
        from sbrec.data.synthetic import _block_slices
        slices = _block_slices(cfg.item_count, cfg.block_count)
        assert all(len(s) == 20 for s in slices)

    def test_final_day_session_count(self, tmp_path):
        # oracle: bucket generated sessions by UTC day of their end time
        cfg = SyntheticConfig(item_count=50, block_count=5, session_count=3000, day_count=30)
        files = generate_synthetic(cfg, seed=9, out_dir=tmp_path)
        sessions = load_sessions(files.sessions_path)
        assert len(sessions) == 3000
        days = [s.end_time // 86_400_000 for s in sessions]
        last = max(days)
        assert sum(1 for d in days if d == last) == 100

    def test_round_trip_preserves_order_and_universe(self, tmp_path):
        cfg = SyntheticConfig(item_count=40, block_count=4, session_count=150, day_count=5)
        files = generate_synthetic(cfg, seed=13, out_dir=tmp_path)
        sessions = load_sessions(files.sessions_path)
        purchases = load_purchases(files.purchases_path)
        side = load_item_features(files.features_path)
        assert len(sessions) == 150
        assert len(purchases) == 150
        assert set(side.items()) == set(range(1, 41))
        for s in sessions:
            times = [ts for _, ts in s.events]
            assert times == sorted(times)
            assert s.session_id in purchases

    def test_every_item_has_block_feature(self, tmp_path):
        cfg = SyntheticConfig(item_count=25, block_count=5, session_count=40,
                              day_count=2, noise_categories=0)
        files = generate_synthetic(cfg, seed=3, out_dir=tmp_path)
        side = load_item_features(files.features_path)
        assert all(len(side.pairs_for(item)) >= 1 for item in range(1, 26))
        assert side.n_pairs == 5  # one block-id pair per block


class TestAvailabilityWindow:
    def test_early_window_block_absent_later(self, tmp_path):
        cfg = SyntheticConfig(item_count=40, block_count=4, session_count=400, day_count=8,
                              windowed_block=0, window_start=0.0, window_end=0.25)
        files = generate_synthetic(cfg, seed=21, out_dir=tmp_path)
        sessions = load_sessions(files.sessions_path)
        purchases = load_purchases(files.purchases_path)
        block0 = set(range(1, 11))
        for s in sessions:
            touched = set(s.items) | {purchases[s.session_id][0]}
            if s.session_id > 100:  # outside the first quarter of the stream
                assert not (touched & block0)

    def test_late_window_block_absent_earlier(self, tmp_path):
        cfg = SyntheticConfig(item_count=40, block_count=4, session_count=400, day_count=8,
                              windowed_block=3, window_start=0.9, window_end=1.0)
        files = generate_synthetic(cfg, seed=22, out_dir=tmp_path)
        sessions = load_sessions(files.sessions_path)
        block3 = set(range(31, 41))
        seen_late = False
        for s in sessions:
            if s.session_id <= 360:
                assert not (set(s.items) & block3)
            else:
                seen_late = seen_late or bool(set(s.items) & block3)
        assert seen_late

    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError, match="block_count"):
            SyntheticConfig(item_count=10, block_count=0, session_count=10, day_count=2)
        with pytest.raises(ValueError, match="item_count"):
            SyntheticConfig(item_count=0, block_count=1, session_count=10, day_count=2)
        with pytest.raises(ValueError, match="windowed_block"):
            SyntheticConfig(item_count=10, block_count=2, session_count=10,
                            day_count=2, windowed_block=5)
