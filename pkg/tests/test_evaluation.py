import numpy as np
import pytest

from sbrec.data.prepare import Example
from sbrec.evaluation import (
    SEGMENT_ALL,
    SEGMENT_COLD,
    SEGMENT_SEEN,
    EvalReport,
    evaluate,
    rank_of_target,
)
from sbrec.model import HyperParams, init_params

from conftest import make_catalog


def oracle_rank(scores, target):
    """Full sort oracle: descending score, ascending index, find the target."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return order.index(target) + 1


class TestRankOfTarget:
    def test_unique_max_is_rank_one(self):
        scores = np.array([0.1, 5.0, 0.3])
        assert rank_of_target(scores, 1) == 1

    def test_all_equal_breaks_ties_by_index(self):
        scores = np.zeros(50)
        assert rank_of_target(scores, 0) == 1
        assert rank_of_target(scores, 30) == 31

    def test_matches_sort_oracle_with_ties(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            scores = rng.integers(0, 5, size=50).astype(float) / 4.0
            target = int(rng.integers(0, 50))
            assert rank_of_target(scores, target) == oracle_rank(list(scores), target)

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            scores = rng.normal(size=40)
            target = int(rng.integers(0, 40))
            base = rank_of_target(scores, target)
            assert rank_of_target(2.0 * scores + 7.0, target) == base


def one_example_report(rank_score_vector, target_id, catalog, params, hyper):
    # convenience: a single-example evaluation through the real forward pass
    example = Example((1,), target_id, session_id=0)
    return evaluate(params, [example], catalog, None, hyper)


class TestEvaluate:
    @pytest.fixture
    def trained_setup(self):
        catalog = make_catalog(30, trained_until=20)  # items 21..30 untrained
        hyper = HyperParams(dim=4)
        params = init_params(hyper, catalog, seed=5)
        return catalog, hyper, params

    def test_rank_one_scores_perfectly(self, trained_setup):
        catalog, hyper, params = trained_setup
        # pick the model's own top item as target so rank is 1
        from sbrec.model import catalog_side_index, forward_scores
        _, scores = forward_scores([0, 1], catalog_side_index(catalog, None), params, hyper)
        best = int(np.argmax(scores.data[0]))
        example = Example((1, 2), catalog.item_ids[best], 0)
        report = evaluate(params, [example], catalog, None, hyper)
        assert report.recall_at_k == 1.0
        assert report.mrr_at_k == 1.0

    def test_rank_beyond_k_scores_zero(self, trained_setup):
        catalog, hyper, params = trained_setup
        from sbrec.model import catalog_side_index, forward_scores
        _, scores = forward_scores([0, 1], catalog_side_index(catalog, None), params, hyper)
        worst = int(np.argmin(scores.data[0]))
        example = Example((1, 2), catalog.item_ids[worst], 0)
        report = evaluate(params, [example], catalog, None, hyper, k=20)
        assert report.recall_at_k == 0.0
        assert report.mrr_at_k == 0.0

    def test_metric_arithmetic(self):
        # two examples at ranks 2 and 40 give recall 0.5 and mrr 0.25
        report = EvalReport
        from sbrec.evaluation import _Accumulator
        acc = _Accumulator()
        acc.add(2, 20)
        acc.add(40, 20)
        seg = acc.metrics("all")
        assert seg.recall == pytest.approx(0.5)
        assert seg.mrr == pytest.approx(0.25)

    def test_unscoreable_targets_count_as_misses(self, trained_setup):
        catalog, hyper, params = trained_setup
        examples = [
            Example((1, 2), 31337, 0),       # target outside the catalog
            Example((99999,), 5, 1),         # input entirely unknown
        ]
        report = evaluate(params, examples, catalog, None, hyper)
        assert report.n_unscoreable == 2
        assert report.recall_at_k == 0.0
        assert report.segment(SEGMENT_ALL).n == 2

    def test_segment_decomposition(self, trained_setup):
        catalog, hyper, params = trained_setup
        rng = np.random.default_rng(7)
        examples = []
        for i in range(40):
            items = tuple(int(x) for x in rng.integers(1, 31, size=3))
            target = int(rng.integers(1, 31)) if i % 5 else 99999
            examples.append(Example(items, target, i))
        report = evaluate(params, examples, catalog, None, hyper)
        seen = report.segment(SEGMENT_SEEN)
        cold = report.segment(SEGMENT_COLD)
        overall = report.segment(SEGMENT_ALL)
        assert seen.n + cold.n + report.n_unscoreable == overall.n == 40
        np.testing.assert_allclose(
            overall.recall * overall.n, seen.recall * seen.n + cold.recall * cold.n,
            atol=1e-12,
        )
        np.testing.assert_allclose(
            overall.mrr * overall.n, seen.mrr * seen.n + cold.mrr * cold.n,
            atol=1e-12,
        )

    def test_mrr_never_exceeds_recall(self, trained_setup):
        catalog, hyper, params = trained_setup
        rng = np.random.default_rng(8)
        examples = [
            Example(tuple(int(x) for x in rng.integers(1, 31, size=2)),
                    int(rng.integers(1, 31)), i)
            for i in range(60)
        ]
        report = evaluate(params, examples, catalog, None, hyper)
        for seg in report.segments:
            assert 0.0 <= seg.mrr <= seg.recall <= 1.0

    def test_cold_segment_uses_trained_mask(self, trained_setup):
        catalog, hyper, params = trained_setup
        examples = [Example((1, 2), 25, 0)]  # item 25 is untrained
        report = evaluate(params, examples, catalog, None, hyper)
        assert report.segment(SEGMENT_COLD).n == 1
        assert report.segment(SEGMENT_SEEN).n == 0

    def test_empty_test_set_rejected(self, trained_setup):
        catalog, hyper, params = trained_setup
        with pytest.raises(ValueError, match="empty test set"):
            evaluate(params, [], catalog, None, hyper)

    def test_csv_rows_shape(self, trained_setup):
        catalog, hyper, params = trained_setup
        report = evaluate(params, [Example((1,), 2, 0)], catalog, None, hyper)
        rows = report.csv_rows()
        assert rows[0] == ["segment", "n", "recall20", "mrr20"]
        assert [r[0] for r in rows[1:]] == [SEGMENT_ALL, SEGMENT_SEEN, SEGMENT_COLD]
