import json

import pytest

from iqseval import (
    AnnotationRecord,
    DataError,
    EQUAL_WEIGHTS,
    IQSWeights,
    MethodScorecard,
    UsageError,
    agreement_rate,
    per_criterion_averages,
    rank_methods,
    render,
)
from iqseval.report import RankingRow, TableDoc
from test_types import make_classification_task, make_regression_task


def card(method, task="t", p=0.5, s=0.6, r=0.7, weights=EQUAL_WEIGHTS):
    iqs = weights.alpha1 * p + weights.alpha2 * s + weights.alpha3 * r
    return MethodScorecard(method, task, p, s, r, iqs, weights, 10, 3)


class TestRanking:
    def test_sorted_by_iqs_descending(self):
        table = rank_methods([card("low", p=0.1), card("high", p=0.9), card("mid", p=0.5)])
        assert [r.method_id for r in table.rows] == ["high", "mid", "low"]
        assert [r.rank for r in table.rows] == [1, 2, 3]

    def test_ties_break_by_method_id(self):
        table = rank_methods([card("zeta"), card("alpha")])
        assert [r.method_id for r in table.rows] == ["alpha", "zeta"]

    def test_contributions_sum_to_iqs(self):
        table = rank_methods([card("m", p=0.31, s=0.62, r=0.94)])
        row = table.rows[0]
        total = (
            row.weighted_plausibility + row.weighted_simplicity + row.weighted_reproducibility
        )
        assert abs(total - row.iqs) <= 1e-9

    def test_row_invariant_enforced_at_construction(self):
        with pytest.raises(DataError):
            RankingRow(1, "m", 0.1, 0.1, 0.1, 0.9)

    def test_mixed_tasks_rejected(self):
        with pytest.raises(UsageError):
            rank_methods([card("a", task="t1"), card("b", task="t2")])

    def test_mixed_weights_rejected(self):
        other = IQSWeights(0.5, 0.25, 0.25)
        with pytest.raises(UsageError):
            rank_methods([card("a"), card("b", weights=other)])

    def test_duplicate_method_rejected(self):
        with pytest.raises(UsageError):
            rank_methods([card("a"), card("a")])

    def test_empty_rejected(self):
        with pytest.raises(UsageError):
            rank_methods([])


class TestAgreement:
    task = make_classification_task()

    def annotations(self):
        return [
            AnnotationRecord("s1", "m", "a1", "positive"),
            AnnotationRecord("s1", "m", "a2", "positive"),
            AnnotationRecord("s1", "m", "a3", "negative"),
            AnnotationRecord("s2", "m", "a1", "positive"),
            AnnotationRecord("s2", "m", "a2", "positive"),
            AnnotationRecord("s3", "m", "a1", "positive"),  # lone response
        ]

    def test_hand_computed_rates(self):
        report = agreement_rate(self.annotations(), self.task)
        # s1: 2 of 3 pairs disagree -> 1/3; s2: unanimous -> 1
        assert report.n_groups == 2
        assert report.unanimous_agreement == 0.5
        assert report.pairwise_agreement == (1 / 3 + 1.0) / 2
        assert report.excluded == (("s3", "m"),)

    def test_pairwise_at_least_unanimous(self):
        report = agreement_rate(self.annotations(), self.task)
        assert report.unanimous_agreement <= report.pairwise_agreement <= 1.0

    def test_regression_answers_binarized_at_threshold(self):
        task = make_regression_task(threshold=2.5)
        annotations = [
            AnnotationRecord("s1", "m", "a1", 3.0),
            AnnotationRecord("s1", "m", "a2", 1.0),
            AnnotationRecord("s2", "m", "a1", 4.0),
            AnnotationRecord("s2", "m", "a2", 2.5),  # at threshold counts as up
        ]
        report = agreement_rate(annotations, task)
        assert report.unanimous_agreement == 0.5
        assert report.pairwise_agreement == 0.5

    def test_regression_without_threshold_rejected(self):
        task = make_regression_task()
        with pytest.raises(UsageError):
            agreement_rate([AnnotationRecord("s1", "m", "a1", 3.0)] * 2, task)

    def test_all_groups_excluded_rejected(self):
        with pytest.raises(UsageError):
            agreement_rate([AnnotationRecord("s1", "m", "a1", "positive")], self.task)


class TestCriterionAverages:
    def cards(self):
        return [
            card("m1", task="t1", p=0.2, s=0.4, r=0.6),
            card("m1", task="t2", p=0.4, s=0.6, r=0.8),
            card("m2", task="t1", p=0.1, s=0.1, r=0.1),
            card("m2", task="t2", p=0.3, s=0.3, r=0.3),
        ]

    def test_means_per_method(self):
        out = per_criterion_averages(self.cards())
        assert out.task_ids == ("t1", "t2")
        by_method = {r.method_id: r for r in out.rows}
        assert by_method["m1"].plausibility == (0.2 + 0.4) / 2
        assert by_method["m1"].simplicity == (0.4 + 0.6) / 2
        assert by_method["m2"].reproducibility == (0.1 + 0.3) / 2
        assert by_method["m1"].n_tasks == 2

    def test_rows_sorted_by_mean_iqs(self):
        out = per_criterion_averages(self.cards())
        assert [r.method_id for r in out.rows] == ["m1", "m2"]

    def test_uneven_task_sets_rejected(self):
        with pytest.raises(UsageError):
            per_criterion_averages(self.cards()[:3])

    def test_duplicate_scorecard_rejected(self):
        cards = self.cards() + [card("m1", task="t1")]
        with pytest.raises(UsageError):
            per_criterion_averages(cards)


class TestRender:
    def table(self):
        return rank_methods([card("m1", p=0.9), card("m2", p=0.1)])

    def test_tsv_rounds_to_four_decimals(self):
        out = render(self.table(), "tsv")
        lines = out.splitlines()
        assert lines[0].split("\t") == [
            "rank",
            "method",
            "plausibility",
            "simplicity",
            "reproducibility",
            "iqs",
        ]
        assert lines[1].split("\t")[2] == "0.3000"

    def test_markdown_has_header_rule(self):
        out = render(self.table(), "markdown")
        assert out.splitlines()[0].startswith("## ")
        assert "| --- |" in out

    def test_json_doc_keeps_full_precision(self):
        table = rank_methods([card("m", p=0.123456789)])
        doc = json.loads(render(table, "json_doc"))
        assert doc["rows"][0]["weighted_plausibility"] == (1 / 3) * 0.123456789

    def test_unknown_format_rejected(self):
        with pytest.raises(UsageError):
            render(self.table(), "yaml")

    def test_plain_tabledoc_renders(self):
        doc = TableDoc(title="x", columns=("a", "b"), rows=((1, 0.5), (2, None)))
        out = render(doc, "tsv")
        assert out == "a\tb\n1\t0.5000\n2\t\n"
