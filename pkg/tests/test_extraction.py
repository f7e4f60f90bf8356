import pytest

from iqseval import (
    AttributionExplanation,
    ConfigError,
    ExtractionPolicy,
    PolicyMode,
    StructuralError,
    count_chunks,
    extract_feature_sets,
)
from test_types import make_classification_task, make_regression_task


def expl(attrs, sid="s", mid="m", out=0.7):
    return AttributionExplanation(sid, mid, tuple(attrs), out)


TASK = make_classification_task()


class TestRelativeThreshold:
    def test_cut_is_fraction_of_peak(self):
        # peak 1.0, cut 0.5: keeps 1.0, -0.5 (tie at cut included), drops 0.49
        policy = ExtractionPolicy("relative_threshold", 0.5)
        sets = extract_feature_sets(expl([1.0, -0.5, 0.49]), TASK, policy)
        assert sets["positive"] == {0}
        assert sets["negative"] == {1}

    def test_zero_peak_gives_empty_sets(self):
        policy = ExtractionPolicy("relative_threshold", 0.05)
        sets = extract_feature_sets(expl([0.0, 0.0]), TASK, policy)
        assert sets["positive"] == frozenset()
        assert sets["negative"] == frozenset()

    def test_zero_attribution_never_selected_even_at_cut_zero(self):
        policy = ExtractionPolicy("relative_threshold", 0.0)
        sets = extract_feature_sets(expl([0.3, 0.0, -0.1]), TASK, policy)
        assert sets.all_indices == {0, 2}

    def test_every_class_present_even_when_empty(self):
        policy = ExtractionPolicy("relative_threshold", 0.05)
        sets = extract_feature_sets(expl([0.2, 0.4]), TASK, policy)
        assert set(sets.classes) == {"negative", "positive"}
        assert sets["negative"] == frozenset()


class TestAbsoluteThreshold:
    def test_cut_in_attribution_units(self):
        policy = ExtractionPolicy("absolute_threshold", 0.3)
        sets = extract_feature_sets(expl([0.3, -0.31, 0.29]), TASK, policy)
        assert sets.all_indices == {0, 1}

    def test_zero_still_excluded(self):
        policy = ExtractionPolicy("absolute_threshold", 0.0)
        sets = extract_feature_sets(expl([0.0, 0.1]), TASK, policy)
        assert sets.all_indices == {1}


class TestTopK:
    def test_takes_largest_magnitudes(self):
        policy = ExtractionPolicy("top_k", 2)
        sets = extract_feature_sets(expl([0.1, -0.9, 0.5, 0.2]), TASK, policy)
        assert sets.all_indices == {1, 2}

    def test_ties_break_toward_lower_index(self):
        policy = ExtractionPolicy("top_k", 1)
        sets = extract_feature_sets(expl([-0.5, 0.5]), TASK, policy)
        assert sets.all_indices == {0}

    def test_k_larger_than_nonzero_count(self):
        policy = ExtractionPolicy("top_k", 10)
        sets = extract_feature_sets(expl([0.1, 0.0, -0.2]), TASK, policy)
        assert sets.all_indices == {0, 2}


def test_sign_routes_to_mapped_class():
    # regression pseudo-classes: positive attributions into "up"
    task = make_regression_task()
    sets = extract_feature_sets(expl([0.9, -0.8]), task, ExtractionPolicy("top_k", 2))
    assert sets["up"] == {0}
    assert sets["down"] == {1}


def test_token_count_mismatch_is_structural():
    with pytest.raises(StructuralError):
        extract_feature_sets(expl([0.1, 0.2]), TASK, n_tokens=3)


def test_count_chunks_counts_all_surviving_tokens():
    sets = extract_feature_sets(expl([0.9, -0.8, 0.0]), TASK, ExtractionPolicy("top_k", 5))
    assert count_chunks(sets) == 2


class TestPolicyValidation:
    def test_parse(self):
        p = ExtractionPolicy.parse("relative_threshold:0.1")
        assert p.mode is PolicyMode.RELATIVE_THRESHOLD
        assert p.value == 0.1

    @pytest.mark.parametrize("text", ["relative_threshold", "nope:0.1", "top_k:abc"])
    def test_parse_rejects_malformed(self, text):
        with pytest.raises(ConfigError):
            ExtractionPolicy.parse(text)

    def test_relative_fraction_bounds(self):
        with pytest.raises(ConfigError):
            ExtractionPolicy("relative_threshold", 1.5)

    def test_absolute_nonnegative(self):
        with pytest.raises(ConfigError):
            ExtractionPolicy("absolute_threshold", -0.1)

    def test_top_k_integral_and_positive(self):
        with pytest.raises(ConfigError):
            ExtractionPolicy("top_k", 0)
        with pytest.raises(ConfigError):
            ExtractionPolicy("top_k", 2.5)
        assert ExtractionPolicy("top_k", 3.0).value == 3.0
