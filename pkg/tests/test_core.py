import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from curiositree.core import (
    CLASS_ORDER,
    DEFAULT_COSTS,
    Action,
    ActionClass,
    Attachment,
    CandidateDistribution,
    ConsistencyMask,
    History,
    Label,
    Outcome,
    TrialConfig,
    TrialOutcome,
    TrialResult,
    affordable,
    cumulative_cost,
    normalize_scores,
    normalize_text,
)
from curiositree.errors import AllZeroScores


class TestNormalizeText:
    def test_lowercases_and_strips_punctuation(self):
        assert normalize_text("Lupus!") == "lupus"
        assert normalize_text("Crohn's Disease") == "crohns disease"

    def test_collapses_whitespace(self):
        assert normalize_text("  iron   deficiency \t anemia ") == "iron deficiency anemia"

    def test_hyphen_removed_without_inserting_space(self):
        assert normalize_text("X-linked") == "xlinked"

    def test_digits_kept(self):
        assert normalize_text("Type 2 Diabetes") == "type 2 diabetes"


class TestLabel:
    def test_equality_by_normalized_key(self):
        assert Label("Lupus") == Label("  lupus!!")
        assert hash(Label("Lupus")) == hash(Label("lupus"))
        assert Label("lupus") != Label("gout")

    def test_original_text_preserved(self):
        assert Label("Lupus (SLE)").text == "Lupus (SLE)"
        assert Label("Lupus (SLE)").key == "lupus sle"

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Label("")
        with pytest.raises(ValueError):
            Label("   ")

    def test_usable_in_sets(self):
        assert len({Label("Lupus"), Label("lupus"), Label("gout")}) == 2


class TestActionClass:
    def test_wire_values(self):
        assert ActionClass.REASONING.value == "reasoning"
        assert ActionClass.RETRIEVAL.value == "retrieval"
        assert ActionClass.QUESTION.value == "question"
        assert ActionClass.LAB_TEST.value == "labtest"

    def test_class_order_covers_all(self):
        assert set(CLASS_ORDER) == set(ActionClass)

    def test_default_costs(self):
        assert DEFAULT_COSTS[ActionClass.REASONING] == 1.0
        assert DEFAULT_COSTS[ActionClass.RETRIEVAL] == 1.0
        assert DEFAULT_COSTS[ActionClass.QUESTION] == 2.0
        assert DEFAULT_COSTS[ActionClass.LAB_TEST] == 3.0


class TestAction:
    def test_rejects_blank_payload(self):
        with pytest.raises(ValueError):
            Action(ActionClass.QUESTION, " ", 2.0)

    def test_rejects_negative_cost(self):
        with pytest.raises(ValueError):
            Action(ActionClass.QUESTION, "any fever?", -1.0)

    def test_attachment_carried(self):
        att = Attachment("doc-1", "some text")
        action = Action(ActionClass.RETRIEVAL, "rash overview", 1.0, att)
        assert action.attachment.doc_id == "doc-1"


class TestHistory:
    def test_append_and_iterate(self):
        h = History()
        assert not h
        h.append(Action(ActionClass.REASONING, "think", 1.0), Outcome())
        h.append(Action(ActionClass.QUESTION, "fever?", 2.0), Outcome("yes"))
        assert len(h) == 2
        assert [s.action.payload for s in h] == ["think", "fever?"]
        assert h.steps[0].outcome.present is False
        assert h.steps[1].outcome.present is True

    def test_steps_snapshot_is_immutable(self):
        h = History()
        h.append(Action(ActionClass.REASONING, "think", 1.0), Outcome())
        snap = h.steps
        h.append(Action(ActionClass.REASONING, "more", 1.0), Outcome())
        assert len(snap) == 1

    def test_cumulative_cost(self):
        h = History()
        h.append(Action(ActionClass.QUESTION, "fever?", 2.0), Outcome("yes"))
        h.append(Action(ActionClass.LAB_TEST, "cbc", 3.0), Outcome("normal"))
        assert cumulative_cost(h) == 5.0
        assert cumulative_cost(History()) == 0.0


class TestNormalizeScores:
    def test_simple(self):
        assert normalize_scores([2.0, 3.0, 5.0]) == [0.2, 0.3, 0.5]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            normalize_scores([])

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            normalize_scores([0.5, -0.1])

    def test_all_zero_raises_dedicated_error(self):
        with pytest.raises(AllZeroScores):
            normalize_scores([0.0, 0.0])
        with pytest.raises(AllZeroScores):
            normalize_scores([1e-15, 1e-14])

    @given(st.lists(st.floats(min_value=1e-6, max_value=1e6), min_size=1, max_size=10))
    def test_output_is_probability_vector(self, raw):
        out = normalize_scores(raw)
        assert abs(sum(out) - 1.0) < 1e-9
        assert all(p >= 0 for p in out)
        # normalization preserves score ratios
        top = raw.index(max(raw))
        assert out[top] == max(out)


class TestCandidateDistribution:
    def test_from_scores_sorts_descending(self):
        dist = CandidateDistribution.from_scores(
            [(Label("a"), 1.0), (Label("b"), 3.0), (Label("c"), 1.0)]
        )
        assert [l.text for l in dist.labels()] == ["b", "a", "c"]
        assert dist.probs() == (0.6, 0.2, 0.2)
        assert dist.top() == (Label("b"), 0.6)
        assert dist.k == 3

    def test_stable_on_ties(self):
        dist = CandidateDistribution.from_scores(
            [(Label("x"), 1.0), (Label("y"), 1.0), (Label("z"), 1.0)]
        )
        assert [l.text for l in dist.labels()] == ["x", "y", "z"]

    def test_rejects_duplicate_normalized_labels(self):
        with pytest.raises(ValueError):
            CandidateDistribution.from_scores([(Label("Lupus"), 1.0), (Label("lupus!"), 1.0)])

    def test_rejects_unsorted_entries(self):
        with pytest.raises(ValueError):
            CandidateDistribution(((Label("a"), 0.3), (Label("b"), 0.7)))

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            CandidateDistribution(((Label("a"), 0.6), (Label("b"), 0.3)))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            CandidateDistribution(())

    def test_single_entry(self):
        dist = CandidateDistribution(((Label("a"), 1.0),))
        assert dist.top() == (Label("a"), 1.0)


class TestConsistencyMask:
    def test_true_count(self):
        assert ConsistencyMask((True, False, True)).true_count == 2
        assert len(ConsistencyMask((True,))) == 1

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            ConsistencyMask(())


class TestTrialConfig:
    def test_defaults_match_evaluated_setting(self):
        config = TrialConfig()
        assert config.budget == 20.0
        assert config.tau == 0.8
        assert config.lam == 0.1
        assert config.k == 5
        assert config.per_class_candidates == 5
        assert config.mc_samples == 1
        assert config.retry_limit == 3
        assert config.costs == DEFAULT_COSTS
        assert config.allowed_classes == frozenset(CLASS_ORDER)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"budget": -1.0},
            {"tau": 1.5},
            {"tau": -0.1},
            {"lam": -0.5},
            {"k": 0},
            {"per_class_candidates": 0},
            {"mc_samples": 0},
            {"retry_limit": 0},
            {"allowed_classes": frozenset()},
            {"costs": {ActionClass.QUESTION: 2.0}},
            {"costs": {c: -1.0 for c in CLASS_ORDER}},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            TrialConfig(**kwargs)

    def test_zero_budget_allowed(self):
        assert TrialConfig(budget=0.0).budget == 0.0


class TestTrialResult:
    def test_abstain_carries_no_prediction(self):
        with pytest.raises(ValueError):
            TrialResult(TrialOutcome.ABSTAIN, Label("lupus"), 5.0, 3)

    def test_decided_needs_prediction(self):
        with pytest.raises(ValueError):
            TrialResult(TrialOutcome.SUCCESS, None, 5.0, 3)

    def test_valid_cases(self):
        ok = TrialResult(TrialOutcome.SUCCESS, Label("lupus"), 7.0, 4)
        assert ok.outcome is TrialOutcome.SUCCESS
        ab = TrialResult(TrialOutcome.ABSTAIN, None, 20.0, 11, abstain_reason="no_affordable_action")
        assert ab.abstain_reason == "no_affordable_action"


class TestAffordable:
    def test_boundary_inclusive(self):
        action = Action(ActionClass.QUESTION, "q", 2.0)
        assert affordable(action, spent=18.0, budget=20.0)
        assert not affordable(action, spent=18.5, budget=20.0)

    def test_zero_cost_always_affordable_within_budget(self):
        action = Action(ActionClass.REASONING, "r", 0.0)
        assert affordable(action, spent=20.0, budget=20.0)

    @given(
        st.floats(min_value=0, max_value=100),
        st.floats(min_value=0, max_value=100),
        st.floats(min_value=0, max_value=100),
    )
    def test_matches_inequality(self, cost, spent, budget):
        action = Action(ActionClass.QUESTION, "q", cost)
        assert affordable(action, spent, budget) == (spent + cost <= budget)


def test_entropy_helper_consistency():
    # sanity anchor for the shared math: uniform distribution entropy is ln k
    from curiositree.heuristics import shannon_entropy

    dist = CandidateDistribution.from_scores([(Label(f"d{i}"), 1.0) for i in range(5)])
    assert math.isclose(shannon_entropy(dist), math.log(5), abs_tol=1e-12)
